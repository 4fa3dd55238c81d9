"""Least-squares fitting of decay curves and derived coherence times.

The regressors follow the scikit-learn estimator protocol (``fit`` /
``predict`` / ``get_params``); the ``fit_*`` functions wrap them and return
a :class:`FitResult`. Nonlinear fits run MINPACK Levenberg-Marquardt in
unconstrained coordinates (logs for scales, a scaled logistic for bounded
exponents and offsets) from a fixed grid of starting points.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.special import expit, logit
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_1d, check_sigma
from .coherence import gamma_ou, sequence_alpha
from .curves import DecayCurve
from .ou import OuParams
from .sequences import SequenceKind

__all__ = [
    "FitModel",
    "FitResult",
    "FitError",
    "DecayCurveRegressor",
    "PowerLawRegressor",
    "OUGlobalRegressor",
    "PulseErrorRegressor",
    "fit_decay",
    "fit_power_law",
    "fit_ou_global",
    "fit_epsilon_from_t2",
    "compare_models",
]

ALPHA_BOUNDS = (0.3, 3.0)
_COST_AGREEMENT = 1e-6


class FitError(ValueError):
    """Input that cannot be fitted (too few points, degenerate values)."""


class FitModel(str, enum.Enum):
    EXP = "EXP"
    GAUSS = "GAUSS"
    STRETCHED = "STRETCHED"
    STRETCHED_OFFSET = "STRETCHED_OFFSET"
    POWER_LAW = "POWER_LAW"
    OU_GLOBAL = "OU_GLOBAL"
    PULSE_ERROR = "PULSE_ERROR"

    @classmethod
    def parse(cls, model) -> "FitModel":
        if isinstance(model, cls):
            return model
        try:
            return cls(str(model).upper().replace("-", "_"))
        except ValueError:
            raise ValueError(f"unknown fit model {model!r}") from None


@dataclass
class FitResult:
    model: FitModel
    params: dict
    param_errors: dict
    chi2_reduced: float
    converged: bool
    weighted: bool = True
    n_points: int = 0
    notes: list = field(default_factory=list)

    @property
    def usable(self) -> bool:
        return self.converged

    def to_dict(self):
        return {"model": self.model.value, "params": self.params,
                "param_errors": self.param_errors, "chi2_reduced": self.chi2_reduced,
                "converged": self.converged, "usable": self.usable, "weighted": self.weighted,
                "n_points": self.n_points, "notes": list(self.notes)}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


# ---------------------------------------------------------------------------
# shared multi-start Levenberg-Marquardt driver


@dataclass
class _Solution:
    z: np.ndarray
    cov_z: np.ndarray
    chi2_reduced: float
    converged: bool
    agreeing_starts: int
    rms: float


def _central_jacobian(fun, z, rel=1e-6):
    z = np.asarray(z, dtype=float)
    f0 = fun(z)
    jac = np.empty((f0.size, z.size))
    for j in range(z.size):
        h = rel * max(1.0, abs(z[j]))
        zp, zm = z.copy(), z.copy()
        zp[j] += h
        zm[j] -= h
        jac[:, j] = (fun(zp) - fun(zm)) / (2 * h)
    return jac


def _solve(residuals, starts, weighted: bool) -> _Solution:
    """Run LM from every start, keep the lowest cost, estimate covariance."""
    runs = []
    for z0 in starts:
        try:
            with np.errstate(all="ignore"):
                res = least_squares(residuals, np.asarray(z0, dtype=float), method="lm",
                                    xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=4000)
        except (ValueError, FloatingPointError):
            continue
        if np.all(np.isfinite(res.fun)):
            runs.append(res)
    if not runs:
        raise FitError("no starting point produced a finite fit")
    best = min(runs, key=lambda r: r.cost)
    tol = _COST_AGREEMENT * max(best.cost, 1e-300) + 1e-24
    # near a perfect fit the costs are roundoff, so coinciding solutions also count
    agreeing = sum(1 for r in runs if r.cost - best.cost <= tol
                   or np.all(np.abs(r.x - best.x) <= _COST_AGREEMENT * (1 + np.abs(best.x))))
    r = residuals(best.x)
    dof = max(r.size - best.x.size, 1)
    chi2_red = float(r @ r / dof)
    jac = _central_jacobian(residuals, best.x)
    try:
        cov = np.linalg.inv(jac.T @ jac)
        ok = bool(np.all(np.isfinite(cov)) and np.all(np.diag(cov) >= 0))
    except np.linalg.LinAlgError:
        cov = np.full((best.x.size, best.x.size), np.inf)
        ok = False
    if not weighted:
        cov = cov * chi2_red
    converged = bool(best.success and ok and agreeing >= 2)
    return _Solution(best.x, cov, chi2_red, converged, agreeing, float(math.sqrt(r @ r / r.size)))


def _natural_errors(to_natural, z, cov_z):
    """Propagate the coordinate covariance to natural parameters."""
    jac = _central_jacobian(lambda v: np.asarray(to_natural(v), dtype=float), z)
    cov = jac @ cov_z @ jac.T
    return np.sqrt(np.clip(np.diag(cov), 0, None))


def _as_1d_input(X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = check_array(X)
        if X.shape[1] != 1:
            raise ValueError(f"{name} must have exactly one feature")
        return X[:, 0]
    return check_1d(X, name)


def _resolve_sigma(sigma, sample_weight, n):
    if sigma is not None and sample_weight is not None:
        raise ValueError("pass either sigma or sample_weight, not both")
    if sample_weight is not None:
        w = check_1d(sample_weight, "sample_weight", positive=True)
        return check_sigma(1 / np.sqrt(w), n)
    return check_sigma(sigma, n)


# ---------------------------------------------------------------------------
# single-curve decay models


def _alpha_of(s):
    lo, hi = ALPHA_BOUNDS
    return lo + (hi - lo) * expit(s)


def _alpha_coord(alpha):
    lo, hi = ALPHA_BOUNDS
    return logit((alpha - lo) / (hi - lo))


class _DecayForm:
    names: tuple

    def __init__(self, t, eta):
        self.c_max = float(max(np.max(eta), 1e-12))

    def natural(self, z):
        raise NotImplementedError

    def predict(self, t, z):
        raise NotImplementedError

    def starts(self, t, eta):
        raise NotImplementedError


def _t2_scales(t):
    span = float(np.max(t)) if np.max(t) > 0 else 1.0
    return span * np.array([0.05, 0.15, 0.5, 1.5, 5.0])


class _Exp(_DecayForm):
    names = ("A", "t2")
    power = 1.0

    def natural(self, z):
        return np.exp(z[0]), np.exp(z[1])

    def predict(self, t, z):
        a, t2 = self.natural(z)
        return a * np.exp(-2 * (t / t2) ** self.power)

    def starts(self, t, eta):
        amps = [self.c_max, 1.0]
        return [(math.log(a), math.log(s)) for a in amps for s in _t2_scales(t)]


class _Gauss(_Exp):
    power = 2.0


class _Stretched(_DecayForm):
    names = ("A", "t2", "alpha")

    def natural(self, z):
        return np.exp(z[0]), np.exp(z[1]), _alpha_of(z[2])

    def predict(self, t, z):
        a, t2, al = self.natural(z)
        return a * np.exp(-2 * (t / t2) ** al)

    def starts(self, t, eta):
        return [(math.log(self.c_max), math.log(s), _alpha_coord(al))
                for s in _t2_scales(t)[:4] for al in (0.8, 1.5, 2.5)]


class _StretchedOffset(_DecayForm):
    names = ("eta0", "t2", "alpha", "c")

    def natural(self, z):
        return (np.exp(z[0]), np.exp(z[1]), _alpha_of(z[2]), self.c_max * expit(z[3]))

    def predict(self, t, z):
        e0, t2, al, c = self.natural(z)
        return e0 * np.exp(-2 * (t / t2) ** al) + c

    def starts(self, t, eta):
        floor = float(np.clip(np.min(eta) / self.c_max, 0.02, 0.9))
        return [(math.log(self.c_max), math.log(s), _alpha_coord(al), logit(cf))
                for s in _t2_scales(t)[:4] for al in (0.8, 1.5, 2.5) for cf in (0.02, floor)]


_FORMS = {FitModel.EXP: _Exp, FitModel.GAUSS: _Gauss, FitModel.STRETCHED: _Stretched,
          FitModel.STRETCHED_OFFSET: _StretchedOffset}


class DecayCurveRegressor(RegressorMixin, BaseEstimator):
    """Fit ``eta(t)`` to one decay model.

    Parameters
    ----------
    model : {"EXP", "GAUSS", "STRETCHED", "STRETCHED_OFFSET"}
        ``A exp(-2 t/T2)``, ``A exp(-2 (t/T2)^2)``, ``A exp(-2 (t/T2)^alpha)``
        or ``eta0 exp(-2 (t/T2)^alpha) + c``. ``alpha`` is confined to
        [0.3, 3] and ``c`` to [0, max(eta)].

    Attributes
    ----------
    params_, param_errors_ : dict
        Fitted values and one-standard-deviation errors.
    chi2_reduced_ : float
    converged_ : bool
        False when the optimiser failed, the covariance is singular, or no
        second start reached the best cost.
    rms_residual_ : float
        Root-mean-square of ``predict(t) - eta`` in efficiency units.
    """

    def __init__(self, model="STRETCHED"):
        self.model = model

    def fit(self, X, y, sigma=None, sample_weight=None):
        model = FitModel.parse(self.model)
        if model not in _FORMS:
            raise ValueError(f"{model.value} is not a single-curve decay model")
        t = _as_1d_input(X, "t")
        eta = check_1d(y, "eta")
        if t.shape != eta.shape:
            raise ValueError("t and eta must have equal length")
        sig = _resolve_sigma(sigma, sample_weight, t.size)
        form = _FORMS[model](t, eta)
        if t.size < len(form.names) + 2:
            raise FitError(f"{model.value} needs at least {len(form.names) + 2} points, "
                           f"got {t.size}")
        weights = 1.0 if sig is None else 1.0 / sig

        def residuals(z):
            return (form.predict(t, z) - eta) * weights

        sol = _solve(residuals, form.starts(t, eta), weighted=sig is not None)
        values = form.natural(sol.z)
        errors = _natural_errors(form.natural, sol.z, sol.cov_z)
        self.model_ = model
        self._form = form
        self.coef_ = sol.z
        self.params_ = {k: float(v) for k, v in zip(form.names, values)}
        self.param_errors_ = {k: float(v) for k, v in zip(form.names, errors)}
        self.chi2_reduced_ = sol.chi2_reduced
        self.converged_ = sol.converged
        self.weighted_ = sig is not None
        self.rms_residual_ = float(np.sqrt(np.mean((form.predict(t, sol.z) - eta) ** 2)))
        self.n_agreeing_starts_ = sol.agreeing_starts
        self.n_points_ = t.size
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return self._form.predict(_as_1d_input(X, "t"), self.coef_)

    def result(self) -> FitResult:
        check_is_fitted(self, "coef_")
        notes = [] if self.weighted_ else ["unweighted: no sigma_eta supplied"]
        return FitResult(self.model_, dict(self.params_), dict(self.param_errors_),
                         self.chi2_reduced_, self.converged_, self.weighted_, self.n_points_,
                         notes)


def fit_decay(curve: DecayCurve, model) -> FitResult:
    """Weighted least-squares fit of one decay curve."""
    reg = DecayCurveRegressor(model).fit(curve.t_spin, curve.eta, sigma=curve.sigma_eta)
    if not reg.weighted_:
        warnings.warn("fitting without sigma_eta; errors scaled by the residual scatter",
                      stacklevel=2)
    return reg.result()


# ---------------------------------------------------------------------------
# power law T2(n) = T2(1) n^gamma


class PowerLawRegressor(RegressorMixin, BaseEstimator):
    """Weighted linear regression of ``ln T2`` on ``ln n``."""

    def fit(self, X, y, sigma=None, sample_weight=None):
        n = _as_1d_input(X, "n")
        t2 = check_1d(y, "t2")
        if n.shape != t2.shape:
            raise ValueError("n and t2 must have equal length")
        if n.size < 3:
            raise FitError("power-law fit needs at least 3 points")
        if np.any(t2 <= 0) or np.any(n <= 0):
            raise FitError("n and T2 must be strictly positive")
        sig = _resolve_sigma(sigma, sample_weight, n.size)
        x, yl = np.log(n), np.log(t2)
        w = np.ones_like(x) if sig is None else (t2 / sig) ** 2
        design = np.column_stack([np.ones_like(x), x])
        a = design.T @ (design * w[:, None])
        coef = np.linalg.solve(a, design.T @ (w * yl))
        resid = yl - design @ coef
        dof = n.size - 2
        chi2_red = float(np.sum(w * resid**2) / dof)
        cov = np.linalg.inv(a)
        if sig is None:
            cov = cov * chi2_red
        self.coef_ = coef
        self.t2_1_ = float(np.exp(coef[0]))
        self.gamma_ = float(coef[1])
        self.params_ = {"t2_1": self.t2_1_, "gamma": self.gamma_}
        self.param_errors_ = {"t2_1": float(self.t2_1_ * math.sqrt(cov[0, 0])),
                              "gamma": float(math.sqrt(cov[1, 1]))}
        self.chi2_reduced_ = chi2_red
        self.weighted_ = sig is not None
        self.n_points_ = n.size
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        n = _as_1d_input(X, "n")
        return self.t2_1_ * n**self.gamma_

    def result(self) -> FitResult:
        check_is_fitted(self, "coef_")
        return FitResult(FitModel.POWER_LAW, dict(self.params_), dict(self.param_errors_),
                         self.chi2_reduced_, True, self.weighted_, self.n_points_)


def _unpack_triples(points, names):
    arr = [tuple(p) for p in points]
    if not arr:
        raise FitError("no points given")
    cols = list(zip(*arr))
    x = np.asarray(cols[0], dtype=float)
    y = np.asarray(cols[1], dtype=float)
    sig = None
    if len(cols) > 2 and all(v is not None for v in cols[2]):
        sig = np.asarray(cols[2], dtype=float)
    return x, y, sig


def fit_power_law(t2_vs_n) -> FitResult:
    """Fit ``(n, T2[, sigma_T2])`` triples to ``T2(1) n^gamma``."""
    n, t2, sig = _unpack_triples(t2_vs_n, ("n", "t2"))
    return PowerLawRegressor().fit(n, t2, sigma=sig).result()


# ---------------------------------------------------------------------------
# global OU fit across curves at several pulse numbers


class OUGlobalRegressor(RegressorMixin, BaseEstimator):
    """Shared OU parameters with one free amplitude per pulse number.

    ``X`` has columns ``(n, tau_s)``; the model is
    ``A_n exp(-2 Gamma(n, tau))`` with ``Gamma`` the CPMG OU exponent.
    Starting points span sigma/2pi in {5, 15, 40} Hz and tau_c in
    {2, 10, 50} ms.
    """

    sigma_hz_starts = (5.0, 15.0, 40.0)
    tau_c_starts = (2e-3, 10e-3, 50e-3)

    def fit(self, X, y, sigma=None, sample_weight=None):
        X = check_array(X, ensure_min_features=2)
        n, tau = X[:, 0], X[:, 1]
        eta = check_1d(y, "eta")
        if eta.size != n.size:
            raise ValueError("X and y must have equal length")
        if np.any(n < 1) or np.any(tau <= 0):
            raise FitError("OU fit needs n >= 1 and tau > 0 for every point")
        sig = _resolve_sigma(sigma, sample_weight, n.size)
        groups = np.unique(n)
        gidx = np.searchsorted(groups, n)
        n_par = 2 + groups.size
        if n.size < n_par + 2:
            raise FitError(f"OU global fit needs at least {n_par + 2} points")
        weights = 1.0 if sig is None else 1.0 / sig
        amp0 = np.array([max(eta[gidx == g].max(), 1e-6) for g in range(groups.size)])

        def natural(z):
            return np.concatenate([[np.exp(z[0]) / (2 * math.pi), np.exp(z[1])], z[2:]])

        def model(z, n_, tau_, g_):
            ou = OuParams(float(np.exp(z[0])), float(np.exp(z[1])))
            return z[2:][g_] * np.exp(-2 * gamma_ou(n_, tau_, ou))

        def residuals(z):
            return (model(z, n, tau, gidx) - eta) * weights

        starts = [np.concatenate([[math.log(2 * math.pi * s), math.log(tc)], amp0])
                  for s in self.sigma_hz_starts for tc in self.tau_c_starts]
        sol = _solve(residuals, starts, weighted=sig is not None)
        values = natural(sol.z)
        errors = _natural_errors(natural, sol.z, sol.cov_z)
        names = ["sigma_hz", "tau_c"] + [f"A_{int(g)}" for g in groups]
        self.groups_ = groups
        self.coef_ = sol.z
        self._model = model
        self.sigma_hz_ = float(values[0])
        self.tau_c_ = float(values[1])
        self.ou_params_ = OuParams.from_hz(self.sigma_hz_, self.tau_c_)
        self.params_ = {k: float(v) for k, v in zip(names, values)}
        self.param_errors_ = {k: float(v) for k, v in zip(names, errors)}
        self.chi2_reduced_ = sol.chi2_reduced
        self.converged_ = sol.converged
        self.weighted_ = sig is not None
        self.n_points_ = n.size
        return self

    def predict(self, X, amplitude=None):
        """Efficiency at ``(n, tau)``; unseen ``n`` uses ``amplitude`` (default 1)."""
        check_is_fitted(self, "coef_")
        X = check_array(X, ensure_min_features=2)
        n, tau = X[:, 0], X[:, 1]
        amps = dict(zip(self.groups_.tolist(), self.coef_[2:]))
        a = np.array([amps.get(v, 1.0 if amplitude is None else amplitude) for v in n])
        return a * np.exp(-2 * gamma_ou(n, tau, self.ou_params_))

    def result(self) -> FitResult:
        check_is_fitted(self, "coef_")
        notes = ["per-curve amplitudes A_n are free parameters"]
        if not self.weighted_:
            notes.append("unweighted: no sigma_eta supplied")
        return FitResult(FitModel.OU_GLOBAL, dict(self.params_), dict(self.param_errors_),
                         self.chi2_reduced_, self.converged_, self.weighted_, self.n_points_,
                         notes)


def _curve_n(curve: DecayCurve):
    if "n" not in curve.meta:
        raise FitError("fixed-n curves must carry meta['n']")
    return int(curve.meta["n"])


def fit_ou_global(curves, ns=None) -> FitResult:
    """Global OU fit of fixed-``n`` curves (``n`` from ``ns`` or ``meta['n']``)."""
    curves = list(curves)
    if not curves:
        raise FitError("no curves given")
    ns = [_curve_n(c) for c in curves] if ns is None else list(ns)
    rows, eta, sig = [], [], []
    weighted = all(c.sigma_eta is not None for c in curves)
    for c, n in zip(curves, ns):
        keep = c.t_spin > 0
        rows.append(np.column_stack([np.full(keep.sum(), n), c.t_spin[keep] / n]))
        eta.append(c.eta[keep])
        if weighted:
            sig.append(c.sigma_eta[keep])
    X = np.vstack(rows)
    reg = OUGlobalRegressor().fit(X, np.concatenate(eta),
                                  sigma=np.concatenate(sig) if weighted else None)
    return reg.result()


# ---------------------------------------------------------------------------
# pulse-area error from T2 versus tau


class PulseErrorRegressor(RegressorMixin, BaseEstimator):
    """Fit ``T2 = sqrt(2/alpha(eps)) n_p tau`` through the origin for ``eps``."""

    def __init__(self, kind="XX"):
        self.kind = kind

    def fit(self, X, y, sigma=None, sample_weight=None):
        kind = SequenceKind.parse(self.kind)
        tau = _as_1d_input(X, "tau")
        t2 = check_1d(y, "t2")
        if tau.shape != t2.shape:
            raise ValueError("tau and t2 must have equal length")
        if tau.size < 2 or np.all(tau == 0):
            raise FitError("need at least 2 points with non-zero tau")
        sig = _resolve_sigma(sigma, sample_weight, tau.size)
        w = np.ones_like(tau) if sig is None else 1 / sig**2
        denom = np.sum(w * tau**2)
        slope = float(np.sum(w * tau * t2) / denom)
        if slope <= 0:
            raise FitError("T2 versus tau has non-positive slope")
        resid = t2 - slope * tau
        dof = max(tau.size - 1, 1)
        chi2_red = float(np.sum(w * resid**2) / dof)
        var_slope = 1 / denom * (chi2_red if sig is None else 1.0)
        # alpha = c eps^p  =>  slope = n_p sqrt(2/c) eps^(-p/2)
        c, p = {SequenceKind.XX: (1.0, 2), SequenceKind.XY4: (0.5, 4),
                SequenceKind.XY8: (0.25, 6)}[kind]
        eps = (kind.n_p * math.sqrt(2 / c) / slope) ** (2 / p)
        self.kind_ = kind
        self.slope_ = slope
        self.epsilon_ = eps
        self.params_ = {"epsilon": eps, "slope": slope}
        self.param_errors_ = {"epsilon": (2 / p) * eps * math.sqrt(var_slope) / slope,
                              "slope": math.sqrt(var_slope)}
        self.chi2_reduced_ = chi2_red
        self.weighted_ = sig is not None
        self.n_points_ = tau.size
        return self

    def predict(self, X):
        check_is_fitted(self, "slope_")
        return self.slope_ * _as_1d_input(X, "tau")

    def result(self) -> FitResult:
        check_is_fitted(self, "slope_")
        return FitResult(FitModel.PULSE_ERROR, dict(self.params_), dict(self.param_errors_),
                         self.chi2_reduced_, True, self.weighted_, self.n_points_,
                         [f"kind={self.kind_.value}", f"alpha(eps)="
                          f"{float(sequence_alpha(self.kind_, self.epsilon_)):.6g}"])


def fit_epsilon_from_t2(t2_vs_tau, kind="XX") -> FitResult:
    """Pulse-area error from ``(tau, T2[, sigma_T2])`` triples in the linear regime."""
    tau, t2, sig = _unpack_triples(t2_vs_tau, ("tau", "t2"))
    return PulseErrorRegressor(kind).fit(tau, t2, sigma=sig).result()


def compare_models(curve: DecayCurve):
    """Fit EXP, GAUSS and STRETCHED; report each T2 and its deviation from the mean."""
    fits = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for m in (FitModel.EXP, FitModel.GAUSS, FitModel.STRETCHED):
            fits[m] = fit_decay(curve, m)
    mean = float(np.mean([f.params["t2"] for f in fits.values()]))
    return [{"model": m.value, "t2": f.params["t2"], "t2_err": f.param_errors["t2"],
             "deviation": f.params["t2"] / mean - 1.0, "converged": f.converged}
            for m, f in fits.items()]
