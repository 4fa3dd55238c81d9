"""Closed-form coherence models and their asymptotic T2 formulas.

Conventions: efficiencies are ``exp(-2 * Gamma)``; OU ``sigma`` is in
rad/s (see :class:`afcdd.ou.OuParams`); times are in seconds.
"""

from __future__ import annotations

import math

import numpy as np

from ._validation import check_scalar
from .ou import OuParams
from .sequences import SequenceKind

__all__ = [
    "sequence_alpha",
    "gamma_ou",
    "eta_ou",
    "eta_ou_simplified",
    "eta_stretched",
    "t2_power_law",
    "t2_1_from_ou",
    "t2_pulse_error",
    "t2_ou_limit",
    "t2_combined",
    "PowerLawParams",
]


def sequence_alpha(kind, epsilon):
    """Pulse-error decay coefficient: eps^2, eps^4/2, eps^6/4 for XX, XY4, XY8."""
    kind = SequenceKind.parse(kind)
    eps = np.asarray(epsilon, dtype=float)
    return {SequenceKind.XX: eps**2,
            SequenceKind.XY4: eps**4 / 2,
            SequenceKind.XY8: eps**6 / 4}[kind]


def gamma_ou(n, tau, ou: OuParams):
    """Dephasing exponent of an n-pulse CPMG train under OU diffusion.

    ``(sigma tau_c)^2 ([1/tau_c - (2/tau) tanh(tau/2tau_c)] n tau
    - [1 - sech(tau/2tau_c)]^2)``. Broadcasts over ``n`` and ``tau``.
    """
    n = np.asarray(n, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(n < 1) or np.any(tau <= 0):
        raise ValueError("need n >= 1 and tau > 0")
    tc = ou.tau_c
    u = tau / (2 * tc)
    # 1/tc - (2/tau) tanh(u) = (u - tanh u) / (u tc), stable for small u
    x = np.where(u < 1e-2, u**3 * (1 / 3 - u**2 * (2 / 15 - u**2 * 17 / 315)), u - np.tanh(u))
    rate = x / (u * tc)
    log_cosh = u + np.log1p(np.exp(-2 * u)) - math.log(2.0)
    edge = -np.expm1(-log_cosh)                 # 1 - sech(u)
    out = (ou.sigma * tc) ** 2 * (rate * n * tau - edge**2)
    return out[()] if out.ndim == 0 else out


def eta_ou(n, tau, ou: OuParams):
    return np.exp(-2 * gamma_ou(n, tau, ou))


def eta_ou_simplified(n, tau, ou: OuParams):
    """Short-``tau`` limit ``exp(-sigma^2 tau^3 n / (6 tau_c))``."""
    n = np.asarray(n, dtype=float)
    tau = np.asarray(tau, dtype=float)
    return np.exp(-ou.sigma**2 * tau**3 * n / (6 * ou.tau_c))


def eta_stretched(t, t2, alpha_exp):
    """``exp(-2 (t/T2)^alpha)``."""
    t2 = check_scalar(t2, "t2", min_val=0, include_min=False)
    alpha_exp = check_scalar(alpha_exp, "alpha_exp", min_val=0, include_min=False)
    return np.exp(-2 * (np.asarray(t, dtype=float) / t2) ** alpha_exp)


class PowerLawParams:
    """``T2(n) = t2_1 * n**gamma``."""

    def __init__(self, t2_1: float, gamma: float):
        self.t2_1 = check_scalar(t2_1, "t2_1", min_val=0, include_min=False)
        self.gamma = check_scalar(gamma, "gamma")

    def __repr__(self):
        return f"PowerLawParams(t2_1={self.t2_1!r}, gamma={self.gamma!r})"


def t2_power_law(n, p: PowerLawParams):
    n = np.asarray(n, dtype=float)
    if np.any(n < 1):
        raise ValueError("n must be >= 1")
    return p.t2_1 * n**p.gamma


def t2_1_from_ou(ou: OuParams) -> float:
    """Single-pulse coherence time ``(12 tau_c / sigma^2)^(1/3)``; inf when sigma is 0."""
    if ou.sigma == 0:
        return math.inf
    return (12 * ou.tau_c / ou.sigma**2) ** (1 / 3)


def t2_pulse_error(kind, epsilon, n_p: int | None = None, tau=1.0):
    """Pulse-area-error coherence time ``sqrt(2/alpha) * n_p * tau``.

    Infinite for ``epsilon == 0``.
    """
    kind = SequenceKind.parse(kind)
    n_p = kind.n_p if n_p is None else n_p
    alpha = sequence_alpha(kind, epsilon)
    tau = np.asarray(tau, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.sqrt(2 / alpha) * n_p * tau
    return out[()] if np.ndim(out) == 0 else out


def t2_ou_limit(tau, ou: OuParams):
    """OU-limited coherence time ``12 tau_c / (sigma^2 tau^2)`` at fixed ``tau``."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise ValueError("tau must be positive")
    with np.errstate(divide="ignore"):
        out = 12 * ou.tau_c / (ou.sigma**2 * tau**2)
    return out[()] if out.ndim == 0 else out


def t2_combined(kind, epsilon, n_p, tau, ou: OuParams):
    """Harmonic combination of the two asymptotic models.

    A visual interpolation aid for the crossover; no accuracy is claimed
    where both mechanisms are comparable.
    """
    with np.errstate(divide="ignore"):
        rate = 1 / t2_pulse_error(kind, epsilon, n_p, tau) + 1 / t2_ou_limit(tau, ou)
        out = 1 / rate
    return out[()] if np.ndim(out) == 0 else out
