"""Monte-Carlo ensemble of spins under dynamical decoupling.

Each trajectory carries a static Gaussian detuning plus an OU fluctuation.
Free evolution between pulses is a z-rotation by the accumulated phase,
pulses are instantaneous rotations of area ``pi + epsilon`` about an
equatorial axis. The propagator of trajectory ``j`` is tracked by its
Cayley-Klein pair ``(a, b)``, ``U = [[a, b], [-b*, a*]]``.

The retained coherence of one spin is ``a**2``: writing the transverse
map as ``m+ -> a**2 m+ - b**2 conj(m+)``, the conjugate term carries the
inverted optical phase and does not contribute to the collective echo.
The ensemble efficiency is ``|mean(a**2)|**2``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array

from ._validation import check_int, check_scalar
from .afc import fwhm_to_std
from .curves import DecayCurve
from .ou import OuParams, segment_joint_step
from .rng import derive_seed, stream_normals
from .sequences import DdSequence, SequenceKind, build_sequence, free_evolution

__all__ = [
    "EnsembleConfig",
    "SimResult",
    "simulate",
    "simulate_decay_fixed_n",
    "simulate_decay_fixed_tau",
    "trajectory_phases",
    "propagate_su2",
    "propagate_ideal",
    "MonteCarloDecay",
    "default_threads",
]

THREADS_ENV = "AFCDD_THREADS"
_CHUNK = 8192


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class EnsembleConfig:
    """Trajectory count, static linewidth (FWHM, Hz), seed and batching.

    ``batch_size=None`` picks ``n_traj // 20`` when that divides evenly, so
    the standard error comes from 20 batch means.
    """

    n_traj: int = 100_000
    gamma_inh: float = 30e3
    seed: int = 0
    batch_size: int | None = None

    def __post_init__(self):
        check_int(self.n_traj, "n_traj", min_val=1)
        check_scalar(self.gamma_inh, "gamma_inh", min_val=0)
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.batch_size is not None:
            bs = check_int(self.batch_size, "batch_size", min_val=1)
            if self.n_traj % bs:
                raise ValueError("batch_size must divide n_traj")

    @property
    def resolved_batch_size(self) -> int:
        if self.batch_size is not None:
            return self.batch_size
        if self.n_traj >= 20 and self.n_traj % 20 == 0:
            return self.n_traj // 20
        return 1

    @property
    def n_batches(self) -> int:
        return self.n_traj // self.resolved_batch_size


@dataclass(frozen=True)
class SimResult:
    eta_spin: float
    std_err: float
    amplitude: complex
    n_traj: int


def trajectory_phases(seq: DdSequence, ou: OuParams, gamma_inh: float, seed: int, traj_index):
    """Free-evolution phase of every segment for the given trajectories.

    Returns an array of shape ``(len(traj_index), n + 1)`` in radians.
    Draw layout per trajectory: static detuning, OU initial value, then two
    normals per segment.
    """
    durations = seq.segment_durations()
    n_seg = durations.size
    z = stream_normals(seed, traj_index, 2 + 2 * n_seg)
    static = 2.0 * math.pi * fwhm_to_std(gamma_inh) * z[:, 0]
    x = ou.sigma * z[:, 1]
    phases = np.empty((z.shape[0], n_seg))
    for k, dur in enumerate(durations):
        x, integral = segment_joint_step(ou, x, float(dur), z[:, 2 + 2 * k], z[:, 3 + 2 * k])
        phases[:, k] = static * dur + integral
    return phases


def propagate_su2(seq: DdSequence, phases):
    """Retained coherence ``a**2`` per trajectory, general pulse areas."""
    phases = np.atleast_2d(phases)
    a = np.exp(-0.5j * phases[:, 0])
    b = np.zeros_like(a)
    for k, pulse in enumerate(seq.pulses):
        pa = math.cos(pulse.area / 2)
        pb = -1j * math.sin(pulse.area / 2) * np.exp(-1j * pulse.phase)
        a, b = pa * a - pb * np.conj(b), pa * b + pb * np.conj(a)
        free = np.exp(-0.5j * phases[:, k + 1])
        a, b = free * a, free * b
    return a * a


def _ideal_prefactor(seq: DdSequence) -> complex:
    ideal = DdSequence(seq.kind, seq.n_s, seq.n_p, seq.tau,
                       tuple(type(p)(p.time, p.phase, math.pi) for p in seq.pulses), seq.t_spin)
    return complex(propagate_su2(ideal, np.zeros((1, seq.n + 1)))[0])


def propagate_ideal(seq: DdSequence, phases):
    """Toggling-frame shortcut for exact pi pulses.

    Ideal pulses commute with free evolution up to a sign flip of the
    phase, so the coherence is a constant times ``exp(-i sum_k s_k phi_k)``.
    """
    phases = np.atleast_2d(phases)
    return _ideal_prefactor(seq) * np.exp(-1j * (phases @ seq.segment_signs()))


def _is_ideal(seq: DdSequence) -> bool:
    return all(p.area == math.pi for p in seq.pulses)


def _amplitudes(seq, ou, gamma_inh, seed, traj_index):
    phases = trajectory_phases(seq, ou, gamma_inh, seed, traj_index)
    if _is_ideal(seq):
        return propagate_ideal(seq, phases)
    return propagate_su2(seq, phases)


def _batch_sums(values, batch_size):
    # fsum is exactly rounded, so the reduction is order independent
    blocks = values.reshape(-1, batch_size)
    re = np.array([math.fsum(row) for row in blocks.real])
    im = np.array([math.fsum(row) for row in blocks.imag])
    return re, im


def simulate(seq: DdSequence, ou: OuParams, ens: EnsembleConfig, threads: int | None = None
             ) -> SimResult:
    """Ensemble spin-storage efficiency for one schedule.

    Trajectory ``j`` always uses counter-based stream ``j`` of ``ens.seed``
    and the reduction uses exactly rounded sums, so the result is
    bit-identical for any ``threads``.
    """
    threads = default_threads() if threads is None else max(1, int(threads))
    n = ens.n_traj
    chunks = [np.arange(lo, min(lo + _CHUNK, n), dtype=np.uint64) for lo in range(0, n, _CHUNK)]

    def work(idx):
        return _amplitudes(seq, ou, ens.gamma_inh, ens.seed, idx)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(idx) for idx in chunks]
    amps = np.concatenate(parts)

    bs = ens.resolved_batch_size
    re_b, im_b = _batch_sums(amps, bs)
    mean = complex(math.fsum(re_b) / n, math.fsum(im_b) / n)
    eta = min(abs(mean) ** 2, 1.0)
    nb = n // bs
    if nb >= 2:
        means = np.stack([re_b / bs, im_b / bs])
        cov = np.cov(means, ddof=1) / nb
        grad = np.array([2 * mean.real, 2 * mean.imag])
        std_err = float(math.sqrt(max(grad @ cov @ grad, 0.0)))
    else:
        std_err = float("nan")
    return SimResult(eta_spin=eta, std_err=std_err, amplitude=mean, n_traj=n)


def _curve_from(points, meta, n_traj):
    t, eta, se = zip(*points)
    # a deterministic point has zero spread; floor at the 1/N resolution
    se = np.maximum(np.nan_to_num(np.array(se), nan=0.0), 1.0 / n_traj)
    return DecayCurve(np.array(t), np.array(eta), se, meta)


def _meta(kind, ou, ens, epsilon, **extra):
    return {"kind": SequenceKind.parse(kind).value, "sigma_hz": ou.sigma_hz, "tau_c_s": ou.tau_c,
            "epsilon_rad": epsilon, "gamma_inh_hz": ens.gamma_inh, "n_traj": ens.n_traj,
            "seed": int(ens.seed), **extra}


def simulate_decay_fixed_n(kind, n: int, tau_grid, ou: OuParams, ens: EnsembleConfig,
                           epsilon: float = 0.0, threads: int | None = None) -> DecayCurve:
    """Vary ``tau`` at a fixed total pulse count ``n``; indexed by ``n * tau``."""
    kind = SequenceKind.parse(kind)
    n = check_int(n, "n", min_val=kind.n_p)
    if n % kind.n_p:
        raise ValueError(f"n must be a multiple of {kind.n_p} for {kind.value}")
    taus = np.sort(np.asarray(tau_grid, dtype=float))
    if taus.size == 0:
        raise ValueError("tau_grid must be non-empty")
    points = []
    for i, tau in enumerate(taus):
        seq = build_sequence(kind, n // kind.n_p, tau, epsilon)
        point_ens = EnsembleConfig(ens.n_traj, ens.gamma_inh, derive_seed(ens.seed, 0, n, i),
                                   ens.batch_size)
        r = simulate(seq, ou, point_ens, threads)
        points.append((n * tau, r.eta_spin, r.std_err))
    return _curve_from(points, _meta(kind, ou, ens, epsilon, fixed="n", n=n), ens.n_traj)


def simulate_decay_fixed_tau(kind, tau: float, n_grid, ou: OuParams, ens: EnsembleConfig,
                             epsilon: float = 0.0, threads: int | None = None) -> DecayCurve:
    """Vary the pulse count at fixed ``tau``; indexed by ``n * tau``."""
    kind = SequenceKind.parse(kind)
    tau = check_scalar(tau, "tau", min_val=0, include_min=False)
    ns = sorted({check_int(v, "n", min_val=0) for v in n_grid})
    if not ns:
        raise ValueError("n_grid must be non-empty")
    if any(v % kind.n_p for v in ns):
        raise ValueError(f"every n must be a multiple of {kind.n_p} for {kind.value}")
    tag = int(round(tau * 1e9))
    points = []
    for i, n in enumerate(ns):
        if n == 0:
            seq = free_evolution(0.0, kind, tau)
        else:
            seq = build_sequence(kind, n // kind.n_p, tau, epsilon)
        point_ens = EnsembleConfig(ens.n_traj, ens.gamma_inh, derive_seed(ens.seed, 1, tag, i),
                                   ens.batch_size)
        r = simulate(seq, ou, point_ens, threads)
        points.append((n * tau, r.eta_spin, r.std_err))
    return _curve_from(points, _meta(kind, ou, ens, epsilon, fixed="tau", tau_s=tau), ens.n_traj)


class MonteCarloDecay(BaseEstimator):
    """Estimator-style front end to the simulator.

    Stateless: ``fit`` only validates parameters. ``predict`` takes rows of
    ``(n, tau_s)`` and returns the simulated efficiency for each, so the
    Monte-Carlo can stand in wherever a fitted decay model is expected.
    """

    def __init__(self, kind="XX", epsilon=0.0, sigma_hz=15.1, tau_c=9.5e-3, gamma_inh=30e3,
                 n_traj=20_000, seed=0, threads=None):
        self.kind = kind
        self.epsilon = epsilon
        self.sigma_hz = sigma_hz
        self.tau_c = tau_c
        self.gamma_inh = gamma_inh
        self.n_traj = n_traj
        self.seed = seed
        self.threads = threads

    def fit(self, X=None, y=None):
        self.kind_ = SequenceKind.parse(self.kind)
        self.ou_ = OuParams.from_hz(self.sigma_hz, self.tau_c)
        self.ensemble_ = EnsembleConfig(self.n_traj, self.gamma_inh, self.seed)
        return self

    def _simulate_rows(self, X):
        if not hasattr(self, "ou_"):
            self.fit()
        X = check_array(X, ensure_min_features=2)
        out = []
        for i, (n, tau) in enumerate(X[:, :2]):
            n = int(round(n))
            if n == 0:
                seq = free_evolution(0.0, self.kind_, tau)
            else:
                if n % self.kind_.n_p:
                    raise ValueError(f"n={n} is not a multiple of {self.kind_.n_p}")
                seq = build_sequence(self.kind_, n // self.kind_.n_p, tau, self.epsilon)
            ens = EnsembleConfig(self.n_traj, self.gamma_inh, derive_seed(self.seed, 2, i))
            out.append(simulate(seq, self.ou_, ens, self.threads))
        return out

    def predict(self, X):
        return np.array([r.eta_spin for r in self._simulate_rows(X)])

    def predict_with_error(self, X):
        rows = self._simulate_rows(X)
        return np.array([r.eta_spin for r in rows]), np.array([r.std_err for r in rows])
