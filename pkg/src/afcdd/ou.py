"""Ornstein-Uhlenbeck spectral diffusion.

The detuning ``x(t)`` (rad/s) relaxes to zero with correlation time
``tau_c`` and has stationary standard deviation ``sigma``. Between two
pulses the quantity that matters is the pair ``(x(T), integral of x)``,
which is jointly Gaussian given ``x(0)``; :func:`segment_joint_sample`
draws it exactly, so no time stepping is needed inside a segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_scalar
from .rng import RngStream

__all__ = [
    "OuParams",
    "sample_stationary",
    "ou_path",
    "segment_moments",
    "segment_joint_sample",
    "segment_joint_step",
]

_SERIES_CUTOFF = 1e-2


@dataclass(frozen=True)
class OuParams:
    """OU parameters; ``sigma`` in rad/s, ``tau_c`` in seconds."""

    sigma: float
    tau_c: float

    def __post_init__(self):
        check_scalar(self.sigma, "sigma", min_val=0)
        check_scalar(self.tau_c, "tau_c", min_val=0, include_min=False)

    @classmethod
    def from_hz(cls, sigma_hz: float, tau_c: float) -> "OuParams":
        return cls(2.0 * math.pi * sigma_hz, tau_c)

    @property
    def sigma_hz(self) -> float:
        return self.sigma / (2.0 * math.pi)


def _x_minus_tanh(x):
    """``x - tanh(x)`` without cancellation for small ``x``."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SERIES_CUTOFF
    x2 = x * x
    series = x * x2 * (1 / 3 - x2 * (2 / 15 - x2 * (17 / 315 - x2 * 62 / 2835)))
    return np.where(small, series, x - np.tanh(x))


def _segment_coefficients(params: OuParams, duration: float):
    """Coefficients of the exact segment map.

    Returns ``(decay, mean_int, sd_end, reg_int, sd_int_cond)`` such that with
    independent standard normals ``z1, z2``::

        x_T  = decay * x0 + sd_end * z1
        I    = mean_int * x0 + reg_int * z1 + sd_int_cond * z2
    """
    h = duration / params.tau_c
    em = -math.expm1(-h)                    # 1 - exp(-h)
    decay = 1.0 - em
    s, tc = params.sigma, params.tau_c
    mean_int = tc * em
    if h == 0.0:
        return decay, mean_int, 0.0, 0.0, 0.0
    sd_end = s * math.sqrt(em * (2.0 - em))
    reg_int = s * tc * em**1.5 / math.sqrt(2.0 - em)
    cond_var = 4.0 * float(_x_minus_tanh(h / 2.0))   # = 2 (h - 2 tanh(h/2))
    sd_int_cond = s * tc * math.sqrt(max(cond_var, 0.0))
    return decay, mean_int, sd_end, reg_int, sd_int_cond


def segment_moments(params: OuParams, x0: float, duration: float):
    """Conditional mean vector and covariance of ``(x_T, integral)`` given ``x0``."""
    decay, mean_int, sd_end, reg_int, sd_int_cond = _segment_coefficients(params, duration)
    mean = np.array([decay * x0, mean_int * x0])
    cov = np.array([[sd_end**2, sd_end * reg_int],
                    [sd_end * reg_int, reg_int**2 + sd_int_cond**2]])
    return mean, cov


def sample_stationary(params: OuParams, rng: RngStream) -> float:
    return params.sigma * rng.normal()


def ou_path(params: OuParams, x0: float, dt: float, steps: int, rng: RngStream):
    """Sample ``x`` on a uniform grid with the exact AR(1) recursion.

    Returns an array of length ``steps + 1`` starting at ``x0``.
    """
    dt = check_scalar(dt, "dt", min_val=0, include_min=False)
    a = math.exp(-dt / params.tau_c)
    b = params.sigma * math.sqrt(-math.expm1(-2.0 * dt / params.tau_c))
    z = rng.normal(steps)
    x = np.empty(steps + 1)
    x[0] = x0
    for k in range(steps):
        x[k + 1] = a * x[k] + b * z[k]
    return x


def segment_joint_step(params: OuParams, x0, duration: float, z1, z2):
    """Vectorised exact segment map driven by caller-supplied normals."""
    decay, mean_int, sd_end, reg_int, sd_int_cond = _segment_coefficients(params, duration)
    x_end = decay * x0 + sd_end * z1
    integral = mean_int * x0 + reg_int * z1 + sd_int_cond * z2
    return x_end, integral


def segment_joint_sample(params: OuParams, x0: float, duration: float, rng: RngStream):
    """Draw ``(x_T, integral_0^T x dt)`` exactly, conditional on ``x(0) = x0``."""
    duration = check_scalar(duration, "duration", min_val=0)
    z1, z2 = rng.normal(2)
    x_end, integral = segment_joint_step(params, x0, duration, z1, z2)
    return float(x_end), float(integral)
