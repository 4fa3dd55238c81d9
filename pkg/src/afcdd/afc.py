"""Physical configuration of the spin-wave AFC memory.

Zeeman splittings are modelled as linear in the field magnitude with
user-supplied gradients; the operating constraints, efficiency budget and
comb rephasing primitives live here as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_scalar, check_int

__all__ = [
    "FieldConfig",
    "Splittings",
    "OperatingEnvelope",
    "EfficiencyBudget",
    "CombSpec",
    "ConstraintCheck",
    "ConstraintReport",
    "compute_splittings",
    "check_constraints",
    "total_efficiency",
    "afc_rephasing_amplitude",
    "comb_rephasing_amplitude",
    "field_fluctuation_equivalent",
    "fwhm_to_std",
]

FWHM_PER_STD = 2.0 * math.sqrt(2.0 * math.log(2.0))


def fwhm_to_std(fwhm: float) -> float:
    """Standard deviation of a Gaussian with the given FWHM."""
    return fwhm / FWHM_PER_STD


@dataclass(frozen=True)
class FieldConfig:
    """Static bias field and the linear Zeeman gradients it acts through.

    Attributes
    ----------
    magnitude : float
        Field magnitude in tesla.
    angle_deg : float
        Direction relative to D1 in the D1-D2 plane, degrees in [0, 360).
    ground_gradient, excited_gradient : float
        Hz/T; map the field onto the ground (storage) and excited splittings.
    s1_gradient : float
        Hz/T; sensitivity of the spin transition frequency to field noise.
    """

    magnitude: float = 15e-3
    angle_deg: float = 65.0
    ground_gradient: float = 14e6
    excited_gradient: float = 20e6
    s1_gradient: float = 17e6

    def __post_init__(self):
        check_scalar(self.magnitude, "magnitude", min_val=0)
        check_scalar(self.angle_deg, "angle_deg", min_val=0, max_val=360, include_max=False)
        for name in ("ground_gradient", "excited_gradient", "s1_gradient"):
            check_scalar(getattr(self, name), name, min_val=0, include_min=False)


@dataclass(frozen=True)
class Splittings:
    delta: float
    delta_e: float

    def __post_init__(self):
        check_scalar(self.delta, "delta", min_val=0)
        check_scalar(self.delta_e, "delta_e", min_val=0)


@dataclass(frozen=True)
class OperatingEnvelope:
    """Spin linewidth, RF Rabi frequency and comb bandwidth, all in Hz."""

    gamma_inh: float = 30e3
    rabi_hz: float = 23e3
    gamma_afc: float = 160e3

    def __post_init__(self):
        for name in ("gamma_inh", "rabi_hz", "gamma_afc"):
            check_scalar(getattr(self, name), name, min_val=0, include_min=False)


@dataclass(frozen=True)
class EfficiencyBudget:
    eta_afc: float
    eta_ctrl: float
    eta_spin: float

    def __post_init__(self):
        for name in ("eta_afc", "eta_ctrl", "eta_spin"):
            check_scalar(getattr(self, name), name, min_val=0, max_val=1)


@dataclass(frozen=True)
class CombSpec:
    """Periodic absorption comb.

    ``tooth_width`` is the full width of a tooth: Gaussian FWHM for the
    rephasing calculation, boxcar width for hole burning.
    """

    period: float
    bandwidth: float
    tooth_count: int
    tooth_width: float

    def __post_init__(self):
        check_scalar(self.period, "period", min_val=0, include_min=False)
        check_scalar(self.bandwidth, "bandwidth", min_val=0, include_min=False)
        check_int(self.tooth_count, "tooth_count", min_val=2)
        check_scalar(self.tooth_width, "tooth_width", min_val=0, max_val=self.period,
                     include_max=False)
        # teeth tile the band up to one period of slack at the edges
        if abs(self.bandwidth - self.tooth_count * self.period) > self.period:
            raise ValueError("bandwidth must be close to tooth_count * period")

    @classmethod
    def from_bandwidth(cls, period, bandwidth, tooth_width):
        return cls(period, bandwidth, max(2, int(round(bandwidth / period))), tooth_width)

    @property
    def tooth_centers(self):
        return np.arange(self.tooth_count) * self.period


@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    lhs: float
    rhs: float

    @property
    def passed(self) -> bool:
        return self.lhs > self.rhs

    @property
    def margin(self) -> float:
        return self.lhs / self.rhs


@dataclass(frozen=True)
class ConstraintReport:
    """Selectivity and bandwidth conditions on the splittings."""

    inhomogeneous: ConstraintCheck
    rabi: ConstraintCheck
    afc_bandwidth: ConstraintCheck

    @property
    def checks(self):
        return (self.inhomogeneous, self.rabi, self.afc_bandwidth)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def margins(self):
        return tuple(c.margin for c in self.checks)

    def to_dict(self):
        return {c.name: {"lhs_hz": c.lhs, "rhs_hz": c.rhs, "passed": c.passed,
                         "margin": c.margin} for c in self.checks}


def compute_splittings(field: FieldConfig) -> Splittings:
    return Splittings(delta=field.ground_gradient * field.magnitude,
                      delta_e=field.excited_gradient * field.magnitude)


def check_constraints(s: Splittings, env: OperatingEnvelope) -> ConstraintReport:
    """Evaluate the three strict inequalities and their margins (lhs / rhs).

    Pass/fail is a strict ``>``; whether a margin is "large enough" is left
    to the caller.
    """
    return ConstraintReport(
        inhomogeneous=ConstraintCheck("delta_gt_gamma_inh", s.delta, env.gamma_inh),
        rabi=ConstraintCheck("delta_gt_rabi", s.delta, env.rabi_hz),
        afc_bandwidth=ConstraintCheck("delta_e_gt_gamma_afc", s.delta_e, env.gamma_afc),
    )


def total_efficiency(b: EfficiencyBudget) -> float:
    """Storage-and-retrieval efficiency; the control pulse acts twice."""
    return b.eta_afc * b.eta_ctrl**2 * b.eta_spin


def afc_rephasing_amplitude(tooth_detunings, weights, t: float) -> complex:
    """Collective amplitude ``sum_j w_j exp(-2 pi i f_j t)`` of the Dicke state.

    ``weights`` are normalised to unit sum before use.
    """
    f = np.asarray(tooth_detunings, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if f.size == 0:
        raise ValueError("tooth_detunings must be non-empty")
    if w.shape != f.shape:
        raise ValueError("weights must match tooth_detunings in length")
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("weights must be non-negative with positive sum")
    w = w / w.sum()
    return complex(np.sum(w * np.exp(-2j * np.pi * f * t)))


def comb_rephasing_amplitude(comb: CombSpec, t: float) -> complex:
    """Closed-form amplitude of an equal-weight comb with Gaussian teeth.

    Each tooth's lineshape contributes its Fourier transform
    ``exp(-2 pi^2 s^2 t^2)``, ``s`` the tooth standard deviation.
    """
    s = fwhm_to_std(comb.tooth_width)
    envelope = math.exp(-2.0 * math.pi**2 * s**2 * t**2)
    teeth = afc_rephasing_amplitude(comb.tooth_centers, np.ones(comb.tooth_count), t)
    return envelope * teeth


def field_fluctuation_equivalent(sigma_hz: float, s1: float) -> float:
    """Field noise (tesla) equivalent to a frequency spread ``sigma_hz``."""
    s1 = check_scalar(s1, "s1", min_val=0, include_min=False)
    return sigma_hz / s1
