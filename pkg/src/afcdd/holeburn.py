"""Rate-equation model of comb preparation with spectral side-holes.

With a split excited state, pumping at ``f`` also removes ions resonant at
``f +/- delta_e`` through the weak transition. Each pumping cycle removes a
fraction ``r`` of the optical depth, weighted by the local pump strength
plus ``w`` times the pump strength ``delta_e`` away.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_int, check_scalar
from .afc import CombSpec
from .curves import write_table_csv

__all__ = ["AbsorptionProfile", "PumpPattern", "apply_pumping", "comb_od_loss",
           "comb_pump_pattern", "grid_shift"]

DEFAULT_SIDE_HOLE_WEIGHT = 0.1
DEFAULT_REMOVAL_FRACTION = 0.1
DEFAULT_POINTS_PER_PERIOD = 50


@dataclass(frozen=True)
class AbsorptionProfile:
    freq_grid: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freq_grid, dtype=float)
        a = np.asarray(self.alpha, dtype=float)
        if f.ndim != 1 or f.shape != a.shape or f.size < 2:
            raise ValueError("freq_grid and alpha must be 1-D arrays of equal length >= 2")
        step = np.diff(f)
        if not np.allclose(step, step[0], rtol=1e-9, atol=0) or step[0] <= 0:
            raise ValueError("freq_grid must be uniform and increasing")
        if np.any(a < 0):
            raise ValueError("alpha must be non-negative")
        object.__setattr__(self, "freq_grid", f)
        object.__setattr__(self, "alpha", a)

    @property
    def step(self) -> float:
        return float(self.freq_grid[1] - self.freq_grid[0])

    def to_csv(self, path):
        return write_table_csv(path, ("freq_hz", "od"), zip(self.freq_grid, self.alpha))


@dataclass(frozen=True)
class PumpPattern:
    pump_mask: np.ndarray
    side_hole_weight: float = DEFAULT_SIDE_HOLE_WEIGHT

    def __post_init__(self):
        m = np.asarray(self.pump_mask, dtype=float)
        if np.any(m < 0) or np.any(m > 1):
            raise ValueError("pump_mask entries must lie in [0, 1]")
        check_scalar(self.side_hole_weight, "side_hole_weight", min_val=0, max_val=1)
        object.__setattr__(self, "pump_mask", m)


def grid_shift(delta: float, step: float) -> int:
    """``delta`` in grid steps; raises if it is not an integer multiple."""
    k = delta / step
    if abs(k - round(k)) > 1e-9 * max(1.0, abs(k)):
        raise ValueError(f"shift {delta:g} Hz is not a multiple of the grid step {step:g} Hz")
    return int(round(k))


def _shifted(x, k):
    """``y[i] = x[i - k]`` with zeros off the grid."""
    y = np.zeros_like(x)
    if k == 0:
        return x.copy()
    if abs(k) >= x.size:
        return y
    if k > 0:
        y[k:] = x[:-k]
    else:
        y[:k] = x[-k:]
    return y


def apply_pumping(profile: AbsorptionProfile, pattern: PumpPattern, delta_e: float,
                  cycles: int, removal_fraction: float = DEFAULT_REMOVAL_FRACTION
                  ) -> AbsorptionProfile:
    """Apply ``cycles`` rounds of pumping, side-holes included."""
    cycles = check_int(cycles, "cycles", min_val=0)
    r = check_scalar(removal_fraction, "removal_fraction", min_val=0, max_val=1)
    if pattern.pump_mask.shape != profile.alpha.shape:
        raise ValueError("pump_mask must match the profile grid")
    k = grid_shift(delta_e, profile.step)
    pump = pattern.pump_mask
    w = pattern.side_hole_weight
    weight = pump + w * (_shifted(pump, k) + _shifted(pump, -k))
    factor = np.clip(1.0 - r * weight, 0.0, 1.0)
    alpha = profile.alpha * factor**cycles
    return AbsorptionProfile(profile.freq_grid, alpha)


def _comb_layout(comb: CombSpec, step: float):
    """Grid indices of the band and a boolean tooth mask over the band."""
    per = grid_shift(comb.period, step)
    half_tooth = comb.tooth_width / 2 / step
    band_lo = -(per // 2)
    band_n = int(round(comb.bandwidth / step))
    idx = np.arange(band_lo, band_lo + band_n)
    nearest = np.clip(np.round(idx / per), 0, comb.tooth_count - 1)
    in_tooth = np.abs(idx - nearest * per) <= half_tooth + 1e-9
    return idx, in_tooth


def comb_pump_pattern(comb: CombSpec, delta_e: float, step: float | None = None,
                      side_hole_weight: float = DEFAULT_SIDE_HOLE_WEIGHT):
    """Flat initial profile and the anti-tooth pump that carves the comb.

    The grid covers the band plus ``delta_e`` on each side so every
    side-hole stays on the grid. Returns ``(profile, pattern, tooth_mask)``.
    """
    step = comb.period / DEFAULT_POINTS_PER_PERIOD if step is None else step
    k = grid_shift(delta_e, step)
    band_idx, in_tooth = _comb_layout(comb, step)
    lo, hi = band_idx[0] - k - 1, band_idx[-1] + k + 2
    grid_idx = np.arange(lo, hi)
    pump = np.zeros(grid_idx.size)
    teeth = np.zeros(grid_idx.size, dtype=bool)
    pos = band_idx - lo
    pump[pos] = np.where(in_tooth, 0.0, 1.0)
    teeth[pos] = in_tooth
    profile = AbsorptionProfile(grid_idx * step, np.ones(grid_idx.size))
    return profile, PumpPattern(pump, side_hole_weight), teeth


def comb_od_loss(comb: CombSpec, delta_e: float, side_hole_weight: float = DEFAULT_SIDE_HOLE_WEIGHT,
                 cycles: int = 50, removal_fraction: float = DEFAULT_REMOVAL_FRACTION,
                 step: float | None = None) -> float:
    """Fraction of tooth optical depth lost to side-holes.

    ``1 - OD_teeth(with side-holes) / OD_teeth(without)`` after preparing the
    comb by pumping every anti-tooth point of the band.
    """
    profile, pattern, teeth = comb_pump_pattern(comb, delta_e, step, side_hole_weight)
    with_side = apply_pumping(profile, pattern, delta_e, cycles, removal_fraction)
    without = apply_pumping(profile, PumpPattern(pattern.pump_mask, 0.0), delta_e, cycles,
                            removal_fraction)
    ref = without.alpha[teeth].sum()
    return float(1.0 - with_side.alpha[teeth].sum() / ref)
