import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from afcdd.afc import CombSpec
from afcdd.holeburn import (AbsorptionProfile, PumpPattern, apply_pumping, comb_od_loss,
                            comb_pump_pattern, grid_shift)

WIDE = CombSpec(40e3, 400e3, 10, 10e3)
# loss for WIDE at delta_e = 300 kHz, w = 0.1, 50 cycles, r = 0.1; frozen from the brute-force oracle
WIDE_LOSS = 0.19750


def brute_force_loss(comb, delta_e, w, cycles, r, points_per_period=50):
    """Per-point, per-cycle loop over frequencies in Hz."""
    step = comb.period / points_per_period
    half = comb.period / 2

    def in_band(f):
        return -half - 1e-6 <= f < comb.bandwidth - half - 1e-6

    def is_tooth(f):
        j = min(max(round(f / comb.period), 0), comb.tooth_count - 1)
        return abs(f - j * comb.period) <= comb.tooth_width / 2 + 1e-6

    def pumped(f):
        return 1.0 if in_band(f) and not is_tooth(f) else 0.0

    n_lo = math.floor(-half / step)
    freqs = [i * step for i in range(n_lo, n_lo + int(round(comb.bandwidth / step)))]
    teeth = [f for f in freqs if is_tooth(f)]
    od = {f: 1.0 for f in teeth}
    for _ in range(cycles):
        for f in teeth:
            weight = pumped(f) + w * (pumped(f - delta_e) + pumped(f + delta_e))
            od[f] *= max(0.0, 1.0 - r * weight)
    return 1.0 - sum(od.values()) / len(teeth)


def test_side_holes_inside_band_cost_tooth_depth():
    loss = comb_od_loss(WIDE, 300e3)
    assert loss > 0
    assert loss == pytest.approx(WIDE_LOSS, abs=5e-6)
    assert loss == pytest.approx(brute_force_loss(WIDE, 300e3, 0.1, 50, 0.1), abs=1e-12)


def test_splitting_at_comb_multiple_is_harmless():
    # side-holes of anti-tooth pumping land on anti-tooth frequencies
    assert comb_od_loss(WIDE, 8 * WIDE.period) == pytest.approx(0.0, abs=1e-15)
    assert brute_force_loss(WIDE, 8 * WIDE.period, 0.1, 50, 0.1) == pytest.approx(0.0, abs=1e-15)


def test_narrow_comb_has_no_loss():
    period = 1 / 17e-6
    comb = CombSpec.from_bandwidth(period, 160e3, period / 3)
    assert comb_od_loss(comb, 300e3) == 0.0
    assert comb_od_loss(CombSpec(40e3, 160e3, 4, 10e3), 300e3) == 0.0


@pytest.mark.parametrize("delta_e", [200e3, 260e3, 300e3])
def test_matches_brute_force(delta_e):
    got = comb_od_loss(WIDE, delta_e, side_hole_weight=0.2, cycles=20, removal_fraction=0.05)
    assert got == pytest.approx(brute_force_loss(WIDE, delta_e, 0.2, 20, 0.05), abs=1e-12)


def test_single_spike_gives_three_holes():
    f = np.arange(-100, 101) * 1e3
    mask = np.zeros(f.size)
    mask[100] = 1.0
    out = apply_pumping(AbsorptionProfile(f, np.ones(f.size)), PumpPattern(mask, 0.3), 40e3, 5)
    holes = np.flatnonzero(out.alpha < 1.0)
    assert list(f[holes]) == [-40e3, 0.0, 40e3]
    assert out.alpha[100] == pytest.approx(0.9**5)
    assert out.alpha[60] == pytest.approx(0.97**5)


@given(seed=st.integers(0, 2**32 - 1))
def test_zero_weight_touches_only_pumped_points(seed):
    rng = np.random.default_rng(seed)
    f = np.arange(64) * 1e3
    alpha = rng.uniform(0, 2, f.size)
    mask = (rng.uniform(size=f.size) < 0.3) * rng.uniform(size=f.size)
    out = apply_pumping(AbsorptionProfile(f, alpha), PumpPattern(mask, 0.0), 7e3, 3)
    untouched = mask == 0
    assert np.array_equal(out.alpha[untouched], alpha[untouched])


@given(seed=st.integers(0, 2**32 - 1), w=st.floats(0, 1), cycles=st.integers(0, 30),
       r=st.floats(0, 1))
def test_pumping_never_adds_depth(seed, w, cycles, r):
    rng = np.random.default_rng(seed)
    f = np.arange(80) * 500.0
    alpha = rng.uniform(0, 3, f.size)
    mask = rng.uniform(size=f.size)
    out = apply_pumping(AbsorptionProfile(f, alpha), PumpPattern(mask, w), 5e3, cycles, r)
    assert np.all(out.alpha <= alpha)
    assert np.all(out.alpha >= 0)


@given(w1=st.floats(0, 1), w2=st.floats(0, 1), c1=st.integers(1, 60), c2=st.integers(1, 60))
def test_loss_monotone_in_weight_and_cycles(w1, w2, c1, c2):
    (wa, wb), (ca, cb) = sorted((w1, w2)), sorted((c1, c2))
    assert comb_od_loss(WIDE, 300e3, wa, ca) <= comb_od_loss(WIDE, 300e3, wb, ca) + 1e-15
    assert comb_od_loss(WIDE, 300e3, wa, ca) <= comb_od_loss(WIDE, 300e3, wa, cb) + 1e-15


def test_loss_is_linear_in_weight_at_small_weight():
    small = comb_od_loss(WIDE, 300e3, 1e-5)
    assert comb_od_loss(WIDE, 300e3, 2e-5) / small == pytest.approx(2.0, rel=1e-3)


def test_pump_pattern_leaves_room_for_side_holes():
    profile, pattern, teeth = comb_pump_pattern(WIDE, 300e3)
    k = grid_shift(300e3, profile.step)
    pumped = np.flatnonzero(pattern.pump_mask)
    assert pumped.min() - k >= 0 and pumped.max() + k < profile.alpha.size
    assert teeth.sum() == WIDE.tooth_count * (int(WIDE.tooth_width / profile.step) + 1)
    assert not np.any(pattern.pump_mask[teeth])


def test_validation():
    f = np.arange(10) * 1e3
    with pytest.raises(ValueError):
        grid_shift(1.5e3, 1e3)
    with pytest.raises(ValueError):
        AbsorptionProfile(f[::-1], np.ones(10))
    with pytest.raises(ValueError):
        AbsorptionProfile(f, -np.ones(10))
    with pytest.raises(ValueError):
        PumpPattern(np.full(10, 1.5))
    with pytest.raises(ValueError):
        apply_pumping(AbsorptionProfile(f, np.ones(10)), PumpPattern(np.ones(9)), 1e3, 1)
