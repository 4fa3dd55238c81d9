import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from afcdd.afc import (CombSpec, EfficiencyBudget, FieldConfig, OperatingEnvelope, Splittings,
                       afc_rephasing_amplitude, check_constraints, comb_rephasing_amplitude,
                       compute_splittings, field_fluctuation_equivalent, fwhm_to_std,
                       total_efficiency)


def test_default_field_gives_operating_splittings():
    s = compute_splittings(FieldConfig())
    assert s.delta == pytest.approx(210e3, rel=1e-12)
    assert s.delta_e == pytest.approx(300e3, rel=1e-12)


def test_default_envelope_passes_all_constraints():
    report = check_constraints(compute_splittings(FieldConfig()), OperatingEnvelope())
    assert report.all_passed
    assert report.margins == pytest.approx((7.0, 210 / 23, 300 / 160))
    assert set(report.to_dict()) == {"delta_gt_gamma_inh", "delta_gt_rabi",
                                     "delta_e_gt_gamma_afc"}


def test_constraint_is_strict_inequality():
    report = check_constraints(Splittings(30e3, 300e3), OperatingEnvelope(gamma_inh=30e3))
    assert not report.inhomogeneous.passed
    assert not report.all_passed


@given(b=st.floats(0.0, 0.2), k=st.floats(0.1, 10))
def test_splittings_linear_in_field(b, k):
    f1 = FieldConfig(magnitude=b)
    f2 = FieldConfig(magnitude=b * k)
    s1, s2 = compute_splittings(f1), compute_splittings(f2)
    assert s2.delta == pytest.approx(k * s1.delta, rel=1e-12, abs=1e-9)


def test_total_efficiency_budget():
    eta = total_efficiency(EfficiencyBudget(0.102, 0.61, 1.0))
    assert eta == pytest.approx(0.102 * 0.61**2, rel=1e-15)
    assert round(100 * eta, 2) == 3.80


@given(a=st.floats(0, 1), c=st.floats(0, 1), s=st.floats(0, 1))
def test_total_efficiency_bounded_and_monotone(a, c, s):
    eta = total_efficiency(EfficiencyBudget(a, c, s))
    assert 0 <= eta <= min(a, c, s) + 1e-15
    assert total_efficiency(EfficiencyBudget(a, c, s * 0.5)) <= eta + 1e-15


def test_budget_rejects_out_of_range():
    with pytest.raises(ValueError):
        EfficiencyBudget(1.2, 0.5, 0.5)


def test_rephasing_at_comb_period():
    period = 1 / 17e-6
    teeth = np.arange(9) * period
    amp = afc_rephasing_amplitude(teeth, np.ones(9), 17e-6)
    assert abs(amp) == pytest.approx(1.0, abs=1e-12)
    # two teeth dephase completely at half the period
    assert abs(afc_rephasing_amplitude(teeth[:2], [1, 1], 0.5 / period)) < 1e-12


@given(t=st.floats(0, 1e-3), n=st.integers(1, 12))
def test_rephasing_magnitude_bounded(t, n):
    amp = afc_rephasing_amplitude(np.arange(n) * 40e3, np.arange(1, n + 1), t)
    assert abs(amp) <= 1 + 1e-12


def test_rephasing_empty_raises():
    with pytest.raises(ValueError):
        afc_rephasing_amplitude([], [], 0.0)


def test_gaussian_teeth_envelope():
    comb = CombSpec(period=40e3, bandwidth=400e3, tooth_count=10, tooth_width=10e3)
    t = 1 / 40e3
    s = 10e3 / (2 * math.sqrt(2 * math.log(2)))
    assert abs(comb_rephasing_amplitude(comb, t)) == pytest.approx(
        math.exp(-2 * math.pi**2 * s**2 * t**2), rel=1e-12)
    assert fwhm_to_std(10e3) == pytest.approx(s)


def test_comb_spec_validation():
    with pytest.raises(ValueError):
        CombSpec(period=40e3, bandwidth=1e6, tooth_count=3, tooth_width=10e3)
    with pytest.raises(ValueError):
        CombSpec(period=40e3, bandwidth=400e3, tooth_count=10, tooth_width=50e3)
    c = CombSpec.from_bandwidth(1 / 17e-6, 160e3, 10e3)
    assert c.tooth_count == 3


def test_field_noise_equivalent_is_micro_tesla():
    db = field_fluctuation_equivalent(15.1, 17e6)
    assert db == pytest.approx(15.1 / 17e6)
    assert 0.5e-6 < db < 2e-6
