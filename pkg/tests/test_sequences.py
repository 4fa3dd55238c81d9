import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from afcdd.sequences import (SequenceKind, build_sequence, free_evolution, two_pulse_echo)

kinds = st.sampled_from(list(SequenceKind))


def test_phase_patterns():
    x, y = 0.0, math.pi / 2
    assert SequenceKind.XX.phases == (x, x)
    assert SequenceKind.XY4.phases == (x, y, x, y)
    assert SequenceKind.XY8.phases == (x, y, x, y, y, x, y, x)
    assert [k.n_p for k in SequenceKind] == [2, 4, 8]


@pytest.mark.parametrize("text,kind", [("xx", "XX"), ("XY-4", "XY4"), ("xy_8", "XY8")])
def test_parse_aliases(text, kind):
    assert SequenceKind.parse(text) is SequenceKind(kind)


def test_parse_unknown():
    with pytest.raises(ValueError):
        SequenceKind.parse("KDD")


@given(kind=kinds, n_s=st.integers(1, 20), tau=st.floats(1e-5, 0.05))
def test_timing_invariants(kind, n_s, tau):
    seq = build_sequence(kind, n_s, tau)
    assert seq.n == n_s * kind.n_p
    assert seq.t_spin == pytest.approx(seq.n * tau, rel=1e-12)
    d = seq.segment_durations()
    assert d.sum() == pytest.approx(seq.t_spin, rel=1e-12)
    np.testing.assert_allclose(d[[0, -1]], tau / 2, rtol=1e-9)
    np.testing.assert_allclose(d[1:-1], tau, rtol=1e-9)
    assert all(p.area == math.pi for p in seq.pulses)


@given(kind=kinds, n_s=st.integers(1, 8))
def test_toggling_signs_balance(kind, n_s):
    """Equal time spent with each sign, so static detuning refocuses."""
    seq = build_sequence(kind, n_s, 1e-3)
    assert seq.segment_durations() @ seq.segment_signs() == pytest.approx(0.0, abs=1e-15)


def test_xx_series_maps_to_pulse_numbers():
    assert [build_sequence("XX", n_s, 1e-3).n for n_s in (1, 2, 4, 8)] == [2, 4, 8, 16]


def test_epsilon_sets_area():
    seq = build_sequence("XY4", 2, 1e-3, epsilon=0.154)
    assert seq.epsilon == pytest.approx(0.154)
    assert all(p.area == pytest.approx(math.pi + 0.154) for p in seq.pulses)


def test_two_pulse_echo_and_free_evolution():
    echo = two_pulse_echo(5e-3)
    assert echo.n == 2 and echo.t_spin == pytest.approx(10e-3)
    free = free_evolution(4e-3)
    assert free.n == 0
    np.testing.assert_allclose(free.segment_durations(), [4e-3])


@pytest.mark.parametrize("kw", [dict(n_s=0, tau=1e-3), dict(n_s=1, tau=0.0),
                                dict(n_s=1, tau=-1e-3)])
def test_invalid_parameters(kw):
    with pytest.raises(ValueError):
        build_sequence("XX", **kw)


def test_to_dict_uses_ms():
    d = build_sequence("XY8", 1, 2.5e-3, 0.1).to_dict()
    assert d == {"kind": "XY8", "n_s": 1, "tau_ms": pytest.approx(2.5), "epsilon_rad":
                 pytest.approx(0.1)}
