import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from afcdd.ou import (OuParams, ou_path, sample_stationary, segment_joint_sample,
                      segment_joint_step, segment_moments)
from afcdd.rng import RngStream, stream_normals
from oracles import ou_conditional_moments_quad

OU = OuParams.from_hz(15.1, 9.5e-3)


def test_from_hz_round_trip():
    assert OU.sigma == pytest.approx(2 * math.pi * 15.1)
    assert OU.sigma_hz == pytest.approx(15.1)


@pytest.mark.parametrize("ratio", [1e-3, 0.05, 0.5, 1.0, 4.0])
def test_segment_moments_match_quadrature(ratio):
    T = ratio * OU.tau_c
    mean, cov = segment_moments(OU, 37.0, T)
    ref_mean, ref_cov = ou_conditional_moments_quad(OU.sigma, OU.tau_c, 37.0, T)
    np.testing.assert_allclose(mean, ref_mean, rtol=1e-9)
    np.testing.assert_allclose(cov, ref_cov, rtol=1e-7, atol=1e-14 * ref_cov.max())


@given(h=st.floats(1e-8, 50.0), x0=st.floats(-500, 500))
def test_covariance_positive_semidefinite(h, x0):
    _, cov = segment_moments(OU, x0, h * OU.tau_c)
    assert cov[0, 0] >= 0 and cov[1, 1] >= 0
    assert cov[0, 0] * cov[1, 1] - cov[0, 1] ** 2 >= -1e-12 * cov[0, 0] * cov[1, 1]


@given(h=st.floats(1e-6, 1e-2))
def test_small_step_limit_is_smooth(h):
    """For T << tau_c the pinned process diffuses: Var(int) -> 2 sigma^2 T^3 / (3 tau_c)."""
    _, cov = segment_moments(OU, 0.0, h * OU.tau_c)
    T = h * OU.tau_c
    assert cov[1, 1] == pytest.approx(2 * OU.sigma**2 * T**3 / (3 * OU.tau_c), rel=2 * h + 1e-6)


def test_zero_duration_is_identity():
    x, integral = segment_joint_step(OU, np.array([3.0]), 0.0, np.array([1.0]), np.array([1.0]))
    assert x[0] == 3.0 and integral[0] == 0.0


def test_negative_duration_rejected():
    with pytest.raises(ValueError):
        segment_joint_sample(OU, 0.0, -1e-3, RngStream(0, 0))


def test_sampled_moments_agree_with_exact():
    T = 4e-3
    n = 200_000
    z = stream_normals(9, np.arange(n, dtype=np.uint64), 2)
    x, integral = segment_joint_step(OU, 20.0, T, z[:, 0], z[:, 1])
    mean, cov = segment_moments(OU, 20.0, T)
    samples = np.stack([x, integral])
    se = np.sqrt(np.diag(cov) / n)
    assert np.all(np.abs(samples.mean(axis=1) - mean) < 5 * se)
    np.testing.assert_allclose(np.cov(samples), cov, rtol=0.02)


def test_stationarity_preserved():
    n = 100_000
    z = stream_normals(2, np.arange(n, dtype=np.uint64), 3)
    x0 = OU.sigma * z[:, 0]
    x, _ = segment_joint_step(OU, x0, 7e-3, z[:, 1], z[:, 2])
    assert x.std() == pytest.approx(OU.sigma, rel=0.01)


def test_ou_path_autocorrelation():
    rng = RngStream(5, 0)
    dt = 1e-3
    path = ou_path(OU, sample_stationary(OU, rng), dt, 60_000, rng)
    assert path.shape == (60_001,)
    lag = int(round(OU.tau_c / dt))
    r = np.corrcoef(path[:-lag], path[lag:])[0, 1]
    assert r == pytest.approx(math.exp(-lag * dt / OU.tau_c), abs=0.05)


def test_invalid_params():
    with pytest.raises(ValueError):
        OuParams(sigma=-1.0, tau_c=1e-3)
    with pytest.raises(ValueError):
        OuParams(sigma=1.0, tau_c=0.0)
