import numpy as np
import pytest
from hypothesis import given, strategies as st

from hapsfl.channel import (downlink_rate, fixed_channel, path_gain, realize_channel,
                            rician_power_gain, uplink_rate)
from hapsfl.scenario import generate_scenario

H0 = 10.0 ** (-12.81)


def test_gain_formula_matches_path_loss_and_fading():
    s = generate_scenario(30, seed=5).with_params(displacement_variance_km2=3.0)
    ch = realize_channel(s, 4)
    expected = ch.fading_gains * H0 * (s.distances_km + ch.displacement_km) ** -2.0
    np.testing.assert_allclose(ch.gains, expected, rtol=1e-12)


def test_displacement_is_one_scalar_per_round():
    s = generate_scenario(50, seed=1).with_params(displacement_variance_km2=3.0)
    draws = [realize_channel(s, n).displacement_km for n in range(5)]
    assert all(isinstance(d, float) for d in draws)
    assert len(set(draws)) == 5


def test_displacement_variance():
    s = generate_scenario(1, seed=9).with_params(displacement_variance_km2=3.0)
    dd = np.array([realize_channel(s, n).displacement_km for n in range(4000)])
    # sample variance of 4000 normals is within ~4 standard errors of sigma^2
    assert abs(dd.var() - 3.0) < 4 * 3.0 * np.sqrt(2 / 4000)


def test_rician_gain_has_unit_mean():
    g = rician_power_gain(10.0, 200000, np.random.default_rng(0))
    # variance of |h|^2 for K = 10 is (2K + 1)/(K + 1)^2
    se = np.sqrt(21 / 121 / 200000)
    assert abs(g.mean() - 1.0) < 4 * se
    assert np.all(g >= 0)


def test_common_random_numbers_across_variances():
    base = generate_scenario(5, seed=2)
    a = realize_channel(base.with_params(displacement_variance_km2=0.01), 3)
    b = realize_channel(base.with_params(displacement_variance_km2=3.0), 3)
    np.testing.assert_array_equal(a.fading_gains, b.fading_gains)
    assert b.displacement_km == pytest.approx(a.displacement_km * np.sqrt(300.0), rel=1e-12)


def test_antithetic_mirrors_displacement_only():
    s = generate_scenario(5, seed=2).with_params(displacement_variance_km2=3.0)
    a = realize_channel(s, 0)
    b = realize_channel(s, 0, antithetic=True)
    assert b.displacement_km == -a.displacement_km
    np.testing.assert_array_equal(a.fading_gains, b.fading_gains)


def test_effective_distance_is_clamped():
    s = generate_scenario(3, seed=0)
    ch = fixed_channel(s, displacement_km=-1000.0)
    np.testing.assert_allclose(ch.gains, H0 * 1.0**-2, rtol=1e-12)
    assert path_gain(0.2, H0) == path_gain(1.0, H0)


def test_rate_examples():
    assert uplink_rate(0.0, 0.01, 1e-16, 1e-20) == 0.0
    assert uplink_rate(1e6, 1.0, 1.0, 1.0 / 3e6) == pytest.approx(2e6)


def test_downlink_single_client_equals_uplink_formula():
    assert downlink_rate(20e6, 100.0, [2e-16], 4e-21) == uplink_rate(20e6, 100.0, 2e-16, 4e-21)


def test_downlink_uses_weakest_client():
    assert downlink_rate(20e6, 100.0, [2e-16, 1e-16], 4e-21) == uplink_rate(20e6, 100.0, 1e-16, 4e-21)


def test_downlink_needs_a_client():
    with pytest.raises(ValueError):
        downlink_rate(20e6, 100.0, [], 4e-21)


@given(st.floats(1e3, 1e8), st.floats(1e3, 1e8), st.floats(1e-4, 1.0), st.floats(1e-18, 1e-12))
def test_rate_increases_with_bandwidth(b1, b2, p, h):
    lo, hi = sorted((b1, b2))
    assert uplink_rate(lo, p, h, 4e-21) <= uplink_rate(hi, p, h, 4e-21) * (1 + 1e-12)


@given(st.lists(st.floats(1e-18, 1e-12), min_size=1, max_size=20), st.floats(0.1, 100.0))
def test_downlink_never_exceeds_any_selected_uplink(gains, p):
    r = downlink_rate(20e6, p, gains, 4e-21)
    assert all(r <= uplink_rate(20e6, p, g, 4e-21) * (1 + 1e-12) for g in gains)


@given(st.integers(0, 10**6), st.integers(0, 100))
def test_channel_is_deterministic(seed, n):
    s = generate_scenario(4, seed=seed)
    a, b = realize_channel(s, n), realize_channel(s, n)
    np.testing.assert_array_equal(a.gains, b.gains)
