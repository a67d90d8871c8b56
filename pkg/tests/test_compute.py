import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hapsfl.compute import (client_compute_time, client_energy, haps_compute_time, haps_energy,
                            iteration_constant, local_iterations)


@pytest.mark.parametrize("v, eta, i", [(2.0, 1.0, 0), (2.0, 0.25, 4), (2.0, 0.3, 4), (7.3, 0.5, 8)])
def test_local_iterations(v, eta, i):
    assert local_iterations(v, eta) == i


@pytest.mark.parametrize("eta", [0.0, -0.1, 1.5])
def test_local_iterations_domain(eta):
    with pytest.raises(ValueError):
        local_iterations(2.0, eta)


def test_iteration_constant_requires_small_step():
    assert iteration_constant(1.0, 0.5, 1.0) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        iteration_constant(1.0, 0.5, 2.0)


def test_client_compute_time_examples():
    assert client_compute_time(0, 2e4, 500, 2e9) == 0.0
    assert client_compute_time(5, 2e4, 500, 2e9) == pytest.approx(0.025)
    with pytest.raises(ValueError):
        client_compute_time(5, 2e4, 500, 0.0)


def test_client_energy_examples():
    assert 1e-28 * (2e9) ** 3 == pytest.approx(0.8)
    e_cp, e_up, total = client_energy(0.025, 1e-28, 2e9, 0.0, 0.01)
    assert e_cp == pytest.approx(0.02) and e_up == 0.0 and total == pytest.approx(0.02)


def test_haps_examples():
    assert haps_compute_time(3e4, 0, 28100, 1e10) == 0.0
    t = haps_compute_time(3e4, 10, 28100, 1e10)
    assert t == pytest.approx(0.843)
    assert haps_energy(1e-27, 1e10, 0.0, 100.0, 0.0) == 0.0
    assert haps_energy(1e-27, 1e10, 0.843, 0.0, 0.0) == pytest.approx(843.0)
    assert haps_energy(1e-27, 1e10, 0.0, 100.0, 0.1) == pytest.approx(10.0)


@given(st.integers(0, 50), st.floats(1e4, 3e4), st.integers(1, 1000), st.floats(1e8, 2e9),
       st.floats(1e-29, 1e-27))
def test_compute_energy_is_time_times_power(i, C, J, f, zeta):
    t = client_compute_time(i, C, J, f)
    e_cp, _, _ = client_energy(t, zeta, f, 0.0, 0.0)
    assert e_cp == pytest.approx(t * zeta * f**3, rel=1e-12)
    assert e_cp >= 0


@given(st.floats(0.5, 50.0), st.floats(0.01, 1.0))
def test_iterations_cover_the_bound(v, eta):
    i = local_iterations(v, eta)
    assert i >= v * math.log2(1 / eta) - 1e-9
    assert i - 1 < v * math.log2(1 / eta)
