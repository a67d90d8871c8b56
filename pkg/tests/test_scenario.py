import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hapsfl.scenario import (ScenarioFormatError, SystemParams, generate_scenario, load_scenario,
                             save_scenario, slant_range_km)


def test_slant_range_at_centre_equals_altitude():
    assert slant_range_km(0.0, 25.0) == 25.0


def test_slant_range_at_disc_edge():
    assert slant_range_km(50.0, 25.0) == pytest.approx(55.9017, abs=1e-4)


def test_same_seed_same_clients():
    assert generate_scenario(10, seed=42) == generate_scenario(10, seed=42)
    assert generate_scenario(10, seed=42) != generate_scenario(10, seed=43)


def test_file_round_trip(tmp_path):
    s = generate_scenario(10, seed=7)
    path = tmp_path / "s.yaml"
    save_scenario(s, path)
    assert load_scenario(path) == s


@pytest.mark.parametrize("text, fragment", [
    ("- 1\n- 2\n", "mapping"),
    ("seed: 0\nclients: []\n", "params"),
])
def test_malformed_file_names_the_problem(tmp_path, text, fragment):
    path = tmp_path / "bad.yaml"
    path.write_text(text)
    with pytest.raises(ScenarioFormatError, match=fragment):
        load_scenario(path)


def test_missing_client_field_is_reported(tmp_path):
    s = generate_scenario(2, seed=0)
    path = tmp_path / "s.yaml"
    save_scenario(s, path)
    path.write_text(path.read_text().replace("sample_count: 500", "samples: 500", 1))
    with pytest.raises(ScenarioFormatError, match="sample_count"):
        load_scenario(path)


def test_zero_clients_rejected():
    with pytest.raises(ValueError):
        generate_scenario(0)


@given(st.integers(0, 2**32), st.integers(1, 200))
def test_distances_stay_within_geometry(seed, count):
    s = generate_scenario(count, seed=seed)
    d = s.distances_km
    assert np.all(d >= 25.0 - 1e-12) and np.all(d <= 55.902)
    planar = np.hypot(s.positions_km[:, 0], s.positions_km[:, 1])
    assert np.allclose(d, np.sqrt(planar**2 + 25.0**2), rtol=1e-12)


def test_placement_is_uniform_in_area():
    s = generate_scenario(20000, seed=3)
    planar = np.hypot(s.positions_km[:, 0], s.positions_km[:, 1])
    frac = np.mean(planar <= 25.0)  # a quarter of the disc area
    sigma = math.sqrt(0.25 * 0.75 / 20000)
    assert abs(frac - 0.25) < 4 * sigma


def test_params_validation():
    with pytest.raises(ValueError):
        SystemParams(total_bandwidth_hz=-1.0)
