import math

import numpy as np
import pytest

from hapsfl.baselines import TerrestrialTopology, baseline_round, random_subset, terrestrial_gains
from hapsfl.channel import realize_channel
from hapsfl.optimizer import solve
from hapsfl.optimizer.types import SolverOptions
from hapsfl.scenario import generate_scenario
from hapsfl.verify import iteration_constant_for


def setup(K, seed=0):
    s = generate_scenario(K, seed=seed)
    return s, realize_channel(s, 0), iteration_constant_for(s)


def test_random_selection_is_uniform():
    rng = np.random.default_rng(0)
    K, m, draws = 20, 5, 10000
    counts = np.zeros(K)
    for _ in range(draws):
        counts[random_subset(K, m, rng)] += 1
    p = m / K
    sigma = math.sqrt(draws * p * (1 - p))
    assert np.all(np.abs(counts - draws * p) <= 3 * sigma)


def test_topology_assigns_nearest_station():
    s = generate_scenario(200, seed=1)
    topo = TerrestrialTopology()
    cell, d = topo.assign(s)
    full = np.hypot(*(s.positions_km[:, None, :] - topo.mbs_positions[None]).transpose(2, 0, 1))
    np.testing.assert_array_equal(cell, full.argmin(axis=1))
    np.testing.assert_allclose(d, full.min(axis=1))
    assert 0.0 < topo.coverage_fraction(s) <= 1.0


def test_topology_is_two_hop_only():
    with pytest.raises(ValueError):
        TerrestrialTopology(hop_count=3)


def test_terrestrial_gains_are_deterministic_and_round_dependent():
    s = generate_scenario(10, seed=2)
    topo = TerrestrialTopology()
    a, b = terrestrial_gains(s, topo, 0), terrestrial_gains(s, topo, 0)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, terrestrial_gains(s, topo, 1))


def test_single_client_haps_without_selection_matches_solver():
    s, ch, v = setup(1)
    s = s.with_params(client_energy_budget_j=1e6)
    ours = solve(s, ch, v, SolverOptions()).delay.total_s
    _, delay = baseline_round("haps_no_sel", s, ch, v, 0.95)
    assert delay.total_s == pytest.approx(ours, rel=1e-6)


@pytest.mark.parametrize("K", [10, 50])
def test_solver_beats_every_baseline(K):
    s, ch, v = setup(K, seed=3)
    alloc, ours, _ = solve(s, ch, v)
    rng = np.random.default_rng(0)
    for kind in ("haps_no_sel", "terr_no_sel"):
        _, d = baseline_round(kind, s, ch, v, 0.95)
        assert ours.total_s <= d.total_s
    sel, d = baseline_round("terr_ran_sel", s, ch, v, 0.95, count=alloc.count, rng=rng)
    assert len(sel) == alloc.count and ours.total_s < d.total_s


def test_baseline_delay_parts_add_up():
    s, ch, v = setup(12)
    for kind in ("haps_no_sel", "terr_no_sel"):
        sel, d = baseline_round(kind, s, ch, v, 0.5)
        assert len(sel) == 12
        assert d.total_s == pytest.approx(d.uplink_s + d.downlink_s)
        assert d.ledger.haps_energy_j >= 0


def test_random_selection_needs_count_and_rng():
    s, ch, v = setup(5)
    with pytest.raises(ValueError):
        baseline_round("terr_ran_sel", s, ch, v, 0.5)
    with pytest.raises(ValueError):
        baseline_round("unknown", s, ch, v, 0.5)
