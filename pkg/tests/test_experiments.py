import numpy as np
import pytest

from hapsfl.experiments import (SYSTEMS, ExperimentConfig, make_scenario, ratio_table, round_channel,
                                run_experiment, sweep, sweep_summary)


def test_system_names_are_normalised():
    assert ExperimentConfig(system="terr-no-sel").system == "terr_no_sel"
    with pytest.raises(ValueError):
        ExperimentConfig(system="cloud")


@pytest.mark.parametrize("system", SYSTEMS)
def test_every_system_runs(system):
    res = run_experiment(ExperimentConfig(clients=8, rounds=2, system=system))
    assert len(res.records) == 2
    cum = np.cumsum([r.total_s for r in res.records])
    np.testing.assert_allclose([r.cumulative_s for r in res.records], cum)


def test_delay_only_mode_skips_training():
    res = run_experiment(ExperimentConfig(clients=8, rounds=3, learn=False))
    assert res.run is None and all(np.isnan(r.loss) for r in res.records)


def test_antithetic_rounds_pair_up():
    s = make_scenario(ExperimentConfig(clients=4, sigma2=3.0))
    a, b = round_channel(s, 4, True), round_channel(s, 5, True)
    assert a.displacement_km == -b.displacement_km


def test_sweep_rows_and_ratio():
    base = ExperimentConfig(clients=6, rounds=2, learn=False)
    rows = sweep("sigma2", [0.01, 3.0], ["ccra"], [0, 1], base)
    assert len(rows) == 4
    summary = sweep_summary(rows)
    ratios = ratio_table(summary)
    assert ratios[0]["ratio"] == 1.0 and len(ratios) == 2


def test_parallel_sweep_matches_serial():
    base = ExperimentConfig(clients=5, rounds=2)
    assert sweep("clients", [5, 7], ["ccra"], [0], base, workers=2) == sweep("clients", [5, 7], ["ccra"], [0], base)
