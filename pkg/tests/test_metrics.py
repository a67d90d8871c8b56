import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hapsfl.metrics import (FIELDS, ExperimentRecord, cumulative, read_csv, summarize, write_csv,
                            write_summary_json)


def rec(system="ccra", seed=0, n=1, total=1.0, cum=None, loss=1.0, bound=2.0, sid="K5-s0"):
    return ExperimentRecord(sid, system, seed, n, 3, 0.5, total / 2, total / 2, total,
                            total if cum is None else cum, loss, bound, 0.1, 0.2, 30.0)


def trace(system, totals, losses, bounds, seed=0):
    cum = cumulative(totals)
    return [rec(system, seed, n + 1, t, c, l, b) for n, (t, c, l, b)
            in enumerate(zip(totals, cum, losses, bounds))]


def test_cumulative_of_three_rounds():
    assert cumulative([1, 2, 3])[-1] == 6


def test_negative_delay_rejected():
    with pytest.raises(ValueError):
        rec(total=-1.0)


def test_single_record_summary():
    (s,) = summarize([rec(total=4.0, loss=0.3, bound=0.2)], epsilon_target=0.5)
    assert s.runs == 1 and s.final_loss_mean == 0.3 and s.total_delay_mean_s == 4.0
    assert s.rounds_to_target == 1 and s.delay_to_target_s == 4.0


def test_target_not_reached():
    (s,) = summarize(trace("ccra", [1, 1], [1, 1], [5, 4]), epsilon_target=0.1)
    assert s.rounds_to_target is None and s.reached == 0


def test_rounds_to_target_is_first_hit():
    (s,) = summarize(trace("ccra", [1, 2, 3], [3, 2, 1], [5, 0.5, 0.1]), epsilon_target=1.0)
    assert s.rounds_to_target == 2 and s.delay_to_target_s == 3.0


def test_dominating_system_stays_ahead():
    recs = trace("fast", [1, 1, 1], [1, 1, 1], [1, 1, 1]) + trace("slow", [2, 2, 2], [1, 1, 1], [1, 1, 1])
    by = {s.system: s for s in summarize(recs)}
    assert by["fast"].total_delay_mean_s < by["slow"].total_delay_mean_s


@given(st.permutations(range(6)))
def test_summary_is_permutation_invariant(order):
    recs = trace("a", [1, 2, 3], [3, 2, 1], [4, 3, 2]) + trace("b", [2, 2, 2], [1, 1, 1], [1, 1, 1], seed=1)
    assert summarize([recs[i] for i in order], 2.5) == summarize(recs, 2.5)


def test_empty_summary_rejected():
    with pytest.raises(ValueError):
        summarize([])


def test_csv_round_trip(tmp_path):
    recs = trace("ccra", [1.1, 2.2], [0.3, float("nan")], [1.0, 0.5])
    write_csv(recs, tmp_path / "r.csv")
    back = read_csv(tmp_path / "r.csv")
    assert back[0] == recs[0]
    assert math.isnan(back[1].loss) and back[1].total_s == recs[1].total_s
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == ",".join(FIELDS)


def test_summary_json(tmp_path):
    write_summary_json(summarize([rec()]), tmp_path / "s.json", {"note": "x"})
    doc = json.loads((tmp_path / "s.json").read_text())
    assert doc["note"] == "x" and doc["systems"][0]["system"] == "ccra"
