import json

import pytest

from hapsfl.cli import main
from hapsfl.metrics import read_csv
from hapsfl.scenario import generate_scenario, save_scenario


def test_run_writes_records(tmp_path):
    assert main(["run", "--clients", "10", "--system", "ccra", "--rounds", "3", "--out", str(tmp_path)]) == 0
    recs = read_csv(tmp_path / "records.csv")
    assert len(recs) >= 1 and recs[0].system == "ccra"
    assert json.loads((tmp_path / "config.json").read_text())["clients"] == 10
    assert (tmp_path / "summary.json").exists()


def test_run_is_byte_deterministic(tmp_path):
    args = ["run", "--clients", "8", "--rounds", "3", "--seed", "5", "--system", "terr-ran-sel"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a/records.csv").read_bytes() == (tmp_path / "b/records.csv").read_bytes()


def test_missing_scenario_file(tmp_path):
    assert main(["run", "--scenario", str(tmp_path / "missing.file"), "--out", str(tmp_path)]) != 0


def test_scenario_file_with_flag_override(tmp_path):
    save_scenario(generate_scenario(6, seed=3), tmp_path / "s.yaml")
    out = tmp_path / "o"
    assert main(["run", "--scenario", str(tmp_path / "s.yaml"), "--sigma2", "3", "--rounds", "2",
                 "--out", str(out)]) == 0
    cfg = json.loads((out / "config.json").read_text())
    assert cfg["clients"] == 6 and cfg["sigma2"] == 3.0 and cfg["seed"] == 3


def test_infeasible_run_exits_2(tmp_path):
    s = generate_scenario(4, seed=0).with_params(client_energy_budget_j=1e-9)
    save_scenario(s, tmp_path / "s.yaml")
    out = tmp_path / "o"
    assert main(["run", "--scenario", str(tmp_path / "s.yaml"), "--out", str(out)]) == 2
    assert "budget" in (out / "feasibility.txt").read_text()


def test_outputs_are_not_replaced(tmp_path):
    args = ["run", "--clients", "5", "--rounds", "1", "--out", str(tmp_path)]
    assert main(args) == 0
    assert main(args) == 1
    assert main(args + ["--overwrite"]) == 0


def test_bad_flag_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["run", "--system", "nope", "--out", str(tmp_path)])
    assert info.value.code == 2


def test_sweep_cardinality(tmp_path):
    assert main(["sweep", "clients", "--values", "10", "100", "--systems", "ccra", "haps-no-sel",
                 "--seeds", "0", "1", "--rounds", "2", "--delay-only", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert len(rows) - 1 == 2 * 2 * 2


def test_sigma2_sweep_emits_ratios(tmp_path):
    assert main(["sweep", "sigma2", "--values", "0.01", "3", "--systems", "ccra", "--rounds", "2",
                 "--delay-only", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "ratios.csv").read_text().splitlines()
    assert lines[0] == "system,value,ratio" and len(lines) == 3


def test_eta_sweep_delay_nonincreasing(tmp_path):
    assert main(["sweep", "eta", "--values", "0.1", "0.5", "0.9", "--systems", "ccra", "--clients", "100",
                 "--rounds", "2", "--delay-only", "--out", str(tmp_path)]) == 0
    pts = json.loads((tmp_path / "sweep_summary.json").read_text())["points"]
    delays = [p["per_round_delay_mean_s"] for p in sorted(pts, key=lambda p: p["value"])]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(delays, delays[1:]))


def test_verify_bound_passes(capsys):
    assert main(["verify", "bound", "--seeds", "2"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_verify_kkt_passes(capsys):
    assert main(["verify", "kkt", "--seeds", "6"]) == 0


def test_verify_brute_passes():
    assert main(["verify", "brute", "--seeds", "1"]) == 0


def test_channel_export(tmp_path):
    out = tmp_path / "ch.csv"
    assert main(["channels", "--clients", "3", "--rounds", "2", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("round,client") and len(lines) == 1 + 6
