"""Command-line entry point: run, sweep, verify and channel-trace export."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

from .channel import realize_channel
from .errors import InfeasibleError
from .experiments import (SWEEP_AXES, SWEEP_FIELDS, SYSTEMS, ExperimentConfig, make_scenario,
                          normalize_system, ratio_table, run_experiment, sweep, sweep_summary)
from .metrics import summarize, write_csv, write_summary_json
from .scenario import ScenarioFormatError, load_scenario
from .verify import SUITES

DEFAULT_VERIFY_SEEDS = {"bound": 20, "kkt": 200, "brute": 20}


def _system(name: str) -> str:
    try:
        return normalize_system(name)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--clients", type=int, help="number of clients K (default 50)")
    p.add_argument("--rounds", type=int, help="communication rounds (default 20)")
    p.add_argument("--eta-cap", type=float, help="upper limit on the local accuracy")
    p.add_argument("--sigma2", type=float, help="HAPS displacement variance in km^2")
    p.add_argument("--tolerance", type=float, help="relative stopping tolerance of the solver")
    p.add_argument("--l-max", type=int, help="solver iteration limit")
    p.add_argument("--min-fraction", type=float, help="participation floor as a fraction of K")
    p.add_argument("--heterogeneity", type=float, help="non-IID strength in [0, 1]")
    p.add_argument("--epsilon", type=float, help="target bound; training stops once reached")
    p.add_argument("--delay-only", action="store_true", help="skip training, report delays only")
    p.add_argument("--antithetic", action="store_true",
                   help="pair rounds 2j and 2j+1 with mirrored displacement draws")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--overwrite", action="store_true", help="replace existing output files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hapsfl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train one system and record per-round delays")
    _common(run)
    run.add_argument("--system", type=_system, default="ccra",
                     help="ccra | terr-no-sel | terr-ran-sel | haps-no-sel")
    run.add_argument("--seed", type=int, help="scenario seed (default 0)")
    run.add_argument("--seeds", type=int, nargs="+", help="run several seeds into one CSV")
    run.add_argument("--scenario", type=Path, help="scenario file; flags override its values")

    sw = sub.add_parser("sweep", help="sweep one parameter over several systems and seeds")
    _common(sw)
    sw.add_argument("axis", choices=SWEEP_AXES)
    sw.add_argument("--values", type=float, nargs="+", required=True)
    sw.add_argument("--systems", type=_system, nargs="+", default=list(SYSTEMS))
    sw.add_argument("--seeds", type=int, nargs="+", default=[0])
    sw.add_argument("--workers", type=int, default=1)

    ver = sub.add_parser("verify", help="run an invariant suite; exit 1 on any failure")
    ver.add_argument("suite", choices=sorted(SUITES) + ["all"])
    ver.add_argument("--seeds", type=int, help="number of seeds (suite default otherwise)")

    tr = sub.add_parser("channels", help="export per-round channel gains as CSV")
    tr.add_argument("--clients", type=int, default=10)
    tr.add_argument("--rounds", type=int, default=5)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--sigma2", type=float)
    tr.add_argument("--scenario", type=Path)
    tr.add_argument("--out", type=Path, required=True, help="CSV file")
    return parser


def _config(args, **extra) -> ExperimentConfig:
    mapping = {"clients": args.clients, "rounds": args.rounds, "eta_cap": args.eta_cap,
               "sigma2": args.sigma2, "tolerance": args.tolerance, "l_max": args.l_max,
               "min_fraction": args.min_fraction, "heterogeneity": args.heterogeneity,
               "epsilon_target": args.epsilon}
    given = {k: v for k, v in mapping.items() if v is not None}
    given.update({k: v for k, v in extra.items() if v is not None})
    if args.delay_only:
        given["learn"] = False
    if args.antithetic:
        given["antithetic_rounds"] = True
    return ExperimentConfig(**given)


def _prepare_out(out: Path, names, overwrite: bool) -> None:
    out.mkdir(parents=True, exist_ok=True)
    clash = [n for n in names if (out / n).exists()]
    if clash and not overwrite:
        raise FileExistsError(f"{out}: refusing to replace {', '.join(clash)} (pass --overwrite)")


def _echo_config(out: Path, doc: dict) -> None:
    (out / "config.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _load(path: Path, args):
    """Scenario from file with flag overrides applied."""
    s = load_scenario(path)
    if args.seed is not None:
        s = dataclasses.replace(s, seed=args.seed)
    if args.clients is not None and args.clients != s.size:
        s = s.subset(args.clients)
    if args.sigma2 is not None:
        s = s.with_params(displacement_variance_km2=args.sigma2)
    return s


def _report_infeasible(out: Path, exc: InfeasibleError) -> int:
    text = str(exc)
    report = getattr(exc, "report", None)
    if report is not None and hasattr(report, "format"):
        text += "\n" + report.format()
    out.mkdir(parents=True, exist_ok=True)
    (out / "feasibility.txt").write_text(text + "\n")
    print(f"infeasible: {text}", file=sys.stderr)
    return 2


def cmd_run(args) -> int:
    out = args.out
    _prepare_out(out, ("records.csv", "summary.json", "config.json"), args.overwrite)
    if args.scenario is not None:
        scenario = _load(args.scenario, args)
        cfg = _config(args, system=args.system, seed=scenario.seed).replace(clients=scenario.size)
        if args.seeds:
            print("--seeds is ignored with --scenario", file=sys.stderr)
        jobs = [(cfg, scenario)]
    else:
        seeds = args.seeds or [0 if args.seed is None else args.seed]
        jobs = [(_config(args, system=args.system, seed=s), None) for s in seeds]
    records = []
    try:
        for cfg, scenario in jobs:
            records.extend(run_experiment(cfg, scenario).records)
    except InfeasibleError as exc:
        return _report_infeasible(out, exc)
    first = jobs[0][0]
    _echo_config(out, {"command": "run", "scenario_file": str(args.scenario) if args.scenario else None,
                       "seeds": [c.seed for c, _ in jobs], **dataclasses.asdict(first)})
    write_csv(records, out / "records.csv")
    write_summary_json(summarize(records, first.epsilon_target), out / "summary.json")
    print(f"wrote {len(records)} rows to {out / 'records.csv'}")
    return 0


def _write_rows(path: Path, fields, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            vals = [getattr(r, f) if not isinstance(r, dict) else r[f] for f in fields]
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in vals])


def cmd_sweep(args) -> int:
    out = args.out
    names = ["sweep.csv", "sweep_summary.json", "config.json"]
    if args.axis == "sigma2":
        names.append("ratios.csv")
    _prepare_out(out, names, args.overwrite)
    base = _config(args)
    try:
        rows = sweep(args.axis, args.values, args.systems, args.seeds, base, workers=args.workers)
    except InfeasibleError as exc:
        return _report_infeasible(out, exc)
    _echo_config(out, {"command": "sweep", "axis": args.axis, "values": args.values,
                       "systems": args.systems, "seeds": args.seeds, **dataclasses.asdict(base)})
    _write_rows(out / "sweep.csv", SWEEP_FIELDS, rows)
    summary = sweep_summary(rows)
    (out / "sweep_summary.json").write_text(
        json.dumps({"axis": args.axis, "points": summary}, indent=2, sort_keys=True) + "\n")
    if args.axis == "sigma2":
        _write_rows(out / "ratios.csv", ("system", "value", "ratio"), ratio_table(summary))
    print(f"wrote {len(rows)} rows to {out / 'sweep.csv'}")
    return 0


def cmd_verify(args) -> int:
    suites = sorted(SUITES) if args.suite == "all" else [args.suite]
    failed = []
    for name in suites:
        n = args.seeds if args.seeds is not None else DEFAULT_VERIFY_SEEDS[name]
        print(f"[{name}] {n} seeds")
        for check in SUITES[name](range(n)):
            print("  " + check.line())
            if not check.passed:
                failed.append(f"{name}: {check.name}")
    if failed:
        print("failing checks:\n  " + "\n  ".join(failed))
        return 1
    print("all checks passed")
    return 0


def cmd_channels(args) -> int:
    if args.scenario is not None:
        scenario = _load(args.scenario, args)
    else:
        scenario = make_scenario(ExperimentConfig(clients=args.clients, seed=args.seed, sigma2=args.sigma2))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("round", "client", "displacement_km", "fading", "gain"))
        for n in range(args.rounds):
            ch = realize_channel(scenario, n)
            for k in range(scenario.size):
                w.writerow((n, k, repr(float(ch.displacement_km)), repr(float(ch.fading_gains[k])),
                            repr(float(ch.gains[k]))))
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "verify": cmd_verify, "channels": cmd_channels}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (FileNotFoundError, FileExistsError, ScenarioFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
