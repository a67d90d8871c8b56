"""Wiring: scenario + task + per-round planner + learning loop, and parameter sweeps."""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .baselines import baseline_round
from .channel import ChannelState, channel_rng, realize_channel
from .fl.bound import FlHyperparams, RoundHistory
from .fl.data import generate_noniid_data
from .fl.loop import FlRun, RoundPlan, run_ccra_fl
from .fl.losses import LossModel
from .metrics import ExperimentRecord, build_records
from .optimizer.solver import solve
from .optimizer.types import SolverOptions
from .scenario import STREAM_SELECTION, Scenario, SystemParams, generate_scenario

SYSTEMS = ("ccra", "terr_no_sel", "terr_ran_sel", "haps_no_sel")
SWEEP_AXES = ("clients", "eta", "sigma2", "rounds")


def normalize_system(name: str) -> str:
    key = name.replace("-", "_").lower()
    if key not in SYSTEMS:
        raise ValueError(f"unknown system {name!r}; expected one of {SYSTEMS}")
    return key


@dataclass(frozen=True)
class ExperimentConfig:
    clients: int = 50
    rounds: int = 20
    system: str = "ccra"
    seed: int = 0
    eta_cap: float = 0.95
    sigma2: float | None = None  # overrides the scenario's displacement variance
    min_fraction: float = 0.2
    min_selected: int | None = None
    tolerance: float = 1e-6
    l_max: int = 50
    heterogeneity: float = 0.5
    dim: int = 10
    reg: float = 0.1
    xi: float = 1.0
    epsilon_target: float = 0.0
    learn: bool = True
    antithetic_rounds: bool = False

    def __post_init__(self):
        object.__setattr__(self, "system", normalize_system(self.system))
        if self.clients < 1 or self.rounds < 1:
            raise ValueError("clients and rounds must be >= 1")

    def solver_options(self) -> SolverOptions:
        return SolverOptions(eta_cap=self.eta_cap, min_selected=self.min_selected,
                             min_fraction=self.min_fraction, tolerance=self.tolerance,
                             l_max=self.l_max)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def make_scenario(config: ExperimentConfig, params: SystemParams | None = None) -> Scenario:
    s = generate_scenario(config.clients, params, seed=config.seed)
    if config.sigma2 is not None:
        s = s.with_params(displacement_variance_km2=config.sigma2)
    return s


def build_task(scenario: Scenario, config: ExperimentConfig) -> LossModel:
    counts = scenario.sample_counts.astype(int)
    data = generate_noniid_data(scenario.seed, scenario.size, counts, config.heterogeneity,
                                dim=config.dim, kind="linear")
    return LossModel("linear", data, reg=config.reg)


def round_channel(scenario: Scenario, n: int, antithetic_rounds=False) -> ChannelState:
    """Channel of round n; with antithetic rounds, round 2j+1 mirrors the displacement of 2j."""
    if not antithetic_rounds:
        return realize_channel(scenario, n)
    state = realize_channel(scenario, n, channel_rng(scenario, n // 2), antithetic=bool(n % 2))
    return state


def make_planner(system: str, scenario: Scenario, v: float, config: ExperimentConfig):
    options = config.solver_options()
    rng = scenario.rng(STREAM_SELECTION)

    def plan(n, model=None):
        ch = round_channel(scenario, n, config.antithetic_rounds)
        if system == "ccra" or system == "terr_ran_sel":
            alloc, delay, state = solve(scenario, ch, v, options)
            if system == "ccra":
                return RoundPlan(alloc.selected, alloc.local_accuracy, delay,
                                 {"solver_iterations": state.iteration})
            count = alloc.count
        else:
            count = None
        selected, delay = baseline_round(system, scenario, ch, v, config.eta_cap, count=count, rng=rng)
        return RoundPlan(selected, config.eta_cap, delay)

    return plan


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    scenario: Scenario
    records: list
    run: FlRun | None


def run_experiment(config: ExperimentConfig, scenario: Scenario | None = None) -> ExperimentResult:
    scenario = make_scenario(config) if scenario is None else scenario
    task = build_task(scenario, config)
    hyper = FlHyperparams.for_task(task, eta=config.eta_cap, xi=config.xi,
                                   epsilon_target=config.epsilon_target)
    planner = make_planner(config.system, scenario, hyper.v, config)
    sid = f"K{scenario.size}-s{scenario.seed}"
    if config.learn:
        run = run_ccra_fl(task, hyper, planner, config.rounds)
        records = build_records(sid, config.system, scenario.seed, run.delays, run.history, run.bounds)
        return ExperimentResult(config, scenario, records, run)
    history = RoundHistory()
    delays = []
    for n in range(config.rounds):
        plan = planner(n)
        history.append(len(plan.selected), np.nan, np.nan, plan.eta)
        delays.append(plan.delay)
    bounds = [np.nan] * (config.rounds + 1)
    records = build_records(sid, config.system, scenario.seed, delays, history, bounds)
    return ExperimentResult(config, scenario, records, None)


@dataclass(frozen=True)
class SweepRow:
    axis: str
    value: float
    system: str
    seed: int
    rounds: int
    selected_mean: float
    per_round_delay_s: float
    total_delay_s: float
    final_loss: float
    final_bound: float


SWEEP_FIELDS = tuple(f.name for f in dataclasses.fields(SweepRow))


def _apply_axis(config: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis == "clients":
        return config.replace(clients=int(value))
    if axis == "eta":
        return config.replace(eta_cap=float(value))
    if axis == "sigma2":
        return config.replace(sigma2=float(value))
    if axis == "rounds":
        return config.replace(rounds=int(value))
    raise ValueError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


def _sweep_point(args) -> SweepRow:
    axis, value, cfg = args
    recs: list[ExperimentRecord] = run_experiment(cfg).records
    return SweepRow(
        axis=axis, value=float(value), system=cfg.system, seed=cfg.seed, rounds=len(recs),
        selected_mean=float(np.mean([r.selected for r in recs])),
        per_round_delay_s=float(np.mean([r.total_s for r in recs])),
        total_delay_s=float(recs[-1].cumulative_s),
        final_loss=float(recs[-1].loss), final_bound=float(recs[-1].bound))


def sweep(axis: str, values, systems, seeds, base: ExperimentConfig, workers: int = 1) -> list:
    """One row per (value, system, seed), in that nesting order whatever the worker count."""
    if not len(values):
        raise ValueError("sweep needs at least one value")
    points = [(axis, value, _apply_axis(base, axis, value).replace(system=system, seed=int(seed)))
              for value in values for system in systems for seed in seeds]
    if workers <= 1:
        return [_sweep_point(p) for p in points]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_point, points))


def sweep_summary(rows) -> list:
    """Mean and std of the per-round delay and final loss per (value, system)."""
    groups = {}
    for r in sorted(rows, key=lambda r: (r.system, r.value, r.seed)):
        groups.setdefault((r.system, r.value), []).append(r)
    out = []
    for (system, value), rs in sorted(groups.items()):
        d = np.array([r.per_round_delay_s for r in rs])
        loss = np.array([r.final_loss for r in rs])
        out.append({"system": system, "value": value, "seeds": len(rs),
                    "per_round_delay_mean_s": float(d.mean()), "per_round_delay_std_s": float(d.std()),
                    "total_delay_mean_s": float(np.mean([r.total_delay_s for r in rs])),
                    "final_loss_mean": float(loss.mean()), "final_loss_std": float(loss.std())})
    return out


def ratio_table(summary) -> list:
    """Per system, each value's mean per-round delay relative to the first value."""
    out = []
    by_sys = {}
    for row in summary:
        by_sys.setdefault(row["system"], []).append(row)
    for system, rows in sorted(by_sys.items()):
        ref = rows[0]["per_round_delay_mean_s"]
        for row in rows:
            out.append({"system": system, "value": row["value"],
                        "ratio": row["per_round_delay_mean_s"] / ref})
    return out
