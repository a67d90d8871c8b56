"""Invariant suites shared by the CLI ``verify`` command and the acceptance tests."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .channel import realize_channel
from .experiments import ExperimentConfig, build_task
from .fl.bound import FlHyperparams
from .fl.data import generate_noniid_data
from .fl.loop import random_planner, run_ccra_fl
from .fl.losses import LossModel
from .optimizer.brute import brute_force
from .optimizer.solver import solve_problem
from .optimizer.types import Problem, SolverOptions
from .scenario import generate_scenario

KKT_TOL = 1e-6
MONOTONE_SLACK = 1e-9
BRUTE_RATIO = 1.05


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    passed: bool

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.name}: {self.value:.6g} (limit {self.threshold:.6g})"


def iteration_constant_for(scenario, config: ExperimentConfig | None = None) -> float:
    config = ExperimentConfig(clients=scenario.size) if config is None else config
    return FlHyperparams.for_task(build_task(scenario, config)).v


def ridge_task(seed: int, clients: int, samples: int = 50, heterogeneity=0.5, reg=0.1) -> LossModel:
    data = generate_noniid_data(seed, clients, samples, heterogeneity, dim=10, kind="linear")
    return LossModel("linear", data, reg=reg)


def bound_suite(seeds=range(20), *, clients=20, counts=(5, 20), etas=(0.3, 0.7), rounds=20) -> list:
    """Optimality gap never above the bound, at every round of every run."""
    violations = 0
    worst = 0.0
    runs = 0
    for seed in seeds:
        task = ridge_task(seed, clients)
        for count in counts:
            for eta in etas:
                hyper = FlHyperparams.for_task(task, eta=eta)
                rng = np.random.default_rng([seed, count, int(eta * 1000)])
                run = run_ccra_fl(task, hyper, random_planner(clients, count, eta, rng), rounds)
                gaps = np.asarray(run.gaps)
                bounds = np.asarray(run.bounds)
                violations += int(np.sum(gaps > bounds))
                worst = max(worst, float(np.max(gaps[1:] / np.maximum(bounds[1:], 1e-300), initial=0.0)))
                runs += 1
    return [Check(f"bound violations over {runs} runs", violations, 0, violations == 0),
            Check("largest gap/bound ratio after round 0", worst, 1.0, worst <= 1.0)]


def solver_instances(seeds=range(200), sizes=(5, 50, 200)):
    """Yield (seed, Problem) pairs cycling through the sizes."""
    sizes = tuple(sizes)
    for j, seed in enumerate(seeds):
        K = sizes[j % len(sizes)]
        s = generate_scenario(K, seed=seed)
        yield seed, Problem.build(s, realize_channel(s, 0), iteration_constant_for(s))


def kkt_suite(seeds=range(200), sizes=(5, 50, 200), options: SolverOptions | None = None) -> list:
    """Monotone objective trace and closed-form plug-back residuals at every solution."""
    worst = {}
    rises = 0
    max_rise = 0.0
    count = 0
    for _, P in solver_instances(seeds, sizes):
        out = solve_problem(P, options)
        trace = np.asarray(out.state.trace)
        rise = np.max(np.diff(trace) / trace[:-1], initial=-np.inf)
        max_rise = max(max_rise, float(rise))
        rises += int(rise > MONOTONE_SLACK)
        for key, val in out.state.residuals.items():
            worst[key] = max(worst.get(key, 0.0), val)
        count += 1
    checks = [Check(f"non-monotone traces over {count} solves", rises, 0, rises == 0),
              Check("largest relative step increase", max_rise, MONOTONE_SLACK, max_rise <= MONOTONE_SLACK)]
    for key in sorted(worst):
        checks.append(Check(f"residual {key}", worst[key], KKT_TOL, worst[key] < KKT_TOL))
    return checks


def brute_suite(seeds=range(20), clients=3, options: SolverOptions | None = None) -> list:
    """Solver delay against exhaustive search on tiny instances."""
    ratios = []
    started = time.perf_counter()
    for seed in seeds:
        s = generate_scenario(clients, seed=seed)
        P = Problem.build(s, realize_channel(s, 0), iteration_constant_for(s))
        ours = solve_problem(P, options).delay.total_s
        ref = brute_force(P, options).total_s
        ratios.append(ours / ref)
    worst = float(max(ratios))
    elapsed = time.perf_counter() - started
    return [Check(f"worst solver/exhaustive ratio over {len(ratios)} instances", worst, BRUTE_RATIO,
                  worst <= BRUTE_RATIO),
            Check("suite seconds", elapsed, 300.0, elapsed < 300.0)]


SUITES = {"bound": bound_suite, "kkt": kkt_suite, "brute": brute_suite}
