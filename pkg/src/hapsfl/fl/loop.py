"""The federated training loop.

Each round: ask the planner for a selection and a local accuracy, broadcast
the model, collect the selected clients' gradients, run the local surrogate
solves, aggregate, and update the convergence bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..compute import local_iterations
from ..errors import InfeasibleError
from .bound import FlHyperparams, RoundHistory, convergence_bound
from .local import LocalUpdate, ModelState, aggregate, local_sgd, local_sgd_many
from .losses import LossModel


@dataclass
class RoundPlan:
    """What the resource planner decided for one round."""

    selected: np.ndarray
    eta: float
    delay: object = None  # DelayBreakdown, or None for pure learning runs
    extra: dict = field(default_factory=dict)


Planner = Callable[[int, ModelState], RoundPlan]


def fixed_planner(selected, eta) -> Planner:
    sel = np.asarray(selected, dtype=int)
    return lambda n, model: RoundPlan(sel, eta)


def random_planner(num_clients, count, eta, rng) -> Planner:
    """Fresh uniform subset of ``count`` clients every round."""
    def plan(n, model):
        return RoundPlan(np.sort(rng.choice(num_clients, size=count, replace=False)), eta)
    return plan


@dataclass
class FlRun:
    model: ModelState
    history: RoundHistory
    plans: list
    f_star: float
    f0_gap: float
    bounds: list  # epsilon(n) for n = 0..rounds
    gaps: list  # F(w^n) - F(w*) for n = 0..rounds

    @property
    def delays(self):
        return [p.delay for p in self.plans]

    @property
    def rounds(self) -> int:
        return len(self.history)


def run_ccra_fl(
    task: LossModel,
    hyper: FlHyperparams,
    planner: Planner,
    max_rounds: int,
    *,
    w0=None,
    fixed_iterations: Optional[int] = None,
    batch_size: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> FlRun:
    """Train until the bound reaches ``hyper.epsilon_target`` or ``max_rounds``.

    The learning objective is the loss over every client of ``task``; the
    server-side gradient fed to the surrogates averages the selected clients.
    The bound is evaluated with the loosest local accuracy seen so far.
    """
    hyper.check_condition()
    w = np.zeros(task.dim) if w0 is None else np.asarray(w0, dtype=float).copy()
    model = ModelState(w, 0)
    _, f_star = task.optimum()
    f0_gap = max(task.global_loss(w) - f_star, 0.0)
    history = RoundHistory()
    plans, bounds, gaps = [], [f0_gap], [f0_gap]
    worst_eta = 0.0
    for n in range(max_rounds):
        if bounds[-1] <= hyper.epsilon_target:
            break
        try:
            plan = planner(n, model)
        except InfeasibleError as exc:
            exc.round_index = n
            raise
        sel = np.asarray(plan.selected, dtype=int)
        if sel.size == 0:
            raise InfeasibleError("planner selected no clients", round_index=n)
        iters = fixed_iterations if fixed_iterations is not None else local_iterations(hyper.v, plan.eta)
        grad = task.global_grad(model.weights, sel)
        if batch_size is None:
            Z = local_sgd_many(task, model.weights, sel, grad, step=hyper.step, xi=hyper.xi,
                               iterations=iters)
            updates = [LocalUpdate.from_bias(k, z) for k, z in zip(sel, Z)]
        else:
            updates = [local_sgd(task, model.weights, k, grad, step=hyper.step, xi=hyper.xi,
                                 iterations=iters, rng=rng, batch_size=batch_size) for k in sel]
        model = aggregate(model, updates)
        loss = task.global_loss(model.weights)
        history.append(sel.size, sum(u.sq_norm for u in updates), loss, plan.eta)
        plans.append(plan)
        worst_eta = max(worst_eta, plan.eta)
        bounds.append(convergence_bound(hyper.with_eta(worst_eta), history, f0_gap))
        gaps.append(loss - f_star)
    return FlRun(model, history, plans, f_star, f0_gap, bounds, gaps)
