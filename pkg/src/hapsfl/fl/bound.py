"""Upper bound on the optimality gap of the global model after n rounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..compute import iteration_constant


class BoundConditionError(ValueError):
    """The curvature condition ``u <= M min(xi, sqrt(2/xi))`` does not hold."""


@dataclass(frozen=True)
class FlHyperparams:
    lipschitz: float  # M
    strong_convexity: float  # u
    step: float  # delta
    eta: float = 0.5
    xi: float = 1.0
    epsilon_target: float = 0.0

    def __post_init__(self):
        if not (self.lipschitz > 0 and self.strong_convexity > 0):
            raise ValueError("M and u must be positive")
        if self.strong_convexity > self.lipschitz * (1 + 1e-12):
            raise ValueError(f"u = {self.strong_convexity} exceeds M = {self.lipschitz}")
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if self.xi <= 0:
            raise ValueError("xi must be positive")
        iteration_constant(self.lipschitz, self.strong_convexity, self.step)

    @property
    def v(self) -> float:
        return iteration_constant(self.lipschitz, self.strong_convexity, self.step)

    def condition_holds(self) -> bool:
        limit = self.lipschitz * min(self.xi, math.sqrt(2.0 / self.xi))
        return self.strong_convexity <= limit * (1 + 1e-12)

    def check_condition(self) -> None:
        if not self.condition_holds():
            raise BoundConditionError(
                f"u = {self.strong_convexity} > M min(xi, sqrt(2/xi)) = "
                f"{self.lipschitz * min(self.xi, math.sqrt(2.0 / self.xi))}")

    def with_eta(self, eta: float) -> "FlHyperparams":
        return FlHyperparams(self.lipschitz, self.strong_convexity, self.step, eta,
                             self.xi, self.epsilon_target)

    @classmethod
    def for_task(cls, task, *, eta=0.5, xi=1.0, epsilon_target=0.0, step=None):
        """Curvature from the task; step defaults to 1/M."""
        M, u = task.curvature()
        return cls(M, u, 1.0 / M if step is None else step, eta, xi, epsilon_target)


@dataclass
class RoundHistory:
    selected_count: list = field(default_factory=list)
    sum_sq_bias: list = field(default_factory=list)
    global_loss: list = field(default_factory=list)
    eta: list = field(default_factory=list)

    def append(self, selected_count, sum_sq_bias, global_loss, eta=None):
        if selected_count < 1:
            raise ValueError("an executed round needs at least one selected client")
        self.selected_count.append(int(selected_count))
        self.sum_sq_bias.append(float(sum_sq_bias))
        self.global_loss.append(float(global_loss))
        self.eta.append(eta)

    def __len__(self):
        return len(self.selected_count)


def contraction_factor(hyper: FlHyperparams, eta=None) -> float:
    """``rho = 1 - (1 - eta) u^2 xi / (2 M^2)``."""
    eta = hyper.eta if eta is None else eta
    M, u, xi = hyper.lipschitz, hyper.strong_convexity, hyper.xi
    return 1.0 - (1.0 - eta) * u * u * xi / (2.0 * M * M)


def convergence_bound(hyper: FlHyperparams, history: RoundHistory, f0_gap: float,
                      rounds: int | None = None) -> float:
    """Closed-form bound on ``F(w^n) - F(w*)`` after ``rounds`` executed rounds.

    Uses the first ``rounds`` entries of ``history`` (all of them by default).
    """
    hyper.check_condition()
    if f0_gap < 0:
        raise ValueError("initial gap F(w0) - F(w*) must be >= 0")
    n = len(history) if rounds is None else rounds
    if n > len(history):
        raise ValueError(f"history holds {len(history)} rounds, asked for {n}")
    rho = contraction_factor(hyper)
    M, u, xi = hyper.lipschitz, hyper.strong_convexity, hyper.xi
    if n == 0:
        return float(f0_gap)
    counts = np.asarray(history.selected_count[:n], dtype=float)
    sums = np.asarray(history.sum_sq_bias[:n], dtype=float)
    powers = rho ** (n - 1 - np.arange(n))
    bias_term = (M * xi - u) / (2.0 * xi) * float(np.sum(powers * sums / counts))
    return float(rho**n * f0_gap + bias_term)


def bound_trace(hyper: FlHyperparams, history: RoundHistory, f0_gap: float) -> np.ndarray:
    return np.array([convergence_bound(hyper, history, f0_gap, n) for n in range(len(history) + 1)])
