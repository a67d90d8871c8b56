"""Client surrogate problem, local solver and server aggregation.

Client k at round n minimises over the bias z::

    G_k(w, z) = F_k(w + z) - (grad F_k(w) - xi grad F(w))^T z

and uploads z; the server moves ``w <- w + mean(z)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import LossModel

DIVERGENCE_NORM = 1e12


class LocalDivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelState:
    weights: np.ndarray
    round_index: int = 0

    def __post_init__(self):
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("model weights must be finite")


@dataclass(frozen=True)
class LocalUpdate:
    client_id: int
    bias: np.ndarray
    sq_norm: float

    @classmethod
    def from_bias(cls, client_id, bias):
        bias = np.asarray(bias, dtype=float)
        return cls(int(client_id), bias, float(bias @ bias))


def surrogate_value(task: LossModel, w, z, k, global_grad, xi) -> float:
    w = np.asarray(w, dtype=float)
    z = np.asarray(z, dtype=float)
    lin = task.client_grad(w, k) - xi * np.asarray(global_grad)
    return task.client_loss(w + z, k) - float(lin @ z)


def surrogate_gradient(task: LossModel, w, z, k, global_grad, xi) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    z = np.asarray(z, dtype=float)
    return task.client_grad(w + z, k) - (task.client_grad(w, k) - xi * np.asarray(global_grad))


def surrogate_minimizer(task: LossModel, w, k, global_grad, xi) -> np.ndarray:
    """Exact argmin of G_k for quadratic clients (``H_k z = -xi grad F(w)``)."""
    if not task.is_quadratic:
        raise ValueError("closed-form surrogate minimiser needs a quadratic client")
    H = task.client_hessian(w, k)
    return np.linalg.solve(H, -xi * np.asarray(global_grad, dtype=float))


def local_sgd(task: LossModel, w, k, global_grad, *, step, xi, iterations,
              rng=None, batch_size=None) -> LocalUpdate:
    """Run ``iterations`` gradient steps on G_k from ``z = 0``.

    Full local gradients by default; ``batch_size`` switches to minibatch
    sampling with ``rng`` (logistic and linear kinds only).
    """
    w = np.asarray(w, dtype=float)
    z = np.zeros_like(w)
    anchor = task.client_grad(w, k) - xi * np.asarray(global_grad, dtype=float)
    for _ in range(int(iterations)):
        if batch_size is None:
            g = task.client_grad(w + z, k)
        else:
            g = _minibatch_grad(task, w + z, k, batch_size, rng)
        z = z - step * (g - anchor)
        if not np.all(np.isfinite(z)) or np.linalg.norm(z) > DIVERGENCE_NORM:
            raise LocalDivergenceError(
                f"local solve of client {k} diverged; is the step below 2/M?")
    return LocalUpdate.from_bias(k, z)


def local_sgd_many(task: LossModel, w, clients, global_grad, *, step, xi, iterations) -> np.ndarray:
    """Full-gradient local solves for several clients at once; rows are the biases."""
    clients = np.asarray(clients, dtype=int)
    w = np.asarray(w, dtype=float)
    W = np.broadcast_to(w, (len(clients), w.size))
    anchor = task.client_grads(W, clients) - xi * np.asarray(global_grad, dtype=float)
    Z = np.zeros((len(clients), w.size))
    for _ in range(int(iterations)):
        Z = Z - step * (task.client_grads(W + Z, clients) - anchor)
        if not np.all(np.isfinite(Z)) or np.abs(Z).max(initial=0.0) > DIVERGENCE_NORM:
            raise LocalDivergenceError("local solve diverged; is the step below 2/M?")
    return Z


def _minibatch_grad(task, w, k, batch_size, rng):
    if task.kind == "quadratic":
        raise ValueError("minibatches need sample-based clients")
    X, y = task.datasets[k]
    pick = rng.choice(len(y), size=min(batch_size, len(y)), replace=False)
    sub = LossModel(task.kind, [(X[pick], y[pick])], task.reg)
    return sub.client_grad(w, 0)


def aggregate(model: ModelState, updates) -> ModelState:
    """``w + mean(z_k)`` over the received updates."""
    updates = list(updates)
    if not updates:
        raise ValueError("cannot aggregate an empty update set")
    # fixed summation order makes the result independent of arrival order
    updates.sort(key=lambda u: u.client_id)
    Z = np.stack([u.bias for u in updates])
    if Z.shape[1] != model.weights.size:
        raise ValueError("update dimension does not match the model")
    step = Z.mean(axis=0)
    mean_sq = float(np.mean([u.sq_norm for u in updates]))
    assert step @ step <= mean_sq * (1 + 1e-12) + 1e-300, "mean-square inequality violated"
    return ModelState(model.weights + step, model.round_index + 1)
