"""Client and global losses for the desk-scale learning tasks.

``linear``    ridge least squares, f = (x^T w - y)^2 / 2 + reg/2 |w|^2
``logistic``  ridge logistic, f = log(1 + exp(-y x^T w)) + reg/2 |w|^2, y in {-1, +1}
``quadratic`` directly specified F_k(w) = (w - c_k)^T A_k (w - c_k) / 2 + reg/2 |w|^2

Linear and quadratic clients are stored as quadratic forms
``F_k(w) = w^T H_k w / 2 - g_k^T w + c_k`` so gradients are cheap and exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KINDS = ("linear", "logistic", "quadratic")


@dataclass
class LossModel:
    kind: str
    datasets: list
    reg: float = 0.0
    sample_counts: np.ndarray | None = None
    _forms: list = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}; expected one of {KINDS}")
        if not self.datasets:
            raise ValueError("a loss model needs at least one client dataset")
        if self.reg < 0:
            raise ValueError("regularisation weight must be >= 0")
        counts = []
        for k, (a, b) in enumerate(self.datasets):
            if self.kind == "quadratic":
                counts.append(1)
            else:
                if len(a) == 0:
                    raise ValueError(f"client {k} has an empty dataset")
                counts.append(len(a))
        if self.sample_counts is None:
            self.sample_counts = np.asarray(counts, dtype=float)
        else:
            self.sample_counts = np.asarray(self.sample_counts, dtype=float)
        if self.kind != "logistic":
            self._forms = [self._quadratic_form(a, b) for a, b in self.datasets]
            self._H = np.stack([f[0] for f in self._forms])
            self._g = np.stack([f[1] for f in self._forms])
            self._c = np.array([f[2] for f in self._forms])

    def _quadratic_form(self, a, b):
        q = a.shape[1]
        if self.kind == "linear":
            n = len(a)
            H = a.T @ a / n
            g = a.T @ b / n
            c = float(b @ b) / (2 * n)
        else:
            H = np.asarray(a, dtype=float)
            g = H @ b
            c = 0.5 * float(b @ H @ b)
        return H + self.reg * np.eye(q), g, c

    @property
    def num_clients(self) -> int:
        return len(self.datasets)

    @property
    def dim(self) -> int:
        return self.datasets[0][0].shape[1]

    @property
    def is_quadratic(self) -> bool:
        return self.kind != "logistic"

    def client_loss(self, w, k) -> float:
        w = np.asarray(w, dtype=float)
        if self.is_quadratic:
            H, g, c = self._forms[k]
            return float(0.5 * w @ H @ w - g @ w + c)
        X, y = self.datasets[k]
        m = -y * (X @ w)
        return float(np.mean(np.logaddexp(0.0, m)) + 0.5 * self.reg * w @ w)

    def client_grad(self, w, k) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if self.is_quadratic:
            H, g, _ = self._forms[k]
            return H @ w - g
        X, y = self.datasets[k]
        s = -y * _sigmoid(-y * (X @ w))
        return X.T @ s / len(y) + self.reg * w

    def client_grads(self, W, idx) -> np.ndarray:
        """Gradients of clients ``idx`` at the rows of ``W`` (one point per client)."""
        idx = np.asarray(idx)
        W = np.asarray(W, dtype=float)
        if self.is_quadratic:
            return np.einsum("kij,kj->ki", self._H[idx], W) - self._g[idx]
        return np.stack([self.client_grad(W[j], k) for j, k in enumerate(idx)])

    def client_hessian(self, w, k) -> np.ndarray:
        if self.is_quadratic:
            return self._forms[k][0]
        X, y = self.datasets[k]
        s = _sigmoid(X @ w)
        return (X.T * (s * (1 - s))) @ X / len(y) + self.reg * np.eye(self.dim)

    def _weights(self, idx):
        J = self.sample_counts[idx]
        return J / J.sum()

    def global_loss(self, w, idx=None) -> float:
        """``sum_k (J_k / J) F_k(w)`` over clients ``idx`` (all clients by default)."""
        idx = self._index(idx)
        wts = self._weights(idx)
        return float(sum(wt * self.client_loss(w, k) for wt, k in zip(wts, idx)))

    def global_grad(self, w, idx=None) -> np.ndarray:
        idx = self._index(idx)
        wts = self._weights(idx)
        return sum(wt * self.client_grad(w, k) for wt, k in zip(wts, idx))

    def _index(self, idx):
        if idx is None:
            return np.arange(self.num_clients)
        idx = np.asarray(idx, dtype=int)
        if idx.size == 0:
            raise ValueError("global loss over an empty client set")
        return idx

    def curvature(self) -> tuple[float, float]:
        """``(M, u)``: largest and smallest Hessian eigenvalues over all clients.

        For the logistic kind, M uses the 1/4 bound on the sigmoid derivative
        and u is the ridge weight.
        """
        if self.is_quadratic:
            eig = np.linalg.eigvalsh(self._H)
            return float(eig[:, -1].max()), float(eig[:, 0].min())
        tops = []
        for X, _ in self.datasets:
            tops.append(np.linalg.eigvalsh(X.T @ X / len(X))[-1] / 4.0)
        return float(max(tops)) + self.reg, float(self.reg)

    def optimum(self, idx=None, tol=1e-10, max_iter=200) -> tuple[np.ndarray, float]:
        """Minimiser of the global loss: direct solve, or Newton with a gradient-norm stop."""
        idx = self._index(idx)
        wts = self._weights(idx)
        if self.is_quadratic:
            H = np.einsum("k,kij->ij", wts, self._H[idx])
            g = wts @ self._g[idx]
            w = np.linalg.solve(H, g)
            return w, self.global_loss(w, idx)
        w = np.zeros(self.dim)
        for _ in range(max_iter):
            grad = self.global_grad(w, idx)
            if np.linalg.norm(grad) <= tol:
                break
            H = sum(wt * self.client_hessian(w, k) for wt, k in zip(wts, idx))
            step = np.linalg.solve(H, grad)
            # backtracking keeps Newton monotone far from the optimum
            t, f0 = 1.0, self.global_loss(w, idx)
            while self.global_loss(w - t * step, idx) > f0 - 0.25 * t * grad @ step and t > 1e-8:
                t *= 0.5
            w = w - t * step
        return w, self.global_loss(w, idx)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))
