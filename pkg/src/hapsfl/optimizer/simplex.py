"""Dense two-phase tableau simplex with bounded variables.

Solves ``min c^T x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq`` and
``0 <= x <= upper``. Upper bounds are handled by the bound-flipping ratio test
rather than as extra rows, which keeps the tableau at ``m x (n + m)``.
Pricing is Dantzig's largest reduced cost, falling back to Bland's rule after
a run of degenerate pivots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEGENERATE_RUN = 50


@dataclass
class LpResult:
    x: np.ndarray
    fun: float
    status: str  # optimal | infeasible | unbounded | iteration_limit
    iterations: int

    @property
    def success(self) -> bool:
        return self.status == "optimal"


class _Tableau:
    def __init__(self, T, xb, basis, upper, tol):
        self.T = T
        self.xb = xb
        self.basis = basis
        self.upper = upper
        self.at_upper = np.zeros(T.shape[1], dtype=bool)
        self.tol = tol
        self.iterations = 0

    def values(self):
        x = np.where(self.at_upper, self.upper, 0.0)
        x[self.basis] = self.xb
        return x

    def pivot(self, r, j):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        rows = np.flatnonzero(col)  # tableau columns are often sparse
        T[rows] -= np.outer(col[rows], T[r])
        self.basis[r] = j

    def run(self, cost, max_iter):
        """Primal simplex from the current basic feasible solution."""
        T, tol = self.T, self.tol
        d = cost - cost[self.basis] @ T
        n = T.shape[1]
        movable = self.upper > tol
        bland = False
        degenerate = 0
        while self.iterations < max_iter:
            is_basic = np.zeros(n, dtype=bool)
            is_basic[self.basis] = True
            score = np.where(self.at_upper, d, -d)
            score[is_basic | ~movable] = -np.inf
            if bland:
                cand = np.flatnonzero(score > tol)
                if cand.size == 0:
                    return "optimal"
                j = int(cand[0])
            else:
                j = int(np.argmax(score))
                if score[j] <= tol:
                    return "optimal"
            direction = -1.0 if self.at_upper[j] else 1.0
            col = direction * T[:, j]
            step, leave = self.upper[j], -1
            ub_b = self.upper[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                down = np.where(col > tol, self.xb / col, np.inf)
                up = np.where(col < -tol, (ub_b - self.xb) / -col, np.inf)
            ratios = np.maximum(np.minimum(down, up), 0.0)
            if ratios.size:
                r = int(np.argmin(ratios))
                if bland:
                    ties = np.flatnonzero(ratios <= ratios[r] + tol)
                    r = int(ties[np.argmin(self.basis[ties])])
                if ratios[r] < step:
                    step, leave = ratios[r], r
            if not np.isfinite(step):
                return "unbounded"
            self.iterations += 1
            degenerate = degenerate + 1 if step <= tol else 0
            if degenerate > DEGENERATE_RUN:
                bland = True
            self.xb -= step * col
            if leave < 0:
                self.at_upper[j] = not self.at_upper[j]
                continue
            out = self.basis[leave]
            self.at_upper[out] = col[leave] < 0
            entering = step if direction > 0 else self.upper[j] - step
            self.pivot(leave, j)
            self.xb[leave] = entering
            self.at_upper[j] = False
            d -= d[j] * T[leave]
            np.clip(self.xb, 0.0, self.upper[self.basis], out=self.xb)
        return "iteration_limit"


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, upper=None, *,
             tol=1e-9, max_iter=None) -> LpResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    upper = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float).copy()
    if np.any(upper < 0):
        raise ValueError("upper bounds must be >= 0")
    m_ub, m_eq = b_ub.size, b_eq.size
    m = m_ub + m_eq
    max_iter = 50 * (n + m) + 100 if max_iter is None else max_iter

    # equality form with one slack per inequality row
    A = np.zeros((m, n + m_ub))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    needs_art = np.ones(m, dtype=bool)
    needs_art[:m_ub] = flip[:m_ub]
    art_rows = np.flatnonzero(needs_art)
    n_core = n + m_ub
    T = np.hstack([A, np.zeros((m, art_rows.size))])
    T[art_rows, n_core + np.arange(art_rows.size)] = 1.0
    ub_all = np.concatenate([upper, np.full(m_ub + art_rows.size, np.inf)])
    basis = np.empty(m, dtype=int)
    slack_rows = np.flatnonzero(~needs_art)
    basis[slack_rows] = n + slack_rows
    basis[art_rows] = n_core + np.arange(art_rows.size)
    tab = _Tableau(T, b.copy(), basis, ub_all, tol)

    if art_rows.size:
        phase1 = np.zeros(T.shape[1])
        phase1[n_core:] = 1.0
        status = tab.run(phase1, max_iter)
        if status == "iteration_limit":
            return LpResult(tab.values()[:n], np.nan, status, tab.iterations)
        scale = max(1.0, float(np.abs(b).max(initial=0.0)))
        if tab.values()[n_core:].sum() > 1e-7 * scale:
            return LpResult(tab.values()[:n], np.nan, "infeasible", tab.iterations)
        _drive_out_artificials(tab, n_core)
        keep = tab.basis < n_core
        tab.T = tab.T[keep][:, :n_core]
        tab.xb = tab.xb[keep]
        tab.basis = tab.basis[keep]
        tab.upper = tab.upper[:n_core]
        tab.at_upper = tab.at_upper[:n_core]

    cost = np.concatenate([c, np.zeros(tab.T.shape[1] - n)])
    status = tab.run(cost, max_iter)
    x = tab.values()[:n]
    return LpResult(x, float(c @ x), status, tab.iterations)


def _drive_out_artificials(tab: _Tableau, n_core: int) -> None:
    """Pivot zero-level artificials out of the basis; redundant rows keep theirs and are dropped."""
    for r in np.flatnonzero(tab.basis >= n_core):
        row = np.abs(tab.T[r, :n_core])
        row[tab.basis[tab.basis < n_core]] = 0.0
        j = int(np.argmax(row))
        if row[j] > tab.tol:
            tab.pivot(r, j)
            tab.xb[r] = 0.0 if not tab.at_upper[j] else tab.upper[j]
