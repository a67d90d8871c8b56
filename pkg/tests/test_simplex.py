import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from hapsfl.optimizer.blocks import selection_lp
from hapsfl.optimizer.simplex import solve_lp


def _random_lp(rng, n, m, with_eq):
    c = rng.normal(size=n)
    A = rng.normal(size=(m, n))
    x0 = rng.uniform(0, 1, n)  # guarantees a feasible point
    b = A @ x0 + rng.uniform(0, 1, m)
    Aeq = beq = None
    if with_eq:
        Aeq = rng.normal(size=(1, n))
        beq = Aeq @ x0
    upper = np.where(rng.random(n) < 0.5, rng.uniform(1, 3, n), np.inf)
    return c, A, b, Aeq, beq, upper


@pytest.mark.parametrize("seed", range(60))
def test_matches_highs_on_random_lps(seed):
    rng = np.random.default_rng(seed)
    n, m = rng.integers(2, 9), rng.integers(1, 8)
    c, A, b, Aeq, beq, upper = _random_lp(rng, n, m, seed % 3 == 0)
    ref = linprog(c, A, b, Aeq, beq, bounds=[(0, u if np.isfinite(u) else None) for u in upper],
                  method="highs")
    ours = solve_lp(c, A, b, Aeq, beq, upper=upper)
    if ref.status == 3:
        assert ours.status == "unbounded"
        return
    assert ref.status == 0 and ours.success
    assert ours.fun == pytest.approx(ref.fun, rel=1e-7, abs=1e-7)
    x = ours.x
    assert np.all(A @ x <= b + 1e-7) and np.all(x >= -1e-9) and np.all(x <= upper + 1e-9)


def test_infeasible_is_reported():
    res = solve_lp(np.ones(2), np.array([[1.0, 1.0]]), np.array([-1.0]))
    assert res.status == "infeasible" and not res.success


@given(st.lists(st.floats(1.0, 100.0), min_size=1, max_size=12), st.data())
def test_selection_lp_matches_highs(durations, data):
    d = np.array(durations)
    n = d.size
    floor = data.draw(st.integers(1, n))
    bw = np.full(n, 1.0)
    res = selection_lp(d, bw, floor, n, float(n))
    c = np.zeros(n + 1)
    c[-1] = 1
    A = np.zeros((n + 2, n + 1))
    A[np.arange(n), np.arange(n)] = d
    A[:n, -1] = -1
    A[n, :n] = -1
    A[n + 1, :n] = bw / n
    b = np.concatenate([np.zeros(n), [-floor, 1.0]])
    ref = linprog(c, A, b, bounds=[(0, 1)] * n + [(0, None)], method="highs")
    assert res.success
    assert res.fun == pytest.approx(ref.fun, rel=1e-8, abs=1e-9)
