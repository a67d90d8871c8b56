import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import make_problem
from hapsfl.channel import fixed_channel, realize_channel, uplink_rate
from hapsfl.errors import InfeasibleError
from hapsfl.optimizer import (Allocation, check_allocation, evaluate_delay, feasibility_check,
                              min_upload_time, solve, solve_problem)
from hapsfl.optimizer.blocks import compute_time, haps_rate
from hapsfl.optimizer.brute import brute_force
from hapsfl.optimizer.types import SolverOptions
from hapsfl.scenario import generate_scenario


def test_single_client_with_generous_budgets():
    P = make_problem(1, client=1e6, haps=1e12)
    out = solve_problem(P)
    A = out.allocation
    assert out.state.converged and out.state.iteration <= 3
    t_up = P.bits / uplink_rate(P.bandwidth, P.power_max[0], P.gains[0], P.noise_psd)
    t_cp = P.work[0] * math.log2(1 / 0.95) / P.cpu_max[0]
    t_bc = P.bits / uplink_rate(P.bandwidth, P.haps_power_max, P.gains[0], P.noise_psd)
    t_h = P.haps_density * P.bits / P.haps_cpu_max
    assert out.delay.total_s == pytest.approx(t_up + t_cp + t_bc + t_h, rel=1e-9)
    assert A.local_accuracy == 0.95 and A.cpu_hz[0] == P.cpu_max[0]
    assert A.haps_cpu_hz == P.haps_cpu_max and A.haps_bc_power_w == P.haps_power_max


@given(st.integers(0, 10**6), st.sampled_from([2, 5, 12, 30]))
def test_objective_trace_is_monotone(seed, K):
    out = solve_problem(make_problem(K, seed))
    trace = np.asarray(out.state.trace)
    assert np.all(np.diff(trace) <= 1e-9)


@pytest.mark.parametrize("seed", range(50))
def test_solution_is_feasible(seed):
    s = generate_scenario(3 + seed % 40, seed=seed)
    ch = realize_channel(s, seed)
    from hapsfl.verify import iteration_constant_for
    v = iteration_constant_for(s)
    out = solve(s, ch, v)
    report = feasibility_check(out.allocation, s, ch, v)
    assert report.passed, report.format()
    assert out.allocation.count >= 1


def test_participation_floor():
    out = solve_problem(make_problem(20, 4), SolverOptions(min_selected=7))
    assert out.allocation.count == 7


def test_residuals_are_small():
    out = solve_problem(make_problem(40, 8))
    assert set(out.state.residuals) == {"eta", "cpu", "power", "bandwidth", "haps_cpu",
                                        "haps_power", "haps_time"}
    assert max(out.state.residuals.values()) < 1e-6


def test_residuals_with_binding_haps_budget():
    P = make_problem(10, 3, haps=200.0)
    out = solve_problem(P)
    assert out.state.multipliers["omega"] > 0
    assert max(out.state.residuals.values()) < 1e-6


def test_no_feasible_start_is_reported():
    P = make_problem(4, client=1e-9)
    with pytest.raises(InfeasibleError) as info:
        solve_problem(P)
    assert "budget" in str(info.value)


@given(st.integers(0, 10**6), st.floats(0.1, 10.0))
def test_uplink_argmax_is_scale_invariant(seed, c):
    P = make_problem(6, seed)
    A = solve_problem(P).allocation
    base = evaluate_delay(P, A)
    B = A.copy()
    B.upload_time_s = A.upload_time_s * c
    B.cpu_hz = A.cpu_hz / c
    scaled = evaluate_delay(P, B)
    assert scaled.uplink_s == pytest.approx(c * base.uplink_s, rel=1e-12)
    assert scaled.argmax_client == base.argmax_client


def test_argmax_ties_go_to_lowest_index():
    P = make_problem(3, 0)
    A = solve_problem(P, SolverOptions(min_selected=3)).allocation
    A.upload_time_s[:] = 10.0
    A.cpu_hz[:] = np.inf
    assert evaluate_delay(P, A).argmax_client == 0


@pytest.mark.parametrize("seed", range(4))
def test_block_optimality_probe(seed):
    """Small feasible perturbations of the returned point never help by more than 1e-6."""
    P = make_problem(12, seed)
    A = solve_problem(P).allocation
    tau = evaluate_delay(P, A).total_s
    rng = np.random.default_rng(seed)
    sel = A.selection
    tried = 0
    for _ in range(200):
        d = lambda n: 1 + 0.01 * rng.uniform(-1, 1, n)
        c = A.copy()
        c.bandwidth_hz = np.where(sel, c.bandwidth_hz * d(P.size), 0.0)
        c.upload_power_w = np.where(sel, np.minimum(P.power_max, c.upload_power_w * d(P.size)), 0.0)
        c.cpu_hz = np.clip(c.cpu_hz * d(P.size), P.cpu_min, P.cpu_max)
        c.local_accuracy = min(0.95, c.local_accuracy * d(1)[0])
        c.haps_cpu_hz = float(np.clip(c.haps_cpu_hz * d(1)[0], P.haps_cpu_min, P.haps_cpu_max))
        c.haps_bc_power_w = float(min(P.haps_power_max, c.haps_bc_power_w * d(1)[0]))
        c.upload_time_s = min_upload_time(P.bits, c.bandwidth_hz, c.upload_power_w, P.gains,
                                          P.noise_psd, sel)
        c.haps_bc_time_s = P.bits / haps_rate(P, sel, c.haps_bc_power_w)
        if check_allocation(P, c).passed:
            tried += 1
            assert evaluate_delay(P, c).total_s >= tau * (1 - 1e-6)
    assert tried >= 20


@pytest.mark.parametrize("seed", range(3))
def test_close_to_exhaustive_search(seed):
    P = make_problem(3, seed)
    ours = solve_problem(P).delay.total_s
    ref = brute_force(P, eta_points=20, split_steps=12).total_s
    assert ours <= 1.05 * ref


def test_exhaustive_search_is_limited_to_tiny_instances():
    with pytest.raises(ValueError):
        brute_force(make_problem(7))


# feasibility report ----------------------------------------------------------------------

def test_bandwidth_overflow_is_flagged():
    P = make_problem(4, 1)
    A = solve_problem(P, SolverOptions(min_selected=4)).allocation
    A.bandwidth_hz = A.bandwidth_hz * ((P.bandwidth + 1.0) / A.bandwidth_hz.sum())
    report = check_allocation(P, A)
    assert not report["bandwidth"].passed
    assert "bandwidth" in report.violated


def test_empty_selection_only_warns():
    P = make_problem(3)
    K = P.size
    A = Allocation(np.zeros(K, bool), np.zeros(K), np.zeros(K), P.cpu_min.copy(), np.zeros(K), 0.5,
                   0.0, 0.0, P.haps_cpu_min)
    report = check_allocation(P, A)
    assert report.passed
    assert any("no clients selected" in w for w in report.warnings)


def test_energy_violation_names_worst_client():
    P = make_problem(5, 2)
    A = solve_problem(P).allocation
    k = int(A.selected[0])
    budgets = P.energy_budget.copy()
    budgets[k] = 1e-6
    report = check_allocation(P.with_budgets(client=budgets), A)
    assert report["client_energy"].worst_client == k


def test_fixed_channel_solve_is_deterministic():
    s = generate_scenario(8, seed=1)
    ch = fixed_channel(s)
    a = solve(s, ch, 10.0).allocation.to_dict()
    b = solve(s, ch, 10.0).allocation.to_dict()
    assert a == b
