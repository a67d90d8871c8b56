"""Block-coordinate solver for the per-round delay problem.

Blocks run in the order upload-time/accuracy, cpu/selection, power/bandwidth,
HAPS resources. A block's output replaces the iterate only if it is feasible
and does not increase the total delay, so the objective trace is monotone.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from ..channel import ChannelState
from ..errors import InfeasibleError
from ..scenario import Scenario
from .blocks import (LN2, bandwidth_stationarity, compute_energy, cpu_closed_form, evaluate_delay,
                     haps_compute_seconds, haps_cpu_from_multiplier, haps_power_from_multiplier,
                     haps_rate, log_inv, min_upload_time, power_closed_form, solve_sub1,
                     solve_sub2, solve_sub3, solve_sub4)
from .feasibility import check_allocation
from .types import Allocation, DelayBreakdown, Problem, SolverOptions, SolverState


class SolveOutcome(NamedTuple):
    allocation: Allocation
    delay: DelayBreakdown
    state: SolverState


def initial_allocation(P: Problem, options: SolverOptions) -> Allocation:
    """Everyone selected, equal bandwidth, every resource at its maximum."""
    K = P.size
    sel = np.ones(K, dtype=bool)
    b = np.full(K, P.bandwidth / K)
    p = P.power_max.copy()
    t_up = min_upload_time(P.bits, b, p, P.gains, P.noise_psd, sel)
    p_h = P.haps_power_max
    t_bc = P.bits / haps_rate(P, sel, p_h)
    return Allocation(sel, p, b, P.cpu_max.copy(), t_up, min(0.5, options.eta_cap),
                      p_h, t_bc, P.haps_cpu_max)


def _deselect(A: Allocation, mask) -> None:
    A.selection[mask] = False
    A.upload_power_w[mask] = 0.0
    A.bandwidth_hz[mask] = 0.0
    A.upload_time_s[mask] = 0.0


def repair(P: Problem, A: Allocation) -> Allocation:
    """Make a starting point feasible by lowering frequencies or dropping clients."""
    A = A.copy()
    spare = P.energy_budget - A.upload_power_w * A.upload_time_s
    need = compute_energy(P, A.cpu_hz, A.local_accuracy)
    over = A.selection & (need > spare)
    if over.any():
        f = cpu_closed_form(P, A)
        lower = over & (f >= P.cpu_min)
        A.cpu_hz[lower] = f[lower]
        _deselect(A, over & ~lower)
    A.cpu_hz[~A.selection] = P.cpu_min[~A.selection]
    if not A.selection.any():
        raise InfeasibleError("no client fits its energy budget at the starting point")
    A.haps_bc_time_s = P.bits / haps_rate(P, A.selection, A.haps_bc_power_w)
    durations = A.upload_time_s + P.work * log_inv(A.local_accuracy) / A.cpu_hz
    while True:
        spare_h = P.haps_energy_budget - A.haps_bc_power_w * A.haps_bc_time_s
        if spare_h <= 0:
            raise InfeasibleError("HAPS broadcast alone exceeds the HAPS energy budget")
        load = P.haps_density * P.bits * A.count
        f_lim = math.sqrt(spare_h / (P.haps_capacitance * load))
        if f_lim >= P.haps_cpu_min or A.count == 1:
            break
        on = A.selected
        _deselect(A, on[np.argmax(durations[on])])
        A.cpu_hz[~A.selection] = P.cpu_min[~A.selection]
        A.haps_bc_time_s = P.bits / haps_rate(P, A.selection, A.haps_bc_power_w)
    A.haps_cpu_hz = min(P.haps_cpu_max, f_lim)
    return A


def _apply_sub1(P, A, options, floor):
    r = solve_sub1(P, A, options.eta_cap)
    c = A.copy()
    c.upload_time_s = r.upload_time_s
    c.local_accuracy = r.eta
    return c, r


def _apply_sub2(P, A, options, floor):
    r = solve_sub2(P, A, floor, threshold=options.round_threshold, lp_tol=options.lp_tol)
    c = A.copy()
    _deselect(c, A.selection & ~r.selection)
    c.cpu_hz = r.cpu_hz
    return c, r


def _apply_sub3(P, A, options, floor):
    r = solve_sub3(P, A)
    c = A.copy()
    _deselect(c, A.selection & ~r.selection)
    c.upload_power_w = r.power_w
    c.bandwidth_hz = r.bandwidth_hz
    c.upload_time_s = np.where(r.selection, r.upload_time_s, 0.0)
    return c, r


def _apply_sub4(P, A, options, floor):
    r = solve_sub4(P, A)
    c = A.copy()
    c.haps_cpu_hz = r.cpu_hz
    c.haps_bc_power_w = r.bc_power_w
    c.haps_bc_time_s = r.bc_time_s
    return c, r


BLOCKS = (("sub1", _apply_sub1), ("sub2", _apply_sub2), ("sub3", _apply_sub3), ("sub4", _apply_sub4))


def solve_problem(P: Problem, options: SolverOptions | None = None) -> SolveOutcome:
    options = SolverOptions() if options is None else options
    state = SolverState(options)
    floor = options.floor(P.size)
    A = repair(P, initial_allocation(P, options))
    report = check_allocation(P, A)
    if not report.passed:
        raise InfeasibleError("no feasible starting point:\n" + report.format(), report=report)
    tau = evaluate_delay(P, A).total_s
    state.trace.append(tau)
    last = {}
    for l in range(1, options.l_max + 1):
        prev = tau
        for name, step in BLOCKS:
            try:
                cand, info = step(P, A, options, floor)
            except InfeasibleError as exc:
                state.block_log.append((l, name, "infeasible", str(exc)))
                continue
            c_tau = evaluate_delay(P, cand).total_s
            if c_tau <= tau and check_allocation(P, cand).passed:
                A, tau = cand, c_tau
                last[name] = info
                state.block_log.append((l, name, "accepted", c_tau))
            else:
                state.block_log.append((l, name, "rejected", c_tau))
        state.trace.append(tau)
        state.iteration = l
        if abs(prev - tau) < options.tolerance * prev:
            state.converged = True
            break
    if "sub1" in last:
        state.multipliers["theta"] = last["sub1"].theta
        state.multipliers["lambda"] = last["sub1"].lam
    if "sub3" in last:
        state.multipliers["psi_bandwidth"] = last["sub3"].psi
        state.multipliers["gamma"] = 1.0
        state.taylor_point = last["sub3"].taylor_point
    if "sub4" in last:
        state.multipliers["omega"] = last["sub4"].omega
        state.multipliers["psi_haps"] = last["sub4"].psi
    state.residuals = kkt_residuals(P, A, state)
    return SolveOutcome(A, evaluate_delay(P, A), state)


def solve(scenario: Scenario, channel: ChannelState, v: float,
          options: SolverOptions | None = None) -> SolveOutcome:
    """Minimise the round delay for one channel realisation; ``v`` is the iteration constant."""
    return solve_problem(Problem.build(scenario, channel, v), options)


def _rel(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.maximum(np.abs(b), 1e-300)
    return float(np.max(np.abs(a - b) / scale, initial=0.0))


def kkt_residuals(P: Problem, A: Allocation, state: SolverState) -> dict:
    """Relative plug-back residuals of every closed form at the returned point."""
    sel = A.selection
    idx = A.selected
    out = {}
    if idx.size == 0:
        return out
    cap = state.options.eta_cap

    # local accuracy: minimum upload times, stationarity and complementary slackness
    r1 = solve_sub1(P, A, cap)
    beta1 = float(np.max(P.work[idx] / A.cpu_hz[idx]))
    beta2 = float(np.sum(r1.lam[idx] * P.capacitance[idx] * P.work[idx] * A.cpu_hz[idx] ** 2))
    theta = (beta1 + beta2) / (A.local_accuracy * LN2)
    out["eta"] = max(
        _rel(A.upload_time_s[idx], r1.upload_time_s[idx]),
        abs(A.local_accuracy - (beta1 + beta2) / (theta * LN2)) / A.local_accuracy,
        abs(cap - A.local_accuracy) / cap if theta > 0 else 0.0,
        0.0 if theta >= 0 and np.all(r1.lam >= 0) else 1.0,
    )

    out["cpu"] = _rel(A.cpu_hz[idx], cpu_closed_form(P, A)[idx])
    out["power"] = _rel(A.upload_power_w[idx], power_closed_form(P, A)[idx])

    r3 = solve_sub3(P, A)
    pi = P.gains[idx] * r3.power_w[idx] / P.noise_psd
    x0 = r3.taylor_point
    scale = np.log1p(pi / x0) + pi / (x0 + pi) + 1.0
    out["bandwidth"] = float(np.max(np.abs(
        bandwidth_stationarity(r3.closed_form_bandwidth[idx], pi, x0, r3.psi)) / scale))

    h_min = float(P.gains[idx].min())
    t_hcp = haps_compute_seconds(P, A.count, A.haps_cpu_hz)
    e_h = P.haps_capacitance * A.haps_cpu_hz**3 * t_hcp + A.haps_bc_power_w * A.haps_bc_time_s
    slack = abs(e_h - P.haps_energy_budget) / P.haps_energy_budget
    omega = state.multipliers.get("omega", 0.0)
    if omega > 0:
        out["haps_cpu"] = max(_rel(A.haps_cpu_hz, haps_cpu_from_multiplier(omega, P.haps_capacitance)),
                              slack)
    else:
        out["haps_cpu"] = _rel(A.haps_cpu_hz, P.haps_cpu_max)
    psi = state.multipliers.get("psi_haps", 0.0)
    if psi > 0:
        p_star = haps_power_from_multiplier(psi, P.bandwidth, P.noise_psd, h_min)
        out["haps_power"] = max(_rel(A.haps_bc_power_w, p_star), slack)
    else:
        out["haps_power"] = _rel(A.haps_bc_power_w, P.haps_power_max)
    out["haps_time"] = _rel(A.haps_bc_time_s, P.bits / haps_rate(P, sel, A.haps_bc_power_w))
    return out
