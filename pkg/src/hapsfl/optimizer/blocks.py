"""Closed-form block updates of the per-round delay problem.

Each ``solve_subN`` takes the current :class:`Allocation`, holds every other
block fixed and returns a result object with the new values of its own block
plus the multipliers it recovered. None of them mutates its input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..channel import downlink_rate, uplink_rate
from ..errors import InfeasibleError
from .simplex import LpResult, solve_lp
from .types import Allocation, DelayBreakdown, Problem
from ..compute import ComputeLedger

LN2 = math.log(2.0)


def log_inv(eta: float) -> float:
    return math.log2(1.0 / eta)


def compute_time(P: Problem, cpu_hz, eta: float) -> np.ndarray:
    return P.work * log_inv(eta) / np.asarray(cpu_hz, dtype=float)


def compute_energy(P: Problem, cpu_hz, eta: float) -> np.ndarray:
    """``zeta v C J log2(1/eta) f^2`` (computing power times computing time)."""
    f = np.asarray(cpu_hz, dtype=float)
    return P.capacitance * P.work * log_inv(eta) * f * f


def client_rates(P: Problem, A: Allocation) -> np.ndarray:
    return uplink_rate(A.bandwidth_hz, A.upload_power_w, P.gains, P.noise_psd)


def haps_rate(P: Problem, selection, power) -> float:
    return downlink_rate(P.bandwidth, power, P.gains[selection], P.noise_psd)


def haps_compute_seconds(P: Problem, count, cpu_hz) -> float:
    return P.haps_density * P.bits * count / cpu_hz


def evaluate_delay(P: Problem, A: Allocation) -> DelayBreakdown:
    sel = A.selection
    t_cp = np.where(sel, compute_time(P, A.cpu_hz, A.local_accuracy), 0.0)
    per_client = np.where(sel, A.upload_time_s + t_cp, -np.inf)
    if sel.any():
        k = int(np.argmax(per_client))  # first maximiser, i.e. lowest index on ties
        uplink = float(per_client[k])
    else:
        k, uplink = -1, 0.0
    t_hcp = haps_compute_seconds(P, A.count, A.haps_cpu_hz)
    e_cp = np.where(sel, compute_energy(P, A.cpu_hz, A.local_accuracy), 0.0)
    e_up = np.where(sel, A.upload_power_w * A.upload_time_s, 0.0)
    e_h = (P.haps_capacitance * A.haps_cpu_hz**3 * t_hcp
           + (A.haps_bc_power_w * A.haps_bc_time_s if A.count else 0.0))
    ledger = ComputeLedger(t_cp, e_cp, e_up, t_hcp, e_h)
    bc = A.haps_bc_time_s if A.count else 0.0
    downlink = bc + t_hcp
    return DelayBreakdown(uplink, downlink, uplink + downlink, k, t_hcp, bc, ledger)


def min_upload_time(bits, bandwidth_hz, power_w, gain, noise_psd, selected=True):
    """``s / r_k`` for selected clients; zero for unselected ones."""
    sel = np.asarray(selected, dtype=bool)
    rate = np.asarray(uplink_rate(bandwidth_hz, power_w, gain, noise_psd), dtype=float)
    sel, rate = np.broadcast_arrays(sel, rate)
    if np.any(sel & ~(rate > 0)):
        bad = np.flatnonzero(sel & ~(rate > 0))
        raise InfeasibleError(f"selected client(s) {bad.tolist()} have zero uplink rate")
    with np.errstate(divide="ignore"):
        t = np.where(sel, bits / np.where(rate > 0, rate, 1.0), 0.0)
    return float(t) if t.ndim == 0 else t


# --- block 1: upload times and local accuracy -------------------------------------------


@dataclass
class Sub1Result:
    upload_time_s: np.ndarray
    eta: float
    eta_floor: float  # smallest energy-feasible eta
    theta: float
    lam: np.ndarray


def solve_sub1(P: Problem, A: Allocation, eta_cap: float) -> Sub1Result:
    """Minimum upload times, then the best local accuracy in ``(0, eta_cap]``.

    With the upload times fixed, the delay is decreasing in eta while every
    client's computing energy is decreasing in eta as well, so the optimum is
    ``eta_cap`` whenever any eta is feasible. The energy constraints give the
    floor ``eta >= 2^(-(E - p t)/(zeta v C J f^2))``.
    """
    sel = A.selection
    t_up = min_upload_time(P.bits, A.bandwidth_hz, A.upload_power_w, P.gains, P.noise_psd, sel)
    avail = P.energy_budget - A.upload_power_w * t_up
    coef = P.capacitance * P.work * A.cpu_hz**2
    floors = np.zeros(P.size)
    if sel.any():
        short = sel & (avail < 0)
        if short.any():
            k = int(np.flatnonzero(short)[0])
            raise InfeasibleError(f"client {k}: upload energy alone exceeds its budget")
        floors[sel] = np.exp2(-avail[sel] / coef[sel])
    eta_floor = float(floors.max(initial=0.0))
    if eta_floor > eta_cap * (1 + 1e-12):
        k = int(np.argmax(floors))
        raise InfeasibleError(
            f"client {k}: energy needs eta >= {eta_floor:.6g} above the cap {eta_cap}")
    eta = float(eta_cap)
    beta1 = float(np.max(np.where(sel, P.work / A.cpu_hz, 0.0), initial=0.0))
    lam = np.zeros(P.size)
    theta = beta1 / (eta * LN2)
    return Sub1Result(t_up, eta, eta_floor, theta, lam)


# --- block 2: cpu frequencies and selection ---------------------------------------------


def cpu_closed_form(P: Problem, A: Allocation, unclamped=False) -> np.ndarray:
    """Largest frequency the energy budget allows, capped at ``f_max``; 0 for unselected."""
    sel = A.selection
    li = log_inv(A.local_accuracy)
    if li == 0.0:
        raw = np.where(sel, np.inf, 0.0)
    else:
        spare = np.maximum(P.energy_budget - A.upload_time_s * A.upload_power_w, 0.0)
        raw = np.where(sel, np.sqrt(spare / (P.capacitance * P.work * li)), 0.0)
    return raw if unclamped else np.minimum(P.cpu_max, raw)


@dataclass
class Sub2Result:
    cpu_hz: np.ndarray
    selection: np.ndarray
    lp: LpResult | None
    relaxed: np.ndarray  # LP values of a, zero outside the candidate set
    candidates: np.ndarray


def selection_lp(durations, bandwidths, floor, cap, total_bandwidth, tol=1e-9) -> LpResult:
    """Relaxed selection: min T s.t. a_k d_k <= T, floor <= sum a <= cap, sum a b <= B, 0 <= a <= 1."""
    n = durations.size
    c = np.zeros(n + 1)
    c[-1] = 1.0
    A = np.zeros((n + 3, n + 1))
    A[np.arange(n), np.arange(n)] = durations
    A[:n, -1] = -1.0
    A[n, :n] = 1.0
    A[n + 1, :n] = -1.0
    A[n + 2, :n] = bandwidths / total_bandwidth
    b = np.concatenate([np.zeros(n), [cap, -floor, 1.0]])
    upper = np.concatenate([np.ones(n), [np.inf]])
    return solve_lp(c, A, b, upper=upper, tol=tol)


def round_selection(values, durations, floor, threshold=0.5) -> np.ndarray:
    """Threshold the relaxed selection and restore exactly ``floor`` clients.

    Missing clients are filled by LP value (ties to the shorter duration);
    surplus clients are trimmed keeping the shortest durations, since the
    delay is a maximum over selected clients.
    """
    n = values.size
    pick = values >= threshold
    order_fill = np.lexsort((np.arange(n), durations, -values))
    if pick.sum() < floor:
        for k in order_fill:
            if pick.sum() >= floor:
                break
            pick[k] = True
    if pick.sum() > floor:
        chosen = np.flatnonzero(pick)
        keep = chosen[np.lexsort((chosen, durations[chosen]))[:floor]]
        pick[:] = False
        pick[keep] = True
    return pick


def solve_sub2(P: Problem, A: Allocation, floor: int, *, threshold=0.5, lp_tol=1e-9) -> Sub2Result:
    sel = A.selection
    raw = cpu_closed_form(P, A, unclamped=True)
    f = np.minimum(P.cpu_max, raw)
    eligible = sel & (raw >= P.cpu_min * (1 - 1e-12))
    # downlink data constraint at the current broadcast time and power
    if sel.any():
        r_h = uplink_rate(P.bandwidth, A.haps_bc_power_w, P.gains, P.noise_psd)
        eligible &= A.haps_bc_time_s * r_h >= P.bits * (1 - 1e-9)
    cand = np.flatnonzero(eligible)
    if cand.size == 0:
        raise InfeasibleError("no client can meet its energy, uplink and downlink constraints")
    f_c = np.maximum(f[cand], P.cpu_min[cand])
    dur = A.upload_time_s[cand] + P.work[cand] * log_inv(A.local_accuracy) / f_c
    cap = haps_compute_seconds(P, A.count, A.haps_cpu_hz) * A.haps_cpu_hz / (P.haps_density * P.bits)
    cap = math.floor(cap + 1e-9)
    m = min(floor, cand.size, cap)
    lp = selection_lp(dur, A.bandwidth_hz[cand], m, cap, P.bandwidth, lp_tol)
    if not lp.success:
        raise InfeasibleError(f"selection relaxation is {lp.status}")
    relaxed = np.zeros(P.size)
    relaxed[cand] = lp.x[:-1]
    pick_c = round_selection(lp.x[:-1], dur, m, threshold)
    # repair: drop the slowest selected client while a constraint fails
    while pick_c.sum() > 1 and (pick_c.sum() > cap
                                 or (A.bandwidth_hz[cand] * pick_c).sum() > P.bandwidth * (1 + 1e-9)):
        on = np.flatnonzero(pick_c)
        pick_c[on[np.argmax(dur[on])]] = False
    selection = np.zeros(P.size, dtype=bool)
    selection[cand[pick_c]] = True
    cpu = np.where(selection, np.maximum(f, P.cpu_min), P.cpu_min)
    return Sub2Result(cpu, selection, lp, relaxed, cand)


# --- block 3: upload power and bandwidth ------------------------------------------------


def taylor_coefficients(pi, x0):
    pi = np.asarray(pi, dtype=float)
    return np.log1p(pi / x0), pi / (x0 * (x0 + pi))


def bandwidth_root(pi, x0, psi=0.0):
    """Positive root of ``beta1 - beta2 (b - x0) + pi/(b + pi) = psi ln2``."""
    pi = np.asarray(pi, dtype=float)
    beta1, beta2 = taylor_coefficients(pi, x0)
    beta1 = beta1 - psi * LN2
    lin = beta1 + beta2 * (x0 - pi)
    disc = lin * lin + 4.0 * beta2 * pi * (beta1 + beta2 * x0 + 1.0)
    return (lin + np.sqrt(np.maximum(disc, 0.0))) / (2.0 * beta2)


def bandwidth_stationarity(b, pi, x0, psi=0.0):
    beta1, beta2 = taylor_coefficients(pi, x0)
    return beta1 - beta2 * (b - x0) + pi / (b + pi) - psi * LN2


@dataclass
class Sub3Result:
    power_w: np.ndarray
    bandwidth_hz: np.ndarray
    selection: np.ndarray
    closed_form_bandwidth: np.ndarray
    psi: float
    taylor_point: float
    adopted: bool
    upload_time_s: np.ndarray = None
    flagged: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))


def power_closed_form(P: Problem, A: Allocation) -> np.ndarray:
    sel = A.selection
    spare = P.energy_budget - np.where(sel, compute_energy(P, A.cpu_hz, A.local_accuracy), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        cap = np.where(sel & (A.upload_time_s > 0), spare / A.upload_time_s, 0.0)
    return np.where(sel, np.clip(np.minimum(P.power_max, cap), 0.0, None), 0.0)


def bandwidth_for_rate(rate, pi, iters=90):
    """Least ``b`` with ``b log2(1 + pi/b) >= rate``; inf when ``rate`` reaches the
    infinite-band limit ``pi/ln2``. Bisects ``x = pi/b`` on a log scale."""
    rate = np.asarray(rate, dtype=float)
    pi = np.asarray(pi, dtype=float)
    c = rate * LN2 / pi  # need log1p(x)/x >= c, decreasing in x
    ok = c < 1.0
    lo = np.full(c.shape, -40.0)  # log x: log1p(x)/x -> 1 as x -> 0
    hi = np.full(c.shape, 40.0)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        x = np.exp(mid)
        good = np.log1p(x) / x >= c
        lo = np.where(good, mid, lo)
        hi = np.where(good, hi, mid)
    b = pi / np.exp(lo)  # lo side meets the rate
    return np.where(ok, b, np.inf)


def minimax_bandwidth(P: Problem, idx, power, t_cp, t_energy, t_start, iters=100):
    """Split the band so the slowest selected client finishes as early as possible.

    Client k must upload within ``min(T - t_cp_k, t_energy_k)``; the smallest T
    whose bandwidth demand fits in B is found by bisection, starting from the
    known feasible ``t_start``. Returns ``(T, bandwidth)`` over ``idx``.
    """
    pi = P.gains[idx] * power[idx] / P.noise_psd
    t_cp = t_cp[idx]
    t_energy = t_energy[idx]

    def demand(T):
        window = np.minimum(T - t_cp, t_energy)
        with np.errstate(divide="ignore"):
            need = np.where(window > 0, P.bits / np.where(window > 0, window, 1.0), np.inf)
        return bandwidth_for_rate(need, pi)

    lo = float(np.max(t_cp + P.bits * LN2 / pi))  # infinite-band limit
    hi = float(t_start)
    if not np.sum(demand(hi)) <= P.bandwidth:
        return None
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.sum(demand(mid)) <= P.bandwidth:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-13 * hi:
            break
    b = demand(hi)
    return hi, b * (P.bandwidth / b.sum())


def solve_sub3(P: Problem, A: Allocation) -> Sub3Result:
    """Energy-limited maximum power, then the bandwidth split.

    The linearised bandwidth rule comes from a first-order expansion of the
    rate. It competes with the exact minimax split (equal finishing times
    under each client's energy cap); the one with the smaller uplink delay is
    returned together with the upload times it implies.
    """
    sel = A.selection.copy()
    power = power_closed_form(P, A)
    flagged = np.flatnonzero(sel & (power <= 0))
    sel[flagged] = False
    power[flagged] = 0.0
    idx = np.flatnonzero(sel)
    b_closed = np.zeros(P.size)
    psi, x0 = 0.0, float("nan")
    if idx.size:
        pi = P.gains[idx] * power[idx] / P.noise_psd
        x0 = float(pi.max())
        b_c = bandwidth_root(pi, x0)
        if b_c.sum() > P.bandwidth:
            beta1, beta2 = taylor_coefficients(pi, x0)
            # every root reaches zero once psi ln2 = beta1 + beta2 x0 + 1
            lo, hi = 0.0, float(np.max(beta1 + beta2 * x0 + 1.0)) / LN2
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if bandwidth_root(pi, x0, mid).sum() > P.bandwidth:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= 1e-15 * max(hi, 1.0):
                    break
            psi = hi
            b_c = bandwidth_root(pi, x0, psi)
        b_closed[idx] = b_c

    t_cp = np.where(sel, compute_time(P, A.cpu_hz, A.local_accuracy), 0.0)
    spare = P.energy_budget - np.where(sel, compute_energy(P, A.cpu_hz, A.local_accuracy), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_energy = np.where(power > 0, spare / np.where(power > 0, power, 1.0), 0.0)

    def upload(b):
        return min_upload_time(P.bits, b, power, P.gains, P.noise_psd, sel)

    # the current split with the band filled up is always available
    bandwidth = np.where(sel, A.bandwidth_hz, 0.0)
    if bandwidth.sum() > 0:
        bandwidth = bandwidth * (P.bandwidth / bandwidth.sum())
    t_up = upload(bandwidth) if idx.size else np.zeros(P.size)
    best = float(np.max(t_up + t_cp, initial=0.0))
    adopted = False
    if idx.size:
        t_c = upload(b_closed)
        ok = bool(np.all(t_c[idx] <= t_energy[idx] * (1 + 1e-12)))
        if ok and np.max(t_c + t_cp) < best:
            bandwidth, t_up, best, adopted = b_closed, t_c, float(np.max(t_c + t_cp)), True
        mm = minimax_bandwidth(P, idx, power, t_cp, t_energy, best)
        if mm is not None:
            b_mm = np.zeros(P.size)
            b_mm[idx] = mm[1]
            t_mm = upload(b_mm)
            if (np.max(t_mm + t_cp) < best
                    and np.all(power[idx] * t_mm[idx] <= spare[idx] + 1e-12 * np.abs(spare[idx]))):
                bandwidth, t_up, best, adopted = b_mm, t_mm, float(np.max(t_mm + t_cp)), False
    return Sub3Result(power, bandwidth, sel, b_closed, psi, x0, adopted, t_up, flagged)


# --- block 4: HAPS frequency, broadcast power and time ----------------------------------


@dataclass
class Sub4Result:
    cpu_hz: float
    bc_time_s: float
    bc_power_w: float
    omega: float
    psi: float


def haps_cpu_from_multiplier(omega, capacitance):
    return (1.0 / (2.0 * omega * capacitance)) ** (1.0 / 3.0)


def haps_power_from_multiplier(psi, bandwidth, noise_psd, min_gain):
    return math.sqrt(bandwidth * noise_psd / (psi * min_gain))


def broadcast_energy(P: Problem, power, min_gain) -> float:
    rate = P.bandwidth * math.log1p(power * min_gain / (P.bandwidth * P.noise_psd)) / LN2
    return power * P.bits / rate


def _bisect_geometric(fn, lo, hi, iters=400):
    """Root of an increasing ``fn`` on ``[lo, hi]`` with ``fn(lo) <= 0 <= fn(hi)``; returns (lo, hi)."""
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        if fn(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi <= lo * (1 + 4e-16):
            break
    return lo, hi


def solve_sub4(P: Problem, A: Allocation) -> Sub4Result:
    sel = A.selection
    if not sel.any():
        raise InfeasibleError("HAPS block needs at least one selected client")
    n = A.count
    load = P.haps_density * P.bits * n  # cycles
    h_min = float(P.gains[sel].min())
    zeta = P.haps_capacitance
    E = P.haps_energy_budget

    # frequency with the current broadcast energy held fixed
    spare = E - A.haps_bc_power_w * A.haps_bc_time_s
    if zeta * P.haps_cpu_max**2 * load <= spare:
        f_h, omega = P.haps_cpu_max, 0.0
    else:
        if zeta * P.haps_cpu_min**2 * load > spare:
            raise InfeasibleError("HAPS energy budget cannot cover computing at the minimum frequency")

        def excess(om):  # increasing in omega
            return spare - zeta * haps_cpu_from_multiplier(om, zeta) ** 2 * load

        w_lo = 1.0 / (2.0 * zeta * P.haps_cpu_max**3)
        w_hi = 1.0 / (2.0 * zeta * P.haps_cpu_min**3)
        lo, hi = _bisect_geometric(excess, w_lo, w_hi)
        omega = hi
        f_h = haps_cpu_from_multiplier(omega, zeta)

    # broadcast power with the frequency fixed
    spare_bc = E - zeta * f_h**2 * load
    floor_energy = P.bits * P.noise_psd * LN2 / h_min
    if spare_bc <= floor_energy:
        raise InfeasibleError("HAPS energy budget leaves nothing for the broadcast")
    if broadcast_energy(P, P.haps_power_max, h_min) <= spare_bc:
        p_h, psi = P.haps_power_max, 0.0
    else:
        def over(ps):  # decreasing in psi, positive while over budget
            return broadcast_energy(P, haps_power_from_multiplier(ps, P.bandwidth, P.noise_psd, h_min),
                                    h_min) - spare_bc

        ps_lo = P.bandwidth * P.noise_psd / (P.haps_power_max**2 * h_min)
        ps_hi = ps_lo
        while over(ps_hi) > 0:
            ps_hi *= 4.0
        lo, hi = _bisect_geometric(lambda ps: -over(ps), ps_lo, ps_hi)
        psi = hi
        p_h = haps_power_from_multiplier(psi, P.bandwidth, P.noise_psd, h_min)
    t_bc = P.bits / haps_rate(P, sel, p_h)
    return Sub4Result(f_h, t_bc, p_h, omega, psi)
