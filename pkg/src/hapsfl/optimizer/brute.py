"""Exhaustive reference solver for tiny instances.

Enumerates every selection that meets the participation floor and solves
the continuous blocks on dense grids. Every grid point is feasible, so the
returned delay is an upper bound on the true optimum of the same problem.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..channel import uplink_rate
from .types import Problem, SolverOptions


@dataclass
class BruteResult:
    total_s: float
    selection: tuple
    eta: float
    evaluated: int


def _simplex_grid(parts: int, steps: int) -> np.ndarray:
    """Compositions of ``steps`` into ``parts`` positive pieces, as fractions."""
    if parts == 1:
        return np.ones((1, 1))
    rows = [c for c in itertools.product(range(1, steps), repeat=parts - 1) if sum(c) < steps]
    rows = np.array([list(c) + [steps - sum(c)] for c in rows], dtype=float)
    return rows / steps


def _client_best(P: Problem, k: int, bandwidths, eta, p_grid, f_grid):
    """Least upload-plus-compute time of client k for each bandwidth, under its energy budget."""
    li = np.log2(1.0 / eta)
    p = p_grid[:, None] * P.power_max[k]
    f = P.cpu_min[k] + f_grid[None, :] * (P.cpu_max[k] - P.cpu_min[k])
    t_cp = P.work[k] * li / f
    e_cp = P.capacitance[k] * P.work[k] * li * f * f
    out = np.full(len(bandwidths), np.inf)
    for j, b in enumerate(bandwidths):
        r = uplink_rate(b, p, P.gains[k], P.noise_psd)
        t_up = P.bits / r
        ok = e_cp + p * t_up <= P.energy_budget[k]
        d = np.where(ok, t_up + t_cp, np.inf)
        out[j] = d.min()
    return out


def _haps_best(P: Problem, selected, grid):
    n = len(selected)
    h_min = P.gains[list(selected)].min()
    f = P.haps_cpu_min + grid[:, None] * (P.haps_cpu_max - P.haps_cpu_min)
    p = np.linspace(0.0, 1.0, grid.size + 1)[None, 1:] * P.haps_power_max
    load = P.haps_density * P.bits * n
    t_cp = load / f
    rate = P.bandwidth * np.log1p(p * h_min / (P.bandwidth * P.noise_psd)) / np.log(2.0)
    t_bc = P.bits / rate
    energy = P.haps_capacitance * f**3 * t_cp + p * t_bc
    d = np.where(energy <= P.haps_energy_budget, t_cp + t_bc, np.inf)
    return float(d.min())


def brute_force(P: Problem, options: SolverOptions | None = None, *, eta_points=40,
                split_steps=20, client_points=(60, 200), haps_points=80) -> BruteResult:
    """Best delay over all selections of at least the participation floor.

    As in the solver, the floor shrinks to the largest selection size that
    admits any feasible grid point. ``client_points`` is (power, frequency)
    grid sizes; the frequency grid is geometric so low clock rates are resolved.
    """
    options = SolverOptions() if options is None else options
    K = P.size
    if K > 6:
        raise ValueError("exhaustive search is meant for tiny instances (K <= 6)")
    floor = options.floor(K)
    p_grid = np.linspace(0.0, 1.0, client_points[0] + 1)[1:]
    f_grid = np.geomspace(1.0, 2.0, client_points[1]) - 1.0
    h_grid = np.linspace(0.0, 1.0, haps_points)
    etas = np.linspace(options.eta_cap / eta_points, options.eta_cap, eta_points)
    by_size = {}
    evaluated = 0
    for size in range(1, K + 1):
        best = BruteResult(np.inf, (), float("nan"), 0)
        splits = _simplex_grid(size, split_steps) * P.bandwidth
        for sel in itertools.combinations(range(K), size):
            dl = _haps_best(P, sel, h_grid)
            if not np.isfinite(dl):
                continue
            for eta in etas:
                per_client = np.stack([_client_best(P, k, splits[:, j], eta, p_grid, f_grid)
                                       for j, k in enumerate(sel)], axis=1)
                ul = per_client.max(axis=1).min()
                evaluated += len(splits)
                if ul + dl < best.total_s:
                    best = BruteResult(float(ul + dl), sel, float(eta), 0)
        by_size[size] = best
    feasible = [k for k, r in by_size.items() if np.isfinite(r.total_s)]
    if not feasible:
        return BruteResult(np.inf, (), float("nan"), evaluated)
    floor = min(floor, max(feasible))
    best = min((by_size[k] for k in feasible if k >= floor), key=lambda r: r.total_s)
    best.evaluated = evaluated
    return best
