"""Computation time and energy of the clients and of the HAPS server."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def iteration_constant(lipschitz: float, strong_convexity: float, step: float) -> float:
    """``v = 2 / ((2 - M delta) delta u)``; requires ``delta < 2/M``."""
    if not 0 < step < 2.0 / lipschitz:
        raise ValueError(f"step {step} must lie in (0, 2/M) = (0, {2.0 / lipschitz})")
    return 2.0 / ((2.0 - lipschitz * step) * step * strong_convexity)


def local_iterations(v: float, eta: float) -> int:
    """Smallest integer ``i >= v log2(1/eta)``."""
    if not 0 < eta <= 1:
        raise ValueError(f"local accuracy eta must lie in (0, 1], got {eta}")
    if v <= 0:
        raise ValueError(f"v must be positive, got {v}")
    bound = v * math.log2(1.0 / eta)
    # guard against 4.000000000000001 style ceilings
    i = math.ceil(bound - 1e-12 * max(1.0, bound))
    return max(i, 0)


def client_compute_time(iterations, cycles_per_sample, samples, cpu_hz):
    f = np.asarray(cpu_hz, dtype=float)
    if np.any(f <= 0):
        raise ValueError("cpu frequency must be positive")
    t = np.asarray(iterations, dtype=float) * cycles_per_sample * samples / f
    return float(t) if t.ndim == 0 else t


def client_energy(t_cp, capacitance, cpu_hz, t_up, p_up):
    """Returns ``(E_cp, E_up, E_cp + E_up)`` with computing power ``zeta f^3``."""
    e_cp = np.asarray(t_cp, dtype=float) * capacitance * np.asarray(cpu_hz, dtype=float) ** 3
    e_up = np.asarray(t_up, dtype=float) * np.asarray(p_up, dtype=float)
    total = e_cp + e_up
    if total.ndim == 0:
        return float(e_cp), float(e_up), float(total)
    return e_cp, e_up, total


def haps_compute_time(density, selected_count, update_bits, cpu_hz) -> float:
    if cpu_hz <= 0:
        raise ValueError("HAPS cpu frequency must be positive")
    return density * update_bits * selected_count / cpu_hz


def haps_energy(capacitance, cpu_hz, t_cp, bc_power_w, t_bc) -> float:
    """Compute plus broadcast energy; flight power is a constant and excluded."""
    return capacitance * cpu_hz**3 * t_cp + bc_power_w * t_bc


@dataclass
class ComputeLedger:
    client_compute_s: np.ndarray
    client_compute_energy_j: np.ndarray
    client_upload_energy_j: np.ndarray
    haps_compute_s: float
    haps_energy_j: float

    @property
    def client_energy_j(self) -> np.ndarray:
        return self.client_compute_energy_j + self.client_upload_energy_j
