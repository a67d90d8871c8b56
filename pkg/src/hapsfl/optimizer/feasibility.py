"""Per-constraint feasibility report for an :class:`Allocation`."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..channel import uplink_rate
from .blocks import compute_energy, haps_compute_seconds
from .types import Allocation, Problem

DATA_TOL = 1e-9  # relative to the update size
ENERGY_TOL = 1e-9  # relative to the budget
BOUND_TOL = 1e-9


@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    passed: bool
    residual: float  # worst normalised violation, <= 0 when satisfied
    worst_client: int = -1


@dataclass
class FeasibilityReport:
    checks: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def violated(self) -> list:
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name) -> ConstraintCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def format(self) -> str:
        lines = [f"{'constraint':<16} {'status':<6} {'residual':>12}  client"]
        for c in self.checks:
            who = "" if c.worst_client < 0 else str(c.worst_client)
            lines.append(f"{c.name:<16} {'ok' if c.passed else 'FAIL':<6} {c.residual:>12.3e}  {who}")
        lines += [f"warning: {w}" for w in self.warnings]
        lines.append("feasible" if self.passed else "INFEASIBLE: " + ", ".join(self.violated))
        return "\n".join(lines)


def _worst(values, mask, tol, name):
    vals = np.where(mask, values, -np.inf)
    if not mask.any():
        return ConstraintCheck(name, True, 0.0)
    k = int(np.argmax(vals))
    return ConstraintCheck(name, bool(vals[k] <= tol), float(vals[k]), k)


def check_allocation(P: Problem, A: Allocation) -> FeasibilityReport:
    sel = A.selection
    rep = FeasibilityReport()
    if not sel.any():
        rep.warnings.append("no clients selected")
    s = P.bits
    rate = uplink_rate(A.bandwidth_hz, A.upload_power_w, P.gains, P.noise_psd)
    rep.checks.append(_worst((s - A.upload_time_s * rate) / s, sel, DATA_TOL, "uplink_data"))
    r_h = uplink_rate(P.bandwidth, A.haps_bc_power_w, P.gains, P.noise_psd)
    rep.checks.append(_worst((s - A.haps_bc_time_s * r_h) / s, sel, DATA_TOL, "downlink_data"))
    energy = compute_energy(P, np.maximum(A.cpu_hz, 1e-300), A.local_accuracy) \
        + A.upload_power_w * A.upload_time_s
    with np.errstate(invalid="ignore"):
        rel_e = np.where(np.isfinite(P.energy_budget), (energy - P.energy_budget) / P.energy_budget, -1.0)
    rep.checks.append(_worst(rel_e, sel, ENERGY_TOL, "client_energy"))
    t_hcp = haps_compute_seconds(P, A.count, A.haps_cpu_hz)
    e_h = P.haps_capacitance * A.haps_cpu_hz**3 * t_hcp + A.haps_bc_power_w * A.haps_bc_time_s * bool(A.count)
    rel = (e_h - P.haps_energy_budget) / P.haps_energy_budget
    rep.checks.append(ConstraintCheck("haps_energy", rel <= ENERGY_TOL, float(rel)))
    capacity = A.haps_cpu_hz * t_hcp / (P.haps_density * s)
    rel = (A.count - capacity) / max(capacity, 1.0)
    rep.checks.append(ConstraintCheck("haps_capacity", rel <= BOUND_TOL, float(rel)))
    used = float(np.sum(np.where(sel, A.bandwidth_hz, 0.0)))
    rel = (used - P.bandwidth) / P.bandwidth
    rep.checks.append(ConstraintCheck("bandwidth", rel <= BOUND_TOL, float(rel)))
    rep.checks.append(_worst(-A.bandwidth_hz / P.bandwidth, sel, 0.0, "bandwidth_sign"))
    p_viol = np.maximum(A.upload_power_w - P.power_max, -A.upload_power_w) / P.power_max
    rep.checks.append(_worst(p_viol, np.ones(P.size, dtype=bool), BOUND_TOL, "power_bounds"))
    f_viol = np.maximum(A.cpu_hz - P.cpu_max, P.cpu_min - A.cpu_hz) / P.cpu_max
    rep.checks.append(_worst(f_viol, np.ones(P.size, dtype=bool), BOUND_TOL, "cpu_bounds"))
    eta = A.local_accuracy
    ok = 0.0 < eta <= 1.0
    rep.checks.append(ConstraintCheck("local_accuracy", ok, 0.0 if ok else float(abs(eta))))
    fh_viol = max(A.haps_cpu_hz - P.haps_cpu_max, P.haps_cpu_min - A.haps_cpu_hz) / P.haps_cpu_max
    ph_viol = max(A.haps_bc_power_w - P.haps_power_max, -A.haps_bc_power_w) / P.haps_power_max
    rep.checks.append(ConstraintCheck("haps_bounds", max(fh_viol, ph_viol) <= BOUND_TOL,
                                      float(max(fh_viol, ph_viol))))
    return rep


def feasibility_check(allocation: Allocation, scenario, channel, v: float) -> FeasibilityReport:
    return check_allocation(Problem.build(scenario, channel, v), allocation)
