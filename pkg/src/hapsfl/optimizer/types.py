"""Decision vector, problem data and solver bookkeeping for the delay problem."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..channel import ChannelState
from ..compute import ComputeLedger
from ..scenario import Scenario


@dataclass(frozen=True)
class Problem:
    """Everything one per-round solve needs, flattened into arrays."""

    gains: np.ndarray
    cycles: np.ndarray
    samples: np.ndarray
    capacitance: np.ndarray
    cpu_min: np.ndarray
    cpu_max: np.ndarray
    energy_budget: np.ndarray
    power_max: np.ndarray
    v: float
    bits: float
    bandwidth: float
    noise_psd: float
    haps_density: float
    haps_capacitance: float
    haps_cpu_min: float
    haps_cpu_max: float
    haps_energy_budget: float
    haps_power_max: float

    @classmethod
    def build(cls, scenario: Scenario, channel: ChannelState, v: float, *,
              energy_budget=None) -> "Problem":
        p = scenario.params
        K = scenario.size
        budget = p.client_energy_budget_j if energy_budget is None else energy_budget
        return cls(
            gains=np.asarray(channel.gains, dtype=float),
            cycles=scenario.cycles_per_sample,
            samples=scenario.sample_counts,
            capacitance=scenario.capacitances,
            cpu_min=scenario.cpu_min_hz,
            cpu_max=scenario.cpu_max_hz,
            energy_budget=np.broadcast_to(np.asarray(budget, dtype=float), (K,)).copy(),
            power_max=np.full(K, p.client_max_power_w),
            v=float(v),
            bits=p.update_size_bits,
            bandwidth=p.total_bandwidth_hz,
            noise_psd=p.noise_psd_w_per_hz,
            haps_density=p.haps_compute_density_cycles_per_bit,
            haps_capacitance=p.haps_capacitance,
            haps_cpu_min=p.haps_cpu_hz_bounds[0],
            haps_cpu_max=p.haps_cpu_hz_bounds[1],
            haps_energy_budget=p.haps_energy_budget_j,
            haps_power_max=p.haps_max_bc_power_w,
        )

    @property
    def size(self) -> int:
        return self.gains.size

    @property
    def work(self) -> np.ndarray:
        """``v C_k J_k``: cycles per unit of ``log2(1/eta)``."""
        return self.v * self.cycles * self.samples

    def with_budgets(self, client=None, haps=None) -> "Problem":
        changes = {}
        if client is not None:
            changes["energy_budget"] = np.broadcast_to(np.asarray(client, dtype=float),
                                                       (self.size,)).copy()
        if haps is not None:
            changes["haps_energy_budget"] = float(haps)
        return replace(self, **changes)


@dataclass
class Allocation:
    selection: np.ndarray
    upload_power_w: np.ndarray
    bandwidth_hz: np.ndarray
    cpu_hz: np.ndarray
    upload_time_s: np.ndarray
    local_accuracy: float
    haps_bc_power_w: float
    haps_bc_time_s: float
    haps_cpu_hz: float

    def __post_init__(self):
        self.selection = np.asarray(self.selection, dtype=bool)
        for name in ("upload_power_w", "bandwidth_hz", "cpu_hz", "upload_time_s"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))

    @property
    def selected(self) -> np.ndarray:
        return np.flatnonzero(self.selection)

    @property
    def count(self) -> int:
        return int(self.selection.sum())

    def copy(self) -> "Allocation":
        return Allocation(self.selection.copy(), self.upload_power_w.copy(),
                          self.bandwidth_hz.copy(), self.cpu_hz.copy(),
                          self.upload_time_s.copy(), self.local_accuracy,
                          self.haps_bc_power_w, self.haps_bc_time_s, self.haps_cpu_hz)

    def to_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            val = getattr(self, name)
            out[name] = val.tolist() if isinstance(val, np.ndarray) else val
        return out


@dataclass(frozen=True)
class DelayBreakdown:
    uplink_s: float
    downlink_s: float
    total_s: float
    argmax_client: int  # -1 when nobody is selected
    haps_compute_s: float = 0.0
    haps_bc_s: float = 0.0
    ledger: ComputeLedger | None = None

    @property
    def client_energy_j(self):
        return None if self.ledger is None else self.ledger.client_energy_j

    @property
    def haps_energy_j(self):
        return None if self.ledger is None else self.ledger.haps_energy_j


@dataclass(frozen=True)
class SolverOptions:
    eta_cap: float = 0.95
    # participation floor: min_selected if given, else ceil(min_fraction * K)
    min_selected: int | None = None
    min_fraction: float = 0.2
    tolerance: float = 1e-6
    l_max: int = 50
    round_threshold: float = 0.5
    lp_tol: float = 1e-9

    def __post_init__(self):
        if not 0 < self.eta_cap <= 1:
            raise ValueError(f"eta_cap must lie in (0, 1], got {self.eta_cap}")
        if self.min_selected is not None and self.min_selected < 1:
            raise ValueError("min_selected must be >= 1")
        if not 0 <= self.min_fraction <= 1:
            raise ValueError("min_fraction must lie in [0, 1]")
        if self.tolerance <= 0 or self.l_max < 1:
            raise ValueError("tolerance must be > 0 and l_max >= 1")

    def floor(self, population: int) -> int:
        if self.min_selected is not None:
            return min(self.min_selected, population)
        return max(1, min(population, math.ceil(self.min_fraction * population - 1e-9)))


@dataclass
class SolverState:
    options: SolverOptions
    iteration: int = 0
    trace: list = field(default_factory=list)
    multipliers: dict = field(default_factory=dict)
    taylor_point: float = float("nan")
    residuals: dict = field(default_factory=dict)
    block_log: list = field(default_factory=list)
    converged: bool = False
