"""Comparison systems: terrestrial two-hop FL and HAPS FL without selection.

``terr_no_sel``   every client, equal bandwidth within its cell, full power and clock
``terr_ran_sel``  uniform random subset, bandwidth/power block applied per cell
``haps_no_sel``   every client through the HAPS with B/K each and the HAPS block

Terrestrial clients reach the nearest of ``mbs_count`` base stations (each
reusing the full band) and the base station relays the cell's updates to a
cloud server over a wired backhaul. The cloud uses the HAPS compute model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .channel import ChannelState, terrestrial_link_gain, uplink_rate
from .compute import ComputeLedger
from .optimizer.blocks import evaluate_delay, solve_sub3, solve_sub4
from .optimizer.solver import initial_allocation
from .optimizer.types import Allocation, DelayBreakdown, Problem, SolverOptions
from .scenario import STREAM_CHANNEL, Scenario

KINDS = ("terr_no_sel", "terr_ran_sel", "haps_no_sel")
STREAM_TERRESTRIAL = 0x7E2


@dataclass(frozen=True)
class TerrestrialTopology:
    mbs_count: int = 5
    mbs_radius_km: float = 10.0  # nominal cell radius, used for the coverage figure
    placement_radius_km: float = 25.0
    path_loss_exponent: float = 4.0
    hop_count: int = 2
    backhaul_rate_bps: float = 1e9
    mbs_power_w: float = 100.0

    def __post_init__(self):
        if self.hop_count != 2:
            raise ValueError("the terrestrial baseline is two-hop")
        if self.mbs_count < 1 or self.backhaul_rate_bps <= 0:
            raise ValueError("need at least one base station and a positive backhaul rate")

    @cached_property
    def mbs_positions(self) -> np.ndarray:
        angle = 2.0 * np.pi * np.arange(self.mbs_count) / self.mbs_count + np.pi / 2.0
        return self.placement_radius_km * np.column_stack([np.cos(angle), np.sin(angle)])

    def assign(self, scenario: Scenario):
        """Nearest base station and ground distance for every client."""
        diff = scenario.positions_km[:, None, :] - self.mbs_positions[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        cell = np.argmin(dist, axis=1)
        return cell, dist[np.arange(scenario.size), cell]

    def coverage_fraction(self, scenario: Scenario) -> float:
        _, d = self.assign(scenario)
        return float(np.mean(d <= self.mbs_radius_km))


def terrestrial_gains(scenario: Scenario, topology: TerrestrialTopology, round_index=0) -> np.ndarray:
    p = scenario.params
    _, d = topology.assign(scenario)
    rng = scenario.rng(STREAM_CHANNEL, round_index, STREAM_TERRESTRIAL)
    return terrestrial_link_gain(d, topology.path_loss_exponent, rng, k_factor=p.rician_k_linear,
                                 reference_gain=p.reference_gain_linear,
                                 reference_distance_km=p.reference_distance_km)


def random_subset(num_clients: int, count: int, rng: np.random.Generator) -> np.ndarray:
    return np.sort(rng.choice(num_clients, size=count, replace=False))


def _terrestrial_delay(scenario, topology, gains, selected, v, eta, optimise_cells) -> DelayBreakdown:
    p = scenario.params
    K = scenario.size
    cell, _ = topology.assign(scenario)
    sel = np.zeros(K, dtype=bool)
    sel[selected] = True
    cycles = v * scenario.cycles_per_sample * scenario.sample_counts
    t_cp = np.where(sel, cycles * math.log2(1.0 / eta) / scenario.cpu_max_hz, 0.0)
    t_up = np.zeros(K)
    power = np.where(sel, p.client_max_power_w, 0.0)
    relay = np.zeros(K)
    bc_wireless = 0.0
    R = topology.backhaul_rate_bps
    for c in range(topology.mbs_count):
        members = np.flatnonzero(sel & (cell == c))
        if members.size == 0:
            continue
        b = np.full(members.size, p.total_bandwidth_hz / members.size)
        pw = np.full(members.size, p.client_max_power_w)
        if optimise_cells:
            b, pw = _cell_block(scenario, gains, members, b, pw, v, eta)
        power[members] = pw
        t_up[members] = p.update_size_bits / uplink_rate(b, pw, gains[members], p.noise_psd_w_per_hz)
        relay[members] = members.size * p.update_size_bits / R
        rate = uplink_rate(p.total_bandwidth_hz, topology.mbs_power_w, gains[members].min(),
                           p.noise_psd_w_per_hz)
        bc_wireless = max(bc_wireless, p.update_size_bits / rate)
    per_client = np.where(sel, t_cp + t_up + relay, -np.inf)
    k = int(np.argmax(per_client))
    uplink = float(per_client[k])
    f_cloud = p.haps_cpu_hz_bounds[1]
    t_cloud = p.haps_compute_density_cycles_per_bit * p.update_size_bits * sel.sum() / f_cloud
    bc = p.update_size_bits / R + bc_wireless
    e_cp = np.where(sel, scenario.capacitances * scenario.cpu_max_hz**2 * cycles * math.log2(1.0 / eta), 0.0)
    ledger = ComputeLedger(t_cp, e_cp, power * t_up, t_cloud,
                           p.haps_capacitance * f_cloud**3 * t_cloud)
    return DelayBreakdown(uplink, t_cloud + bc, uplink + t_cloud + bc, k, t_cloud, bc, ledger)


def _cell_block(scenario, gains, members, b, pw, v, eta):
    """Power/bandwidth block on one cell with the cell's band and no energy cap."""
    p = scenario.params
    n = members.size
    P = Problem(
        gains=gains[members], cycles=scenario.cycles_per_sample[members],
        samples=scenario.sample_counts[members], capacitance=scenario.capacitances[members],
        cpu_min=scenario.cpu_min_hz[members], cpu_max=scenario.cpu_max_hz[members],
        energy_budget=np.full(n, np.inf), power_max=np.full(n, p.client_max_power_w), v=v,
        bits=p.update_size_bits, bandwidth=p.total_bandwidth_hz, noise_psd=p.noise_psd_w_per_hz,
        haps_density=p.haps_compute_density_cycles_per_bit, haps_capacitance=p.haps_capacitance,
        haps_cpu_min=p.haps_cpu_hz_bounds[0], haps_cpu_max=p.haps_cpu_hz_bounds[1],
        haps_energy_budget=p.haps_energy_budget_j, haps_power_max=p.haps_max_bc_power_w)
    t_up = p.update_size_bits / uplink_rate(b, pw, P.gains, P.noise_psd)
    A = Allocation(np.ones(n, dtype=bool), pw, b, P.cpu_max.copy(), t_up, eta,
                   p.haps_max_bc_power_w, 0.0, P.haps_cpu_max)
    r = solve_sub3(P, A)
    return r.bandwidth_hz, r.power_w


def haps_no_selection(scenario: Scenario, channel: ChannelState, v: float, eta: float):
    """All clients on the HAPS link with B/K each, client budgets not enforced."""
    P = Problem.build(scenario, channel, v).with_budgets(client=np.inf)
    A = initial_allocation(P, SolverOptions(eta_cap=eta))
    A.local_accuracy = eta
    r = solve_sub4(P, A)
    A.haps_cpu_hz, A.haps_bc_power_w, A.haps_bc_time_s = r.cpu_hz, r.bc_power_w, r.bc_time_s
    return A, evaluate_delay(P, A)


def baseline_round(kind: str, scenario: Scenario, channel: ChannelState, v: float, eta: float, *,
                   count: int | None = None, rng: np.random.Generator | None = None,
                   topology: TerrestrialTopology = TerrestrialTopology()):
    """One round of a comparison system; returns ``(selected indices, DelayBreakdown)``."""
    K = scenario.size
    if kind == "haps_no_sel":
        A, delay = haps_no_selection(scenario, channel, v, eta)
        return A.selected, delay
    gains = terrestrial_gains(scenario, topology, channel.round_index)
    if kind == "terr_no_sel":
        selected = np.arange(K)
        return selected, _terrestrial_delay(scenario, topology, gains, selected, v, eta, False)
    if kind == "terr_ran_sel":
        if count is None or rng is None:
            raise ValueError("random selection needs a subset size and an rng")
        selected = random_subset(K, count, rng)
        return selected, _terrestrial_delay(scenario, topology, gains, selected, v, eta, True)
    raise ValueError(f"unknown baseline {kind!r}; expected one of {KINDS}")
