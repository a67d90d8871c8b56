"""Experiment records, CSV/JSON output and per-system summaries."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class ExperimentRecord:
    scenario_id: str
    system: str
    seed: int
    round: int  # rounds completed, starting at 1
    selected: int
    eta: float
    uplink_s: float
    downlink_s: float
    total_s: float
    cumulative_s: float
    loss: float
    bound: float
    sum_sq_bias: float
    client_energy_j: float
    haps_energy_j: float

    def __post_init__(self):
        for name in ("uplink_s", "downlink_s", "total_s", "cumulative_s", "client_energy_j",
                     "haps_energy_j", "sum_sq_bias"):
            val = getattr(self, name)
            if not (val >= 0 or math.isnan(val)):
                raise ValueError(f"{name} must be >= 0, got {val}")


FIELDS = tuple(f.name for f in dataclasses.fields(ExperimentRecord))
_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentRecord)}


def cumulative(delays) -> np.ndarray:
    return np.cumsum(np.asarray(delays, dtype=float))


def build_records(scenario_id, system, seed, delays, history, bounds, energies=None) -> list:
    """One record per executed round from per-round delays and the learning history.

    ``bounds`` holds the bound before any round followed by one entry per round.
    """
    out = []
    cum = cumulative([d.total_s for d in delays])
    for n, d in enumerate(delays):
        ce, he = (np.nan, np.nan)
        if d.ledger is not None:
            ce = float(np.sum(d.ledger.client_energy_j))
            he = float(d.ledger.haps_energy_j)
        out.append(ExperimentRecord(
            scenario_id=str(scenario_id), system=system, seed=int(seed), round=n + 1,
            selected=int(history.selected_count[n]) if n < len(history) else 0,
            eta=float(history.eta[n]) if n < len(history) and history.eta[n] is not None else np.nan,
            uplink_s=float(d.uplink_s), downlink_s=float(d.downlink_s), total_s=float(d.total_s),
            cumulative_s=float(cum[n]),
            loss=float(history.global_loss[n]) if n < len(history) else np.nan,
            bound=float(bounds[n + 1]) if n + 1 < len(bounds) else np.nan,
            sum_sq_bias=float(history.sum_sq_bias[n]) if n < len(history) else np.nan,
            client_energy_j=ce, haps_energy_j=he))
    return out


def _fmt(value):
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def write_csv(records, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIELDS)
        for r in records:
            w.writerow([_fmt(getattr(r, f)) for f in FIELDS])


def read_csv(path) -> list:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        vals = {}
        for name in FIELDS:
            kind = _TYPES[name]
            raw = row[name]
            vals[name] = int(raw) if kind in ("int", int) else float(raw) if kind in ("float", float) else raw
        out.append(ExperimentRecord(**vals))
    return out


@dataclass(frozen=True)
class SystemSummary:
    system: str
    runs: int
    final_loss_mean: float
    final_loss_std: float
    rounds_to_target: float | None  # mean over runs that reached the target
    reached: int
    delay_to_target_s: float | None
    total_delay_mean_s: float
    total_delay_std_s: float
    per_round_delay_mean_s: float


def _sort_key(r: ExperimentRecord):
    return (r.system, r.scenario_id, r.seed, r.round)


def summarize(records, epsilon_target: float | None = None) -> list:
    """Per-system summary, independent of record order. Runs are keyed by (scenario, seed)."""
    records = sorted(records, key=_sort_key)
    if not records:
        raise ValueError("nothing to summarise")
    runs = {}
    for r in records:
        runs.setdefault((r.system, r.scenario_id, r.seed), []).append(r)
    by_system = {}
    for (system, _, _), rs in runs.items():
        last = rs[-1]
        hit = None
        if epsilon_target is not None:
            hit = next((r for r in rs if r.bound <= epsilon_target), None)
        by_system.setdefault(system, []).append((last, hit, rs))
    out = []
    for system in sorted(by_system):
        items = by_system[system]
        losses = np.array([last.loss for last, _, _ in items])
        totals = np.array([last.cumulative_s for last, _, _ in items])
        per_round = np.array([np.mean([r.total_s for r in rs]) for _, _, rs in items])
        hits = [h for _, h, _ in items if h is not None]
        out.append(SystemSummary(
            system=system, runs=len(items),
            final_loss_mean=float(losses.mean()), final_loss_std=float(losses.std()),
            rounds_to_target=float(np.mean([h.round for h in hits])) if hits else None,
            reached=len(hits),
            delay_to_target_s=float(np.mean([h.cumulative_s for h in hits])) if hits else None,
            total_delay_mean_s=float(totals.mean()), total_delay_std_s=float(totals.std()),
            per_round_delay_mean_s=float(per_round.mean())))
    return out


def write_summary_json(summaries, path, extra: dict | None = None) -> None:
    doc = {"systems": [dataclasses.asdict(s) for s in summaries]}
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")
