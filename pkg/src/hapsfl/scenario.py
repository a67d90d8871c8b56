"""Network instances: HAPS geometry, client population and system constants.

A :class:`Scenario` is immutable and fully determined by ``(count, params, seed)``.
Scenario files are YAML with units embedded in the key names.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import yaml

# rng stream tags, mixed into the seed sequence so that streams never collide
STREAM_PLACEMENT = 0x5CE
STREAM_CHANNEL = 0xC4A
STREAM_DATA = 0xDA7
STREAM_SELECTION = 0x5E1


def dbm_to_w(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


@dataclass(frozen=True)
class SystemParams:
    total_bandwidth_hz: float = 20e6
    noise_psd_w_per_hz: float = dbm_to_w(-174.0)
    update_size_bits: float = 28.1e3
    haps_altitude_km: float = 25.0
    coverage_radius_km: float = 50.0
    reference_distance_km: float = 1.0
    # 128.1 dB average loss at the 1 km reference distance
    reference_gain_linear: float = 10.0 ** (-12.81)
    displacement_variance_km2: float = 0.01
    rician_k_factor_db: float = 10.0
    client_max_power_w: float = dbm_to_w(10.0)
    haps_max_bc_power_w: float = dbm_to_w(50.0)
    client_energy_budget_j: float = 2.0
    haps_energy_budget_j: float = 2.0e4
    haps_compute_density_cycles_per_bit: float = 3.0e4
    haps_capacitance: float = 1e-27
    haps_cpu_hz_bounds: tuple[float, float] = (1e9, 20e9)

    def __post_init__(self):
        # normalise lists coming from files so that equality is structural
        object.__setattr__(self, "haps_cpu_hz_bounds", tuple(float(v) for v in self.haps_cpu_hz_bounds))
        self.validate()

    def validate(self) -> None:
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name == "haps_cpu_hz_bounds":
                lo, hi = value
                if not (lo > 0 and hi >= lo and math.isfinite(hi)):
                    raise ValueError(f"haps_cpu_hz_bounds: need 0 < min <= max, got {value}")
                continue
            if f.name == "rician_k_factor_db":
                if not math.isfinite(value):
                    raise ValueError(f"rician_k_factor_db: must be finite, got {value}")
                continue
            if f.name == "displacement_variance_km2":
                if not (value >= 0 and math.isfinite(value)):
                    raise ValueError(f"displacement_variance_km2: must be >= 0, got {value}")
                continue
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{f.name}: must be strictly positive, got {value}")

    @property
    def rician_k_linear(self) -> float:
        return 10.0 ** (self.rician_k_factor_db / 10.0)

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ClientProfile:
    x_km: float
    y_km: float
    distance_km: float
    cycles_per_sample: float
    capacitance: float
    cpu_hz_bounds: tuple[float, float]
    sample_count: int

    def __post_init__(self):
        object.__setattr__(self, "cpu_hz_bounds", tuple(float(v) for v in self.cpu_hz_bounds))
        lo, hi = self.cpu_hz_bounds
        if not (0 < lo <= hi):
            raise ValueError(f"cpu_hz_bounds: need 0 < min <= max, got {self.cpu_hz_bounds}")
        if self.sample_count < 1:
            raise ValueError(f"sample_count: must be >= 1, got {self.sample_count}")
        if not self.cycles_per_sample > 0:
            raise ValueError(f"cycles_per_sample: must be > 0, got {self.cycles_per_sample}")
        if not self.capacitance > 0:
            raise ValueError(f"capacitance: must be > 0, got {self.capacitance}")
        if not self.distance_km > 0:
            raise ValueError(f"distance_km: must be > 0, got {self.distance_km}")


@dataclass(frozen=True)
class Scenario:
    params: SystemParams
    clients: tuple[ClientProfile, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "clients", tuple(self.clients))
        if len(self.clients) < 1:
            raise ValueError("a scenario needs at least one client")
        if not 0 <= self.seed < 2**63:
            raise ValueError(f"seed must lie in [0, 2**63), got {self.seed}")

    @property
    def size(self) -> int:
        return len(self.clients)

    # Column views used by the vectorised models. Not part of equality.
    @cached_property
    def distances_km(self) -> np.ndarray:
        return np.array([c.distance_km for c in self.clients])

    @cached_property
    def positions_km(self) -> np.ndarray:
        return np.array([(c.x_km, c.y_km) for c in self.clients])

    @cached_property
    def cycles_per_sample(self) -> np.ndarray:
        return np.array([c.cycles_per_sample for c in self.clients])

    @cached_property
    def capacitances(self) -> np.ndarray:
        return np.array([c.capacitance for c in self.clients])

    @cached_property
    def cpu_min_hz(self) -> np.ndarray:
        return np.array([c.cpu_hz_bounds[0] for c in self.clients])

    @cached_property
    def cpu_max_hz(self) -> np.ndarray:
        return np.array([c.cpu_hz_bounds[1] for c in self.clients])

    @cached_property
    def sample_counts(self) -> np.ndarray:
        return np.array([c.sample_count for c in self.clients], dtype=float)

    def rng(self, *tags: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.seed, *tags]))

    def with_params(self, **changes) -> "Scenario":
        return Scenario(self.params.replace(**changes), self.clients, self.seed)

    def subset(self, count: int) -> "Scenario":
        return Scenario(self.params, self.clients[:count], self.seed)


@dataclass(frozen=True)
class ClientDistribution:
    """How client hardware is drawn. Defaults follow the evaluation setup."""

    cycles_per_sample_range: tuple[float, float] = (1e4, 3e4)
    capacitance: float = 1e-28
    cpu_hz_bounds: tuple[float, float] = (1e8, 2e9)
    samples_per_client: int = 500


def slant_range_km(planar_radius_km, altitude_km):
    return np.hypot(altitude_km, planar_radius_km)


def generate_scenario(
    count: int,
    params: SystemParams | None = None,
    seed: int = 0,
    clients: ClientDistribution = ClientDistribution(),
) -> Scenario:
    """Drop ``count`` clients uniformly (in area) on the coverage disc."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    params = SystemParams() if params is None else params
    params.validate()
    rng = np.random.default_rng(np.random.SeedSequence([seed, STREAM_PLACEMENT]))
    radius = params.coverage_radius_km * np.sqrt(rng.random(count))
    angle = rng.uniform(0.0, 2.0 * np.pi, count)
    lo, hi = clients.cycles_per_sample_range
    cycles = rng.uniform(lo, hi, count)
    x = radius * np.cos(angle)
    y = radius * np.sin(angle)
    dist = slant_range_km(radius, params.haps_altitude_km)
    profiles = tuple(
        ClientProfile(
            x_km=float(x[k]),
            y_km=float(y[k]),
            distance_km=float(dist[k]),
            cycles_per_sample=float(cycles[k]),
            capacitance=clients.capacitance,
            cpu_hz_bounds=clients.cpu_hz_bounds,
            sample_count=clients.samples_per_client,
        )
        for k in range(count)
    )
    return Scenario(params, profiles, seed)


class ScenarioFormatError(ValueError):
    pass


_CLIENT_KEYS = ("x_km", "y_km", "distance_km", "cycles_per_sample", "capacitance",
                "cpu_min_hz", "cpu_max_hz", "sample_count")


def scenario_to_dict(s: Scenario) -> dict:
    params = {}
    for f in dataclasses.fields(s.params):
        value = getattr(s.params, f.name)
        params[f.name] = list(value) if isinstance(value, tuple) else value
    rows = []
    for c in s.clients:
        rows.append({
            "x_km": c.x_km,
            "y_km": c.y_km,
            "distance_km": c.distance_km,
            "cycles_per_sample": c.cycles_per_sample,
            "capacitance": c.capacitance,
            "cpu_min_hz": c.cpu_hz_bounds[0],
            "cpu_max_hz": c.cpu_hz_bounds[1],
            "sample_count": c.sample_count,
        })
    return {"format": "hapsfl-scenario/1", "seed": s.seed, "params": params, "clients": rows}


def scenario_from_dict(doc) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioFormatError("scenario file must be a mapping at top level")
    for key in ("seed", "params", "clients"):
        if key not in doc:
            raise ScenarioFormatError(f"missing required field '{key}'")
    raw = doc["params"]
    if not isinstance(raw, dict):
        raise ScenarioFormatError("'params' must be a mapping")
    kwargs = {}
    for f in dataclasses.fields(SystemParams):
        if f.name not in raw:
            raise ScenarioFormatError(f"missing required field 'params.{f.name}'")
        value = raw[f.name]
        if f.name == "haps_cpu_hz_bounds":
            if not (isinstance(value, list) and len(value) == 2):
                raise ScenarioFormatError("field 'params.haps_cpu_hz_bounds' must be a [min, max] list")
            value = tuple(_number(v, f"params.{f.name}") for v in value)
        else:
            value = _number(value, f"params.{f.name}")
        kwargs[f.name] = value
    unknown = set(raw) - set(kwargs)
    if unknown:
        raise ScenarioFormatError(f"unknown field(s) in params: {sorted(unknown)}")
    try:
        params = SystemParams(**kwargs)
    except ValueError as exc:
        raise ScenarioFormatError(f"invalid params: {exc}") from exc
    rows = doc["clients"]
    if not isinstance(rows, list):
        raise ScenarioFormatError("'clients' must be a list of client rows")
    profiles = []
    for i, row in enumerate(rows):
        if not isinstance(row, dict):
            raise ScenarioFormatError(f"client row {i}: expected a mapping")
        for key in _CLIENT_KEYS:
            if key not in row:
                raise ScenarioFormatError(f"client row {i}: missing required field '{key}'")
        vals = {k: _number(row[k], f"clients[{i}].{k}") for k in _CLIENT_KEYS}
        if not isinstance(row["sample_count"], int):
            raise ScenarioFormatError(f"client row {i}: field 'sample_count' must be an integer")
        try:
            profiles.append(ClientProfile(
                x_km=vals["x_km"], y_km=vals["y_km"], distance_km=vals["distance_km"],
                cycles_per_sample=vals["cycles_per_sample"], capacitance=vals["capacitance"],
                cpu_hz_bounds=(vals["cpu_min_hz"], vals["cpu_max_hz"]),
                sample_count=row["sample_count"],
            ))
        except ValueError as exc:
            raise ScenarioFormatError(f"client row {i}: {exc}") from exc
    seed = doc["seed"]
    if not isinstance(seed, int):
        raise ScenarioFormatError("field 'seed' must be an integer")
    try:
        return Scenario(params, tuple(profiles), seed)
    except ValueError as exc:
        raise ScenarioFormatError(str(exc)) from exc


def _number(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioFormatError(f"field '{name}' must be numeric, got {value!r}")
    return value


class _Dumper(yaml.SafeDumper):
    pass


def _flow_row(dumper, data):
    return dumper.represent_mapping("tag:yaml.org,2002:map", data, flow_style=True)


class _Row(dict):
    pass


_Dumper.add_representer(_Row, _flow_row)


def save_scenario(s: Scenario, path) -> None:
    doc = scenario_to_dict(s)
    doc["clients"] = [_Row(r) for r in doc["clients"]]
    text = yaml.dump(doc, Dumper=_Dumper, sort_keys=False, width=200)
    Path(path).write_text(text)


def load_scenario(path) -> Scenario:
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ScenarioFormatError(f"{path}: malformed scenario file{where}: {exc}") from exc
    try:
        return scenario_from_dict(doc)
    except ScenarioFormatError as exc:
        raise ScenarioFormatError(f"{path}: {exc}") from exc
