"""World model and workload generation.

A Scenario is the immutable physical world: a regular grid of cells, IoT
terminals carrying sensing resources, small base stations (SBS), MEC hosts
with their capacity slice, and the cost model of the leased resources.
Service requests are sampled from class templates with a Zipf-shaped cell
popularity around points of interest.

Everything is deterministic given (params, seed).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .units import GB, GHZ, MB, MBPS

SCENARIO_FORMAT_VERSION = 1


class ConfigurationError(ValueError):
    """Invalid generator parameters."""


class GenerationError(RuntimeError):
    """A randomized draw produced an unusable world (e.g. uncovered terminal)."""


class ScenarioFormatError(ValueError):
    """Malformed or invariant-violating scenario/request file."""


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class Cell:
    id: int
    row: int
    col: int
    center: tuple[float, float]


@dataclass(frozen=True)
class DataTypeSpec:
    id: int
    payload_bits: float
    cycles_per_bit: float


@dataclass(frozen=True)
class SensingResource:
    id: int
    data_type: int
    cell: int
    terminal: int


@dataclass(frozen=True)
class IoTTerminal:
    id: int
    position: tuple[float, float]
    resources: tuple[int, ...]
    associated_sbs: int


@dataclass(frozen=True)
class BaseStation:
    id: int
    position: tuple[float, float]
    coverage_radius: float
    uplink_capacity: float


@dataclass(frozen=True)
class MecHost:
    id: int
    served_sbs: tuple[int, ...]
    cpu_capacity: float
    storage_capacity: float
    fronthaul_capacity: float


@dataclass(frozen=True)
class CostModel:
    """Unit prices of leased resources plus the revenue/cost trade-off weight."""

    c_bw1: float = 1.0 / MBPS
    c_bw2: float = 1.0 / MBPS
    c_cpu: float = 1.0 / GHZ
    c_mem: float = 1.0 / GB
    gamma: float = 1e-3


@dataclass(frozen=True)
class ServiceRequest:
    """One requested IoT service: data type, scope cells, rate, compute, storage."""

    id: int
    data_type: int
    scope: tuple[int, ...]
    frequency: float
    cpu_demand: float
    persistent_storage: float
    class_tag: str


@dataclass(frozen=True)
class Scenario:
    cells: tuple[Cell, ...]
    data_types: tuple[DataTypeSpec, ...]
    resources: tuple[SensingResource, ...]
    terminals: tuple[IoTTerminal, ...]
    base_stations: tuple[BaseStation, ...]
    hosts: tuple[MecHost, ...]
    backhaul_capacity: tuple[tuple[float, ...], ...]
    cost_model: CostModel
    area_side: float
    rng_seed: int

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_resources(self) -> int:
        return len(self.resources)

    @property
    def n_sbs(self) -> int:
        return len(self.base_stations)

    @property
    def n_hosts(self) -> int:
        return len(self.hosts)

    @cached_property
    def host_of_sbs(self) -> tuple[int, ...]:
        out = [-1] * len(self.base_stations)
        for host in self.hosts:
            for h in host.served_sbs:
                out[h] = host.id
        return tuple(out)

    @cached_property
    def sbs_of_resource(self) -> tuple[int, ...]:
        return tuple(
            self.terminals[r.terminal].associated_sbs for r in self.resources
        )

    @cached_property
    def host_of_resource(self) -> tuple[int, ...]:
        return tuple(self.host_of_sbs[h] for h in self.sbs_of_resource)

    @cached_property
    def resources_by_cell_type(self) -> dict[tuple[int, int], tuple[int, ...]]:
        """(cell, data_type) -> ascending resource ids located there."""
        buckets: dict[tuple[int, int], list[int]] = {}
        for r in self.resources:
            buckets.setdefault((r.cell, r.data_type), []).append(r.id)
        return {k: tuple(sorted(v)) for k, v in buckets.items()}

    def eligible_resources(self, request: ServiceRequest) -> tuple[int, ...]:
        """Ascending ids of resources matching the request type inside its scope."""
        out: list[int] = []
        for k in request.scope:
            out.extend(self.resources_by_cell_type.get((k, request.data_type), ()))
        return tuple(sorted(out))

    def payload_of(self, data_type: int) -> float:
        return self.data_types[data_type].payload_bits


# ---------------------------------------------------------------------------
# service class templates (Table-3 style defaults)


@dataclass(frozen=True)
class ServiceTemplate:
    class_tag: str
    data_type: int
    freq_range: tuple[float, float]
    storage_range: tuple[float, float]
    scope_cells: int


# data type 0: high-quality video frame, data type 1: sound recording
DEFAULT_DATA_TYPES = (
    DataTypeSpec(id=0, payload_bits=2 * MB, cycles_per_bit=40.0),
    DataTypeSpec(id=1, payload_bits=1 * MB, cycles_per_bit=30.0),
)

VR_TEMPLATE = ServiceTemplate(
    class_tag="VR",
    data_type=0,
    freq_range=(0.125, 1.0),
    storage_range=(1 * GB, 4 * GB),
    scope_cells=10,
)
AC_TEMPLATE = ServiceTemplate(
    class_tag="AC",
    data_type=1,
    freq_range=(0.125, 1.0),
    storage_range=(1 * GB, 2 * GB),
    scope_cells=10,
)
DEFAULT_TEMPLATES = (VR_TEMPLATE, AC_TEMPLATE)


# ---------------------------------------------------------------------------
# generation


@dataclass(frozen=True)
class GridParams:
    """Parameters of the regular-grid world generator.

    Capacities are per host / per SBS in canonical units.  A fronthaul of
    None gives each host the summed uplink capacity of its SBSs.  A cost
    model of None builds the default unit prices with gamma set so that the
    cost of a fully saturated slice stays below one admitted service.
    """

    area_side: float = 160.0
    cell_side: float = 20.0
    sbs_rows: int = 2
    sbs_cols: int = 2
    coverage_radius: float = 120.0
    n_terminals: int = 120
    resources_per_type: int = 1
    data_types: tuple[DataTypeSpec, ...] = DEFAULT_DATA_TYPES
    cpu_capacity: float = 4 * GHZ
    storage_capacity: float = 20 * GB
    uplink_capacity: float = 60 * MBPS
    fronthaul_capacity: float | None = None
    backhaul_capacity: float = 10 * MBPS
    cost_model: CostModel | None = None


#: named presets: the paper-scale setups and the tractable desk-scale ones
PRESETS: dict[str, GridParams] = {
    "paper-a": GridParams(
        area_side=400.0, cell_side=20.0, sbs_rows=3, sbs_cols=4,
        coverage_radius=120.0, n_terminals=1200,
        cpu_capacity=4 * GHZ, storage_capacity=20 * GB,
        uplink_capacity=60 * MBPS, backhaul_capacity=10 * MBPS,
    ),
    "paper-b": GridParams(
        area_side=400.0, cell_side=20.0, sbs_rows=3, sbs_cols=4,
        coverage_radius=120.0, n_terminals=1200,
        cpu_capacity=2 * GHZ, storage_capacity=15 * GB,
        uplink_capacity=30 * MBPS, backhaul_capacity=5 * MBPS,
    ),
    "desk-a": GridParams(
        cpu_capacity=4 * GHZ, storage_capacity=20 * GB,
        uplink_capacity=60 * MBPS, backhaul_capacity=10 * MBPS,
    ),
    "desk-b": GridParams(
        cpu_capacity=2 * GHZ, storage_capacity=15 * GB,
        uplink_capacity=30 * MBPS, backhaul_capacity=5 * MBPS,
    ),
}
PRESETS["paper"] = PRESETS["paper-a"]
PRESETS["paper-desk"] = PRESETS["desk-a"]


def slice_saturation_cost(
    base_stations: tuple[BaseStation, ...],
    hosts: tuple[MecHost, ...],
    backhaul: tuple[tuple[float, ...], ...],
    cost: CostModel,
) -> float:
    """Leased-resource cost if every capacity of the slice were fully used."""
    total = sum(cost.c_bw1 * bs.uplink_capacity for bs in base_stations)
    for host in hosts:
        wired = host.fronthaul_capacity + sum(
            backhaul[host.id][n] for n in range(len(hosts)) if n != host.id
        )
        total += (
            cost.c_cpu * host.cpu_capacity
            + cost.c_mem * host.storage_capacity
            + cost.c_bw2 * wired
        )
    return total


def default_gamma(
    base_stations: tuple[BaseStation, ...],
    hosts: tuple[MecHost, ...],
    backhaul: tuple[tuple[float, ...], ...],
    cost: CostModel,
) -> float:
    """Weight making one extra admitted service always dominate resource cost."""
    return 0.9 / slice_saturation_cost(base_stations, hosts, backhaul, cost)


def associate_terminals(
    positions: np.ndarray, base_stations: tuple[BaseStation, ...]
) -> list[int]:
    """Map each terminal position to its Euclidean-nearest SBS (ties: lowest id).

    Raises GenerationError if a terminal falls outside every coverage radius.
    """
    psi: list[int] = []
    for idx in range(len(positions)):
        x, y = positions[idx]
        best, best_d2 = -1, math.inf
        for bs in base_stations:
            d2 = (x - bs.position[0]) ** 2 + (y - bs.position[1]) ** 2
            if d2 < best_d2:
                best, best_d2 = bs.id, d2
        bs = base_stations[best]
        if best_d2 > bs.coverage_radius**2:
            raise GenerationError(
                f"terminal at ({x:.1f}, {y:.1f}) outside coverage of every SBS"
            )
        psi.append(best)
    return psi


def cell_index(x: float, y: float, cell_side: float, n_cols: int, n_rows: int) -> int:
    col = min(int(x / cell_side), n_cols - 1)
    row = min(int(y / cell_side), n_rows - 1)
    return row * n_cols + col


def generate_grid_scenario(params: GridParams, seed: int) -> Scenario:
    """Build a randomized scenario on a regular grid, deterministic per seed."""
    p = params
    if p.area_side <= 0 or p.cell_side <= 0:
        raise ConfigurationError("area_side and cell_side must be positive")
    n_side = p.area_side / p.cell_side
    if abs(n_side - round(n_side)) > 1e-9:
        raise ConfigurationError("area_side must be an integer multiple of cell_side")
    n_side = int(round(n_side))
    if p.sbs_rows <= 0 or p.sbs_cols <= 0:
        raise ConfigurationError("SBS grid dimensions must be positive")
    if p.coverage_radius <= 0:
        raise ConfigurationError("coverage_radius must be positive")
    if p.n_terminals < 0 or p.resources_per_type < 0:
        raise ConfigurationError("terminal/resource counts must be non-negative")
    for cap in (p.cpu_capacity, p.storage_capacity, p.uplink_capacity, p.backhaul_capacity):
        if cap <= 0:
            raise ConfigurationError("slice capacities must be positive")

    cells = tuple(
        Cell(
            id=r * n_side + c,
            row=r,
            col=c,
            center=((c + 0.5) * p.cell_side, (r + 0.5) * p.cell_side),
        )
        for r in range(n_side)
        for c in range(n_side)
    )

    dx = p.area_side / p.sbs_cols
    dy = p.area_side / p.sbs_rows
    base_stations = tuple(
        BaseStation(
            id=r * p.sbs_cols + c,
            position=((c + 0.5) * dx, (r + 0.5) * dy),
            coverage_radius=p.coverage_radius,
            uplink_capacity=p.uplink_capacity,
        )
        for r in range(p.sbs_rows)
        for c in range(p.sbs_cols)
    )
    # the worst-covered point of the area is a corner of the SBS grid tiling
    worst = math.hypot(dx / 2, dy / 2)
    if worst > p.coverage_radius:
        raise ConfigurationError(
            f"SBS grid does not cover the area: corner distance {worst:.1f} m "
            f"exceeds coverage radius {p.coverage_radius:.1f} m"
        )

    fronthaul = (
        p.fronthaul_capacity
        if p.fronthaul_capacity is not None
        else p.uplink_capacity  # one SBS per host below
    )
    hosts = tuple(
        MecHost(
            id=bs.id,
            served_sbs=(bs.id,),
            cpu_capacity=p.cpu_capacity,
            storage_capacity=p.storage_capacity,
            fronthaul_capacity=fronthaul,
        )
        for bs in base_stations
    )
    n_hosts = len(hosts)
    backhaul = tuple(
        tuple(0.0 if m1 == m2 else p.backhaul_capacity for m2 in range(n_hosts))
        for m1 in range(n_hosts)
    )

    rng = np.random.default_rng(seed)
    positions = rng.uniform(0.0, p.area_side, size=(p.n_terminals, 2))
    psi = associate_terminals(positions, base_stations)

    terminals: list[IoTTerminal] = []
    resources: list[SensingResource] = []
    for t in range(p.n_terminals):
        x, y = positions[t]
        k = cell_index(x, y, p.cell_side, n_side, n_side)
        owned: list[int] = []
        for dt in p.data_types:
            for _ in range(p.resources_per_type):
                rid = len(resources)
                resources.append(
                    SensingResource(id=rid, data_type=dt.id, cell=k, terminal=t)
                )
                owned.append(rid)
        terminals.append(
            IoTTerminal(
                id=t,
                position=(float(x), float(y)),
                resources=tuple(owned),
                associated_sbs=psi[t],
            )
        )

    cost = p.cost_model
    if cost is None:
        cost = CostModel()
        cost = replace(
            cost, gamma=default_gamma(base_stations, hosts, backhaul, cost)
        )

    scenario = Scenario(
        cells=cells,
        data_types=tuple(p.data_types),
        resources=tuple(resources),
        terminals=tuple(terminals),
        base_stations=base_stations,
        hosts=hosts,
        backhaul_capacity=backhaul,
        cost_model=cost,
        area_side=p.area_side,
        rng_seed=seed,
    )
    validate_scenario(scenario)
    return scenario


def default_pois(scenario: Scenario) -> tuple[int, int]:
    """The cells nearest to (1/4, 1/4) and (3/4, 3/4) of the area."""
    out = []
    for fx, fy in ((0.25, 0.25), (0.75, 0.75)):
        px, py = fx * scenario.area_side, fy * scenario.area_side
        best = min(
            scenario.cells,
            key=lambda c: ((c.center[0] - px) ** 2 + (c.center[1] - py) ** 2, c.id),
        )
        out.append(best.id)
    return tuple(out)


def zipf_cell_popularity(
    cells: tuple[Cell, ...], pois: tuple[int, ...] | list[int], alpha: float
) -> np.ndarray:
    """Zipf-over-distance cell popularity, superimposed over PoIs and renormalized.

    For each PoI, cells are ranked by distance to the PoI cell (ties broken by
    lowest cell id) and get probability proportional to rank^-alpha; the
    per-PoI distributions are summed and normalized to 1.  alpha = 0 is the
    uniform distribution.
    """
    if len(pois) == 0:
        raise ConfigurationError("at least one PoI is required")
    if alpha < 0:
        raise ConfigurationError("alpha must be >= 0")
    total = np.zeros(len(cells))
    for poi in pois:
        px, py = cells[poi].center
        order = sorted(
            cells,
            key=lambda c: ((c.center[0] - px) ** 2 + (c.center[1] - py) ** 2, c.id),
        )
        weights = np.zeros(len(cells))
        for rank, cell in enumerate(order, start=1):
            weights[cell.id] = rank ** (-alpha)
        total += weights / weights.sum()
    return total / total.sum()


def sample_service_requests(
    catalog: tuple[ServiceTemplate, ...] | list[ServiceTemplate],
    count: int,
    cell_popularity: np.ndarray,
    seed: int,
    data_types: tuple[DataTypeSpec, ...] = DEFAULT_DATA_TYPES,
) -> list[ServiceRequest]:
    """Draw `count` requests cycling through the catalog (equal class mix).

    Scope cells are drawn without replacement from the popularity vector;
    the compute demand is derived as rate * payload * cycles/bit * scope size.
    """
    if not catalog:
        raise ConfigurationError("catalog must not be empty")
    n_cells = len(cell_popularity)
    rng = np.random.default_rng(seed)
    requests: list[ServiceRequest] = []
    for j in range(count):
        tpl = catalog[j % len(catalog)]
        if tpl.scope_cells > n_cells:
            raise ConfigurationError(
                f"scope of {tpl.scope_cells} cells exceeds the {n_cells}-cell grid"
            )
        scope = rng.choice(
            n_cells, size=tpl.scope_cells, replace=False, p=cell_popularity
        )
        lam = float(rng.uniform(*tpl.freq_range))
        storage = float(rng.uniform(*tpl.storage_range))
        dt = data_types[tpl.data_type]
        demand = lam * dt.payload_bits * dt.cycles_per_bit * tpl.scope_cells
        requests.append(
            ServiceRequest(
                id=j,
                data_type=tpl.data_type,
                scope=tuple(sorted(int(k) for k in scope)),
                frequency=lam,
                cpu_demand=demand,
                persistent_storage=storage,
                class_tag=tpl.class_tag,
            )
        )
    return requests


# ---------------------------------------------------------------------------
# validation and (de)serialization


def validate_scenario(s: Scenario) -> None:
    """Check every structural invariant; raise ScenarioFormatError naming the field."""

    def err(msg: str) -> ScenarioFormatError:
        return ScenarioFormatError(msg)

    for idx, c in enumerate(s.cells):
        if c.id != idx:
            raise err(f"cells: ids must be dense ascending, got {c.id} at {idx}")
        if not (0 <= c.center[0] <= s.area_side and 0 <= c.center[1] <= s.area_side):
            raise err(f"cells[{idx}].center outside the reference area")
    for idx, d in enumerate(s.data_types):
        if d.id != idx:
            raise err(f"data_types: ids must be dense ascending, got {d.id}")
        if d.payload_bits <= 0:
            raise err(f"data_types[{idx}].payload_bits must be > 0")
        if d.cycles_per_bit < 0:
            raise err(f"data_types[{idx}].cycles_per_bit must be >= 0")
    for idx, r in enumerate(s.resources):
        if r.id != idx:
            raise err(f"resources: ids must be dense ascending, got {r.id}")
        if not 0 <= r.data_type < len(s.data_types):
            raise err(f"resources[{idx}].data_type out of range")
        if not 0 <= r.cell < len(s.cells):
            raise err(f"resources[{idx}].cell out of range")
        if not 0 <= r.terminal < len(s.terminals):
            raise err(f"resources[{idx}].terminal out of range")
        if r.id not in s.terminals[r.terminal].resources:
            raise err(f"resources[{idx}] not listed by its terminal {r.terminal}")
    for idx, t in enumerate(s.terminals):
        if t.id != idx:
            raise err(f"terminals: ids must be dense ascending, got {t.id}")
        if not 0 <= t.associated_sbs < len(s.base_stations):
            raise err(f"terminals[{idx}].associated_sbs out of range")
        bs = s.base_stations[t.associated_sbs]
        d = math.hypot(t.position[0] - bs.position[0], t.position[1] - bs.position[1])
        if d > bs.coverage_radius + 1e-9:
            raise err(f"terminals[{idx}] outside coverage of its associated SBS")
        for rid in t.resources:
            if not 0 <= rid < len(s.resources):
                raise err(f"terminals[{idx}].resources references unknown id {rid}")
            if s.resources[rid].terminal != idx:
                raise err(f"terminals[{idx}] lists resource {rid} owned by another")
    for idx, bs in enumerate(s.base_stations):
        if bs.id != idx:
            raise err(f"base_stations: ids must be dense ascending, got {bs.id}")
        if bs.uplink_capacity <= 0:
            raise err(f"base_stations[{idx}].uplink_capacity must be > 0")
        if bs.coverage_radius <= 0:
            raise err(f"base_stations[{idx}].coverage_radius must be > 0")
    covered: set[int] = set()
    for idx, h in enumerate(s.hosts):
        if h.id != idx:
            raise err(f"hosts: ids must be dense ascending, got {h.id}")
        if h.cpu_capacity <= 0:
            raise err(f"hosts[{idx}].cpu_capacity must be > 0")
        if h.storage_capacity <= 0:
            raise err(f"hosts[{idx}].storage_capacity must be > 0")
        if h.fronthaul_capacity <= 0:
            raise err(f"hosts[{idx}].fronthaul_capacity must be > 0")
        for sb in h.served_sbs:
            if sb in covered:
                raise err(f"hosts: SBS {sb} served by more than one host")
            covered.add(sb)
    if covered != set(range(len(s.base_stations))):
        raise err("hosts: served_sbs sets do not cover every SBS")
    n = len(s.hosts)
    if len(s.backhaul_capacity) != n or any(len(row) != n for row in s.backhaul_capacity):
        raise err("backhaul_capacity: matrix must be hosts x hosts")
    for m1 in range(n):
        for m2 in range(n):
            v = s.backhaul_capacity[m1][m2]
            if m1 == m2:
                if v != 0.0:
                    raise err(f"backhaul_capacity[{m1}][{m2}]: diagonal must be 0")
            elif v <= 0:
                raise err(
                    f"backhaul_capacity[{m1}][{m2}]: missing or non-positive pair"
                )
    cm = s.cost_model
    for name in ("c_bw1", "c_bw2", "c_cpu", "c_mem"):
        if getattr(cm, name) < 0:
            raise err(f"cost_model.{name} must be >= 0")
    if cm.gamma <= 0:
        raise err("cost_model.gamma must be > 0")


def validate_requests(s: Scenario, requests: list[ServiceRequest]) -> None:
    for idx, r in enumerate(requests):
        if not r.scope:
            raise ScenarioFormatError(f"requests[{idx}].scope must be non-empty")
        if any(not 0 <= k < len(s.cells) for k in r.scope):
            raise ScenarioFormatError(f"requests[{idx}].scope references unknown cell")
        if not 0 <= r.data_type < len(s.data_types):
            raise ScenarioFormatError(f"requests[{idx}].data_type out of range")
        if r.frequency <= 0:
            raise ScenarioFormatError(f"requests[{idx}].frequency must be > 0")
        if r.cpu_demand < 0 or r.persistent_storage < 0:
            raise ScenarioFormatError(f"requests[{idx}]: demands must be >= 0")


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "cells": [
            {"id": c.id, "row": c.row, "col": c.col, "center": list(c.center)}
            for c in s.cells
        ],
        "data_types": [
            {"id": d.id, "payload_bits": d.payload_bits, "cycles_per_bit": d.cycles_per_bit}
            for d in s.data_types
        ],
        "resources": [
            {"id": r.id, "data_type": r.data_type, "cell": r.cell, "terminal": r.terminal}
            for r in s.resources
        ],
        "terminals": [
            {
                "id": t.id,
                "position": list(t.position),
                "resources": list(t.resources),
                "associated_sbs": t.associated_sbs,
            }
            for t in s.terminals
        ],
        "base_stations": [
            {
                "id": b.id,
                "position": list(b.position),
                "coverage_radius": b.coverage_radius,
                "uplink_capacity": b.uplink_capacity,
            }
            for b in s.base_stations
        ],
        "hosts": [
            {
                "id": h.id,
                "served_sbs": list(h.served_sbs),
                "cpu_capacity": h.cpu_capacity,
                "storage_capacity": h.storage_capacity,
                "fronthaul_capacity": h.fronthaul_capacity,
            }
            for h in s.hosts
        ],
        "backhaul_capacity": [list(row) for row in s.backhaul_capacity],
        "cost_model": {
            "c_bw1": s.cost_model.c_bw1,
            "c_bw2": s.cost_model.c_bw2,
            "c_cpu": s.cost_model.c_cpu,
            "c_mem": s.cost_model.c_mem,
            "gamma": s.cost_model.gamma,
        },
        "area_side": s.area_side,
        "rng_seed": s.rng_seed,
    }


def requests_to_dicts(requests: list[ServiceRequest]) -> list[dict]:
    return [
        {
            "id": r.id,
            "data_type": r.data_type,
            "scope": list(r.scope),
            "frequency": r.frequency,
            "cpu_demand": r.cpu_demand,
            "persistent_storage": r.persistent_storage,
            "class_tag": r.class_tag,
        }
        for r in requests
    ]


def _take(record: dict, field_name: str, context: str):
    try:
        return record[field_name]
    except (KeyError, TypeError):
        raise ScenarioFormatError(f"{context}: missing field '{field_name}'") from None


def scenario_from_dict(d: dict) -> Scenario:
    try:
        s = Scenario(
            cells=tuple(
                Cell(c["id"], c["row"], c["col"], tuple(c["center"]))
                for c in _take(d, "cells", "scenario")
            ),
            data_types=tuple(
                DataTypeSpec(x["id"], x["payload_bits"], x["cycles_per_bit"])
                for x in _take(d, "data_types", "scenario")
            ),
            resources=tuple(
                SensingResource(x["id"], x["data_type"], x["cell"], x["terminal"])
                for x in _take(d, "resources", "scenario")
            ),
            terminals=tuple(
                IoTTerminal(
                    x["id"], tuple(x["position"]), tuple(x["resources"]), x["associated_sbs"]
                )
                for x in _take(d, "terminals", "scenario")
            ),
            base_stations=tuple(
                BaseStation(
                    x["id"], tuple(x["position"]), x["coverage_radius"], x["uplink_capacity"]
                )
                for x in _take(d, "base_stations", "scenario")
            ),
            hosts=tuple(
                MecHost(
                    x["id"],
                    tuple(x["served_sbs"]),
                    x["cpu_capacity"],
                    x["storage_capacity"],
                    x["fronthaul_capacity"],
                )
                for x in _take(d, "hosts", "scenario")
            ),
            backhaul_capacity=tuple(
                tuple(row) for row in _take(d, "backhaul_capacity", "scenario")
            ),
            cost_model=CostModel(
                c_bw1=_take(d["cost_model"], "c_bw1", "cost_model"),
                c_bw2=_take(d["cost_model"], "c_bw2", "cost_model"),
                c_cpu=_take(d["cost_model"], "c_cpu", "cost_model"),
                c_mem=_take(d["cost_model"], "c_mem", "cost_model"),
                gamma=_take(d["cost_model"], "gamma", "cost_model"),
            ),
            area_side=_take(d, "area_side", "scenario"),
            rng_seed=_take(d, "rng_seed", "scenario"),
        )
    except KeyError as e:
        raise ScenarioFormatError(f"scenario: missing field {e.args[0]!r}") from None
    except (TypeError, IndexError) as e:
        raise ScenarioFormatError(f"scenario: malformed record ({e})") from None
    validate_scenario(s)
    return s


def requests_from_dicts(s: Scenario, records: list[dict]) -> list[ServiceRequest]:
    try:
        requests = [
            ServiceRequest(
                id=x["id"],
                data_type=x["data_type"],
                scope=tuple(x["scope"]),
                frequency=x["frequency"],
                cpu_demand=x["cpu_demand"],
                persistent_storage=x["persistent_storage"],
                class_tag=x["class_tag"],
            )
            for x in records
        ]
    except KeyError as e:
        raise ScenarioFormatError(f"requests: missing field {e.args[0]!r}") from None
    except TypeError as e:
        raise ScenarioFormatError(f"requests: malformed record ({e})") from None
    validate_requests(s, requests)
    return requests


def write_scenario(
    path, scenario: Scenario, requests: list[ServiceRequest] | tuple = ()
) -> None:
    doc = {
        "version": SCENARIO_FORMAT_VERSION,
        "scenario": scenario_to_dict(scenario),
        "requests": requests_to_dicts(list(requests)),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_scenario(path) -> tuple[Scenario, list[ServiceRequest]]:
    """Read a scenario(+requests) file; round-trip of write_scenario is identity."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ScenarioFormatError(f"not valid JSON: {e}") from None
    version = _take(doc, "version", "file")
    if version != SCENARIO_FORMAT_VERSION:
        raise ScenarioFormatError(f"unknown format version {version!r}")
    scenario = scenario_from_dict(_take(doc, "scenario", "file"))
    requests = requests_from_dicts(scenario, doc.get("requests", []))
    return scenario, requests
