"""Optimization model: flows, feasibility, objective and MILP construction.

The decision triple is (x, y, f): which sensing resource feeds which service,
which host runs which service, and each resource's sampling rate.  The MILP
linearizes the host-to-host bandwidth constraint with auxiliary binaries
theta[m, i, j] standing in for x[i, j] * y[m, j].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .scenario import Scenario, ServiceRequest

FEASIBILITY_TOL = 1e-6


@dataclass(frozen=True)
class Allocation:
    """Integral decision triple; x holds (resource, service), y holds (host, service)."""

    x: frozenset[tuple[int, int]]
    y: frozenset[tuple[int, int]]
    f: tuple[float, ...]

    @staticmethod
    def empty(n_resources: int) -> "Allocation":
        return Allocation(frozenset(), frozenset(), (0.0,) * n_resources)

    @cached_property
    def host_by_service(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for m, j in self.y:
            if j in out:
                raise ValueError(f"service {j} placed on more than one host")
            out[j] = m
        return out

    def host_of(self, j: int) -> int | None:
        return self.host_by_service.get(j)

    @cached_property
    def resources_by_service(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {}
        for i, j in self.x:
            out.setdefault(j, []).append(i)
        return {j: tuple(sorted(v)) for j, v in out.items()}


@dataclass
class FlowLedger:
    """Derived loads of an allocation in canonical units."""

    uplink: list[float]          # per SBS, bits/s
    fronthaul: list[float]       # per host, bits/s
    backhaul: list[list[float]]  # ordered host pairs, bits/s, zero diagonal
    used_cpu: list[float]        # per host, cycles/s
    used_storage: list[float]    # per host, bits


@dataclass(frozen=True)
class Violation:
    kind: str          # CPU, STORAGE, SINGLE_HOST, COVERAGE, FREQ_LOWER,
                       # FREQ_UPPER, UPLINK, FRONTHAUL, BACKHAUL
    subject: tuple
    lhs: float
    rhs: float

    def to_dict(self) -> dict:
        return {"kind": self.kind, "subject": list(self.subject),
                "lhs": self.lhs, "rhs": self.rhs}


def storage_footprint(s: Scenario, req: ServiceRequest) -> float:
    """Persistent state plus the cached per-cell payloads of the scope."""
    return req.persistent_storage + s.payload_of(req.data_type) * len(req.scope)


def compute_flows(
    s: Scenario,
    requests: list[ServiceRequest],
    a: Allocation,
    dedup_backhaul: bool = False,
) -> FlowLedger:
    """Evaluate all derived loads of an allocation.

    dedup_backhaul is an exploratory variant that counts a resource's stream
    to a host once at the highest subscribed rate; the baseline model ships
    one stream per (resource, service) pair.
    """
    n_sbs, n_hosts = s.n_sbs, s.n_hosts
    uplink = [0.0] * n_sbs
    for t in s.terminals:
        h = t.associated_sbs
        for i in t.resources:
            uplink[h] += a.f[i] * s.payload_of(s.resources[i].data_type)
    fronthaul = [
        sum(uplink[h] for h in sorted(host.served_sbs)) for host in s.hosts
    ]
    backhaul = [[0.0] * n_hosts for _ in range(n_hosts)]
    if dedup_backhaul:
        per_stream: dict[tuple[int, int], float] = {}
        for req in requests:
            m2 = a.host_of(req.id)
            if m2 is None:
                continue
            for i in a.resources_by_service.get(req.id, ()):
                key = (i, m2)
                per_stream[key] = max(per_stream.get(key, 0.0), req.frequency)
        for (i, m2), rate in sorted(per_stream.items()):
            m1 = s.host_of_resource[i]
            if m1 != m2:
                backhaul[m1][m2] += rate * s.payload_of(s.resources[i].data_type)
    else:
        for req in requests:
            m2 = a.host_of(req.id)
            if m2 is None:
                continue
            for i in a.resources_by_service.get(req.id, ()):
                m1 = s.host_of_resource[i]
                if m1 != m2:
                    backhaul[m1][m2] += req.frequency * s.payload_of(
                        s.resources[i].data_type
                    )
    used_cpu = [0.0] * n_hosts
    used_storage = [0.0] * n_hosts
    for req in requests:
        m = a.host_of(req.id)
        if m is None:
            continue
        used_cpu[m] += req.cpu_demand
        used_storage[m] += storage_footprint(s, req)
    return FlowLedger(uplink, fronthaul, backhaul, used_cpu, used_storage)


def extract_frequencies(
    requests: list[ServiceRequest], x: frozenset[tuple[int, int]], n_resources: int
) -> tuple[float, ...]:
    """Lowest feasible sampling rates: the max subscribed rate per resource."""
    lam = {r.id: r.frequency for r in requests}
    f = [0.0] * n_resources
    for i, j in x:
        f[i] = max(f[i], lam[j])
    return tuple(f)


def check_feasibility(
    s: Scenario,
    requests: list[ServiceRequest],
    a: Allocation,
    tol: float = FEASIBILITY_TOL,
    dedup_backhaul: bool = False,
) -> list[Violation]:
    """Return one Violation per broken constraint; empty list means feasible."""
    if tol < 0:
        raise ValueError("tol must be >= 0")
    out: list[Violation] = []
    ledger = compute_flows(s, requests, a, dedup_backhaul=dedup_backhaul)

    for host in s.hosts:
        if ledger.used_cpu[host.id] > host.cpu_capacity + tol:
            out.append(
                Violation("CPU", (host.id,), ledger.used_cpu[host.id], host.cpu_capacity)
            )
        if ledger.used_storage[host.id] > host.storage_capacity + tol:
            out.append(
                Violation(
                    "STORAGE", (host.id,), ledger.used_storage[host.id], host.storage_capacity
                )
            )

    placements: dict[int, int] = {}
    for m, j in a.y:
        placements[j] = placements.get(j, 0) + 1
    for j, count in sorted(placements.items()):
        if count > 1:
            out.append(Violation("SINGLE_HOST", (j,), float(count), 1.0))

    for req in requests:
        placed = 1.0 if placements.get(req.id, 0) >= 1 else 0.0
        for k in req.scope:
            eligible = s.resources_by_cell_type.get((k, req.data_type), ())
            taken = sum(1.0 for i in eligible if (i, req.id) in a.x)
            if abs(taken - placed) > tol:
                out.append(Violation("COVERAGE", (req.id, k), taken, placed))

    lam = {r.id: r.frequency for r in requests}
    for i, j in sorted(a.x):
        if a.f[i] < lam[j] - tol:
            out.append(Violation("FREQ_LOWER", (i, j), lam[j], a.f[i]))
    rate_sum = [0.0] * s.n_resources
    for i, j in sorted(a.x):
        rate_sum[i] += lam[j]
    for i in range(s.n_resources):
        if a.f[i] > rate_sum[i] + tol:
            out.append(Violation("FREQ_UPPER", (i,), a.f[i], rate_sum[i]))

    for bs in s.base_stations:
        if ledger.uplink[bs.id] > bs.uplink_capacity + tol:
            out.append(
                Violation("UPLINK", (bs.id,), ledger.uplink[bs.id], bs.uplink_capacity)
            )
    for host in s.hosts:
        if ledger.fronthaul[host.id] > host.fronthaul_capacity + tol:
            out.append(
                Violation(
                    "FRONTHAUL",
                    (host.id,),
                    ledger.fronthaul[host.id],
                    host.fronthaul_capacity,
                )
            )
    for m1 in range(s.n_hosts):
        for m2 in range(s.n_hosts):
            if m1 == m2:
                continue
            cap = s.backhaul_capacity[m1][m2]
            if ledger.backhaul[m1][m2] > cap + tol:
                out.append(
                    Violation("BACKHAUL", (m1, m2), ledger.backhaul[m1][m2], cap)
                )
    return out


def objective(
    s: Scenario,
    requests: list[ServiceRequest],
    a: Allocation,
    ledger: FlowLedger,
) -> tuple[float, float, float]:
    """(J_r, J_edge, J): deployed-service count, leased-resource cost, net utility."""
    j_r = float(len(a.y))
    cm = s.cost_model
    j_edge = sum(cm.c_bw1 * ledger.uplink[bs.id] for bs in s.base_stations)
    for host in s.hosts:
        m = host.id
        cross = sum(
            ledger.backhaul[m][n] for n in range(s.n_hosts) if n != m
        )
        j_edge += (
            cm.c_cpu * ledger.used_cpu[m]
            + cm.c_mem * ledger.used_storage[m]
            + cm.c_bw2 * (ledger.fronthaul[m] + cross)
        )
    return j_r, j_edge, j_r - cm.gamma * j_edge


# ---------------------------------------------------------------------------
# MILP


@dataclass(frozen=True)
class LpVariable:
    name: str
    kind: str  # 'B' binary, 'C' continuous
    lb: float
    ub: float


@dataclass(frozen=True)
class LinearConstraint:
    name: str
    coeffs: tuple[tuple[int, float], ...]
    sense: str  # '<=', '>=', '='
    rhs: float


@dataclass(frozen=True)
class MilpModel:
    """Variable/constraint/objective description of the placement problem.

    The objective is a dense maximize vector.  Index maps translate the
    (i, j), (m, j), (m, i, j) and i subscripts into variable ids; theta
    variables exist only for type/scope-eligible (i, j) pairs.
    """

    variables: tuple[LpVariable, ...]
    constraints: tuple[LinearConstraint, ...]
    objective: tuple[float, ...]
    x_index: dict[tuple[int, int], int]
    y_index: dict[tuple[int, int], int]
    theta_index: dict[tuple[int, int, int], int]
    f_index: dict[int, int]

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @cached_property
    def binary_ids(self) -> tuple[int, ...]:
        return tuple(v for v, var in enumerate(self.variables) if var.kind == "B")


def build_milp(s: Scenario, requests: list[ServiceRequest]) -> MilpModel:
    """Assemble the linearized placement/activation/data-management MILP."""
    variables: list[LpVariable] = []
    objective_coef: list[float] = []
    cm = s.cost_model

    def add_var(name: str, kind: str, lb: float, ub: float, obj: float) -> int:
        variables.append(LpVariable(name, kind, lb, ub))
        objective_coef.append(obj)
        return len(variables) - 1

    eligible: dict[int, tuple[int, ...]] = {
        req.id: s.eligible_resources(req) for req in requests
    }
    g = {req.id: storage_footprint(s, req) for req in requests}
    max_rate = max((req.frequency for req in requests), default=0.0)

    y_index: dict[tuple[int, int], int] = {}
    for req in requests:
        for m in range(s.n_hosts):
            y_index[(m, req.id)] = add_var(
                f"y_{m}_{req.id}", "B", 0.0, 1.0,
                1.0 - cm.gamma * (cm.c_cpu * req.cpu_demand + cm.c_mem * g[req.id]),
            )
    x_index: dict[tuple[int, int], int] = {}
    for req in requests:
        for i in eligible[req.id]:
            x_index[(i, req.id)] = add_var(f"x_{i}_{req.id}", "B", 0.0, 1.0, 0.0)
    theta_index: dict[tuple[int, int, int], int] = {}
    for req in requests:
        lam = req.frequency
        for i in eligible[req.id]:
            payload = s.payload_of(s.resources[i].data_type)
            src = s.host_of_resource[i]
            for m in range(s.n_hosts):
                cost = 0.0 if m == src else cm.gamma * cm.c_bw2 * lam * payload
                theta_index[(m, i, req.id)] = add_var(
                    f"th_{m}_{i}_{req.id}", "B", 0.0, 1.0, -cost
                )
    f_index: dict[int, int] = {}
    for r in s.resources:
        payload = s.payload_of(r.data_type)
        # each uploaded bit/s is billed on the wireless uplink and the fronthaul
        f_index[r.id] = add_var(
            f"f_{r.id}", "C", 0.0, max_rate,
            -cm.gamma * payload * (cm.c_bw1 + cm.c_bw2),
        )

    constraints: list[LinearConstraint] = []

    def add_con(name, coeffs, sense, rhs):
        constraints.append(LinearConstraint(name, tuple(coeffs), sense, rhs))

    for host in s.hosts:
        add_con(
            f"cpu_m{host.id}",
            [(y_index[(host.id, req.id)], req.cpu_demand) for req in requests],
            "<=",
            host.cpu_capacity,
        )
    for host in s.hosts:
        add_con(
            f"mem_m{host.id}",
            [(y_index[(host.id, req.id)], g[req.id]) for req in requests],
            "<=",
            host.storage_capacity,
        )
    for req in requests:
        add_con(
            f"place_j{req.id}",
            [(y_index[(m, req.id)], 1.0) for m in range(s.n_hosts)],
            "<=",
            1.0,
        )
    # one activated resource per requested cell, iff the service is placed
    for req in requests:
        for k in req.scope:
            in_cell = s.resources_by_cell_type.get((k, req.data_type), ())
            coeffs = [(x_index[(i, req.id)], 1.0) for i in in_cell]
            coeffs += [(y_index[(m, req.id)], -1.0) for m in range(s.n_hosts)]
            add_con(f"cover_j{req.id}_k{k}", coeffs, "=", 0.0)
    rate_of = {req.id: req.frequency for req in requests}
    for (i, j), xv in x_index.items():
        add_con(f"freqlo_i{i}_j{j}", [(f_index[i], 1.0), (xv, -rate_of[j])], ">=", 0.0)
    for r in s.resources:
        coeffs = [(f_index[r.id], 1.0)]
        for req in requests:
            xv = x_index.get((r.id, req.id))
            if xv is not None:
                coeffs.append((xv, -req.frequency))
        add_con(f"frequp_i{r.id}", coeffs, "<=", 0.0)
    for bs in s.base_stations:
        coeffs = []
        for t in s.terminals:
            if t.associated_sbs != bs.id:
                continue
            for i in t.resources:
                coeffs.append(
                    (f_index[i], s.payload_of(s.resources[i].data_type))
                )
        add_con(f"uplink_h{bs.id}", coeffs, "<=", bs.uplink_capacity)
    for host in s.hosts:
        coeffs = []
        for t in s.terminals:
            if t.associated_sbs not in host.served_sbs:
                continue
            for i in t.resources:
                coeffs.append(
                    (f_index[i], s.payload_of(s.resources[i].data_type))
                )
        add_con(f"fronthaul_m{host.id}", coeffs, "<=", host.fronthaul_capacity)
    for (m, i, j), tv in theta_index.items():
        add_con(f"linkx_m{m}_i{i}_j{j}", [(tv, 1.0), (x_index[(i, j)], -1.0)], "<=", 0.0)
        add_con(f"linky_m{m}_i{i}_j{j}", [(tv, 1.0), (y_index[(m, j)], -1.0)], "<=", 0.0)
        add_con(
            f"linkxy_m{m}_i{i}_j{j}",
            [(x_index[(i, j)], 1.0), (y_index[(m, j)], 1.0), (tv, -1.0)],
            "<=",
            1.0,
        )
    # linearized backhaul: streams from resources under m1 to services on m2
    for m1 in range(s.n_hosts):
        for m2 in range(s.n_hosts):
            if m1 == m2:
                continue
            coeffs = []
            for req in requests:
                for i in eligible[req.id]:
                    if s.host_of_resource[i] != m1:
                        continue
                    payload = s.payload_of(s.resources[i].data_type)
                    coeffs.append(
                        (theta_index[(m2, i, req.id)], req.frequency * payload)
                    )
            add_con(
                f"backhaul_m{m1}_m{m2}", coeffs, "<=", s.backhaul_capacity[m1][m2]
            )

    return MilpModel(
        variables=tuple(variables),
        constraints=tuple(constraints),
        objective=tuple(objective_coef),
        x_index=x_index,
        y_index=y_index,
        theta_index=theta_index,
        f_index=f_index,
    )


def allocation_from_values(
    m: MilpModel, values: np.ndarray, n_resources: int
) -> Allocation:
    """Snap a (near-)integral solution vector into an Allocation."""
    x = frozenset(pair for pair, v in m.x_index.items() if values[v] > 0.5)
    y = frozenset(pair for pair, v in m.y_index.items() if values[v] > 0.5)
    f = [0.0] * n_resources
    for i, v in m.f_index.items():
        f[i] = max(0.0, float(values[v]))
    return Allocation(x=x, y=y, f=tuple(f))


def milp_point_from_allocation(
    m: MilpModel, a: Allocation
) -> np.ndarray:
    """Embed an allocation as a model point, with theta = x * y."""
    values = np.zeros(m.n_variables)
    for pair, v in m.x_index.items():
        values[v] = 1.0 if pair in a.x else 0.0
    for pair, v in m.y_index.items():
        values[v] = 1.0 if pair in a.y else 0.0
    for (host, i, j), v in m.theta_index.items():
        values[v] = 1.0 if (i, j) in a.x and (host, j) in a.y else 0.0
    for i, v in m.f_index.items():
        values[v] = a.f[i]
    return values


def point_residuals(m: MilpModel, values: np.ndarray) -> dict[str, float]:
    """Constraint violations of a point (name -> positive residual), bounds included."""
    bad: dict[str, float] = {}
    for con in m.constraints:
        lhs = sum(coef * values[v] for v, coef in con.coeffs)
        if con.sense == "<=" and lhs > con.rhs:
            bad[con.name] = lhs - con.rhs
        elif con.sense == ">=" and lhs < con.rhs:
            bad[con.name] = con.rhs - lhs
        elif con.sense == "=" and lhs != con.rhs:
            bad[con.name] = abs(lhs - con.rhs)
    for v, var in enumerate(m.variables):
        if values[v] < var.lb:
            bad[f"lb:{var.name}"] = var.lb - values[v]
        elif values[v] > var.ub:
            bad[f"ub:{var.name}"] = values[v] - var.ub
    return {k: r for k, r in bad.items() if r > 0.0}


def model_objective_value(m: MilpModel, values: np.ndarray) -> float:
    return float(np.dot(np.asarray(m.objective), values))


def export_lp(m: MilpModel, path) -> None:
    """Write the model in LP text format, one constraint per line."""

    def num(v: float) -> str:
        return format(v, ".17g")

    def term(coef: float, name: str, first: bool) -> str:
        sign = "-" if coef < 0 else ("" if first else "+")
        return f"{sign} {num(abs(coef))} {name} "

    lines = ["\\ placement/activation model export", "Maximize"]
    obj_terms = []
    first = True
    for v, coef in enumerate(m.objective):
        if coef != 0.0:
            obj_terms.append(term(coef, m.variables[v].name, first))
            first = False
    lines.append(" obj: " + ("".join(obj_terms).strip() if obj_terms else "0"))
    lines.append("Subject To")
    sense_map = {"<=": "<=", ">=": ">=", "=": "="}
    for con in m.constraints:
        parts = []
        first = True
        for v, coef in con.coeffs:
            if coef == 0.0:
                continue
            parts.append(term(coef, m.variables[v].name, first))
            first = False
        if parts:
            body = "".join(parts).strip()
        elif m.variables:
            body = f"0 {m.variables[0].name}"
        else:
            body = "0"
        lines.append(f" {con.name}: {body} {sense_map[con.sense]} {num(con.rhs)}")
    lines.append("Bounds")
    for var in m.variables:
        lines.append(f" {num(var.lb)} <= {var.name} <= {num(var.ub)}")
    binaries = [var.name for var in m.variables if var.kind == "B"]
    if binaries:
        lines.append("Binaries")
        lines.append(" " + " ".join(binaries))
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
