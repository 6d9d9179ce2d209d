"""Exact optimization: LP-based branch-and-bound and a brute-force oracle.

branch_and_bound searches best-bound-first with depth-first plunging,
branching on the most fractional placement (y) variable first, then on
activation (x) variables; the theta linearization binaries are never
branched because fixing x and y pins them.  enumerate_optimum exhaustively
scores every admission/placement/resource combination on tiny instances.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass

import numpy as np

from . import lpcore
from .model import (
    Allocation,
    MilpModel,
    allocation_from_values,
    check_feasibility,
    compute_flows,
    extract_frequencies,
    objective,
)
from .scenario import Scenario, ServiceRequest

INT_TOL = 1e-6
PRUNE_EPS = 1e-9


class InstanceTooLarge(ValueError):
    """enumerate_optimum guard: the instance exceeds the exhaustive-search bounds."""


@dataclass
class BnbReport:
    incumbent: Allocation | None
    incumbent_objective: float
    best_bound: float
    gap: float
    nodes_explored: int
    status: str  # OPTIMAL, TIME_LIMIT, INFEASIBLE


def _branch_variable(m: MilpModel, values: np.ndarray) -> int | None:
    """Most fractional y id, then most fractional x id; ties to lowest id."""
    for index in (m.y_index, m.x_index):
        best, best_score = None, None
        for vid in sorted(index.values()):
            frac = abs(values[vid] - round(values[vid]))
            if frac <= INT_TOL:
                continue
            score = abs(values[vid] - 0.5)
            if best_score is None or score < best_score - 1e-12:
                best, best_score = vid, score
        if best is not None:
            return best
    return None


def branch_and_bound(
    m: MilpModel,
    time_budget: float | None = None,
    seed: int = 0,
    n_resources: int | None = None,
    node_log: list | None = None,
) -> BnbReport:
    """Prove the MILP optimum, or return incumbent + bound at budget expiry.

    The search is deterministic; `seed` is accepted for interface stability
    but the node order never depends on it.  `node_log`, when given, collects
    (parent_bound, node_bound) pairs for diagnostics.
    """
    del seed
    started = time.monotonic()
    relaxed = lpcore.relax(m)
    lp = lpcore.CompiledLp(relaxed)
    if n_resources is None:
        n_resources = len(m.f_index)

    incumbent: Allocation | None = None
    incumbent_values: np.ndarray | None = None
    incumbent_obj = float("-inf")
    nodes = 0

    root = lp.solve()
    if root.status == lpcore.INFEASIBLE:
        return BnbReport(None, float("-inf"), float("-inf"), float("inf"), 1, "INFEASIBLE")
    if root.status != lpcore.OPTIMAL:
        return BnbReport(None, float("-inf"), float("inf"), float("inf"), 1, "TIME_LIMIT")

    # heap of (-optimistic bound, tiebreak, fixings); bounds come from the parent LP
    counter = itertools.count()
    heap: list[tuple[float, int, dict[int, float], float]] = []
    heapq.heappush(heap, (-root.objective, next(counter), {}, root.objective))
    out_of_time = False

    while heap:
        neg_bound, _, fixings, parent_bound = heapq.heappop(heap)
        if -neg_bound <= incumbent_obj + PRUNE_EPS:
            continue
        # plunge depth-first from the popped node
        while True:
            if time_budget is not None and time.monotonic() - started > time_budget:
                out_of_time = True
                heapq.heappush(heap, (neg_bound, next(counter), fixings, parent_bound))
                break
            sol = lp.solve(fixed=fixings)
            nodes += 1
            if sol.status != lpcore.OPTIMAL:
                break
            if node_log is not None:
                node_log.append((parent_bound, sol.objective))
            if sol.objective <= incumbent_obj + PRUNE_EPS:
                break
            var = _branch_variable(m, sol.values)
            if var is None:
                incumbent_obj = sol.objective
                incumbent_values = sol.values
                break
            toward = float(round(sol.values[var]))
            away = dict(fixings)
            away[var] = 1.0 - toward
            heapq.heappush(heap, (-sol.objective, next(counter), away, sol.objective))
            fixings = dict(fixings)
            fixings[var] = toward
            parent_bound = sol.objective
        if out_of_time:
            break

    if incumbent_values is not None:
        incumbent = allocation_from_values(m, incumbent_values, n_resources)

    if out_of_time:
        open_bounds = [-entry[0] for entry in heap]
        best_bound = max([incumbent_obj] + open_bounds)
        status = "TIME_LIMIT"
    else:
        best_bound = incumbent_obj
        status = "OPTIMAL"
    if incumbent is None and status == "OPTIMAL":
        # tree exhausted without any integral point
        return BnbReport(None, float("-inf"), float("-inf"), float("inf"), nodes, "INFEASIBLE")
    gap = (best_bound - incumbent_obj) / max(1.0, abs(incumbent_obj))
    return BnbReport(incumbent, incumbent_obj, best_bound, gap, nodes, status)


def _allocation_sort_key(
    m_hosts: int, requests: list[ServiceRequest], a: Allocation
) -> tuple:
    """Lexicographic key over the flattened y then x matrices."""
    y_bits = tuple(
        1 if (m, req.id) in a.y else 0
        for m in range(m_hosts)
        for req in requests
    )
    x_bits = tuple(sorted(a.x))
    return (y_bits, x_bits)


def enumerate_optimum(
    s: Scenario,
    requests: list[ServiceRequest],
    tol: float = 1e-6,
) -> tuple[Allocation, float]:
    """Exhaustive search over admission subsets, placements and resource picks.

    Guarded to tiny instances: at most 8 host*service placement slots and at
    most 3 eligible resources per requested cell.  Ties on the objective go
    to the lexicographically smallest (y, x).
    """
    slots = s.n_hosts * len(requests)
    if slots > 8:
        raise InstanceTooLarge(f"{slots} placement slots exceed the guard of 8")
    choices_per_service: list[list[tuple[int | None, tuple[int, ...]]]] = []
    for req in requests:
        per_cell: list[tuple[int, ...]] = []
        for k in req.scope:
            in_cell = s.resources_by_cell_type.get((k, req.data_type), ())
            if len(in_cell) > 3:
                raise InstanceTooLarge(
                    f"cell {k} offers {len(in_cell)} eligible resources (guard: 3)"
                )
            per_cell.append(in_cell)
        options: list[tuple[int | None, tuple[int, ...]]] = [(None, ())]
        if all(per_cell):
            for m in range(s.n_hosts):
                for combo in itertools.product(*per_cell):
                    options.append((m, combo))
        choices_per_service.append(options)

    best: tuple[float, tuple, Allocation] | None = None
    n_res = s.n_resources
    for assignment in itertools.product(*choices_per_service):
        x_pairs = []
        y_pairs = []
        for req, (host, combo) in zip(requests, assignment):
            if host is None:
                continue
            y_pairs.append((host, req.id))
            x_pairs.extend((i, req.id) for i in combo)
        a = Allocation(
            x=frozenset(x_pairs),
            y=frozenset(y_pairs),
            f=extract_frequencies(requests, frozenset(x_pairs), n_res),
        )
        if check_feasibility(s, requests, a, tol=tol):
            continue
        _, _, j = objective(s, requests, a, compute_flows(s, requests, a))
        key = _allocation_sort_key(s.n_hosts, requests, a)
        if best is None or j > best[0] + 1e-12 or (
            abs(j - best[0]) <= 1e-12 and key < best[1]
        ):
            best = (j, key, a)
    assert best is not None  # the empty allocation is always feasible
    return best[2], best[0]
