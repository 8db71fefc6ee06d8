"""Exact search for tiny instances: depth-first branch-and-bound and an
independent brute-force enumerator.

Both score a route as ``y2 + y1 * distance - y3 * max discharge`` with the
discharge durations of each visit sequence set by ``optimize_discharge``.
Routes must serve at least one customer; station-only routes are never
part of a returned solution.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

from .core import CUSTOMER, InfeasibleError, Instance, Solution, make_solution, with_wall_time
from .insertion import RouteCosts
from .masking import can_visit


@dataclass(frozen=True)
class SearchLimits:
    max_nodes_expanded: int = 5_000_000
    wall_time_budget: float = 60.0

    def __post_init__(self):
        if self.max_nodes_expanded <= 0 or self.wall_time_budget <= 0:
            raise ValueError("search limits must be positive")


@dataclass(frozen=True)
class ExactResult:
    solution: Solution
    proven_optimal: bool
    nodes_expanded: int
    bound_at_exit: float


class _Budget(Exception):
    pass


def solve_exact(instance: Instance, limits: SearchLimits = SearchLimits(), use_bound: bool = True) -> ExactResult:
    """Branch-and-bound over "append node / close route" decisions.

    The partial route is extended by any customer or unused station that
    passes the assignment masks (ascending id order), or closed.  A new
    route must contain the smallest customer still unserved when it was
    opened, which removes route-order symmetry.  The bound adds, for every
    unserved customer, ``y1`` times its shortest outgoing edge, and
    subtracts ``y3`` times the discharge time still obtainable.
    """
    t0 = time.perf_counter()
    inst = instance
    tab = inst.tables
    dist = tab.dist
    w = inst.weights
    depot = inst.depot.id
    costs = RouteCosts(inst)
    customers = sorted(inst.customer_ids)
    stations = sorted(inst.station_ids)
    everyone = [depot] + customers + stations
    min_out = {c: min(dist[c][o] for o in everyone if o != c) for c in customers}
    window = {s: tab.close[s] - tab.open[s] for s in stations}
    energy_cap = inst.battery / inst.discharge_rate

    for c in customers:
        if costs.cost((c,)) is None:
            raise InfeasibleError(f"customer {c} cannot be served even alone")

    best_cost = math.inf
    best_routes = None
    expanded = 0

    def discharge_bound(free_stations, routes_left):
        return min(sum(window[s] for s in free_stations), energy_cap * routes_left)

    def bound(fixed, open_len, unserved, free_stations, routes_left, seq=()):
        if not use_bound:
            return -math.inf
        lb = fixed + w.y1 * open_len
        lb += w.y1 * sum(min_out[c] for c in unserved)
        # stations on the open route still earn their discharge when it closes
        pending = free_stations | {n for n in seq if tab.kind[n] != CUSTOMER}
        lb -= w.y3 * discharge_bound(pending, routes_left)
        return lb

    def dfs(closed, fixed, seq, state, unserved, free_stations, anchor):
        nonlocal best_cost, best_routes, expanded
        expanded += 1
        if expanded > limits.max_nodes_expanded or time.perf_counter() - t0 > limits.wall_time_budget:
            raise _Budget
        pos, t, soc, load, length = state
        routes_left = inst.fleet_size - len(closed)
        if bound(fixed, length, unserved, free_stations, routes_left, seq) >= best_cost - 1e-12:
            return
        for n in sorted(unserved | free_stations):
            ok, arrival_state = can_visit(inst, pos, t, soc, load, n)
            if not ok:
                continue
            if tab.kind[n] == CUSTOMER:
                dfs(closed, fixed, seq + (n,), arrival_state + (length + dist[pos][n],),
                    unserved - {n}, free_stations, anchor)
            else:
                dfs(closed, fixed, seq + (n,), arrival_state + (length + dist[pos][n],),
                    unserved, free_stations - {n}, anchor)
        # close the current route
        if anchor is None or anchor not in seq:
            return
        rc = costs.cost(seq)
        if rc is None:
            return
        new_closed = closed + (seq,)
        new_fixed = fixed + rc
        if not unserved:
            if new_fixed < best_cost - 1e-12:
                best_cost, best_routes = new_fixed, new_closed
            return
        if len(new_closed) >= inst.fleet_size:
            return
        start = (depot, 0.0, inst.battery, inst.capacity)
        nxt = min(unserved)
        if bound(new_fixed + w.y2, 0.0, unserved, free_stations, routes_left - 1) >= best_cost - 1e-12:
            return
        dfs(new_closed, new_fixed + w.y2, (), start + (0.0,), unserved, free_stations, nxt)

    proven = True
    if not customers:
        return ExactResult(make_solution(inst, [], time.perf_counter() - t0), True, 0, 0.0)
    try:
        start = (depot, 0.0, inst.battery, inst.capacity, 0.0)
        dfs((), w.y2, (), start, frozenset(customers), frozenset(stations), customers[0])
    except _Budget:
        proven = False
    if best_routes is None:
        if proven:
            raise InfeasibleError("no feasible solution within the fleet size")
        raise InfeasibleError("search budget exhausted before any feasible solution")
    sol = costs.solution(best_routes)
    root = w.y2 + w.y1 * sum(min_out.values()) - w.y3 * discharge_bound(stations, inst.fleet_size)
    return ExactResult(
        with_wall_time(sol, time.perf_counter() - t0),
        proven,
        expanded,
        sol.cost if proven else root,
    )


def _set_partitions(items, max_blocks):
    """All partitions of ``items`` into at most ``max_blocks`` unordered blocks."""
    items = list(items)
    if not items:
        yield []
        return

    def rec(i, blocks):
        if i == len(items):
            yield [tuple(b) for b in blocks]
            return
        for b in blocks:
            b.append(items[i])
            yield from rec(i + 1, blocks)
            b.pop()
        if len(blocks) < max_blocks:
            blocks.append([items[i]])
            yield from rec(i + 1, blocks)
            blocks.pop()

    yield from rec(0, [])


def enumerate_all(instance: Instance) -> Solution:
    """Exhaustive optimum: every partition of the customers into at most
    ``fleet_size`` routes, every assignment of stations to routes (or to
    none), and every visiting order of each route's nodes.

    Limited to 6 customers and 2 stations.
    """
    inst = instance
    customers = sorted(inst.customer_ids)
    stations = sorted(inst.station_ids)
    if len(customers) > 6 or len(stations) > 2:
        raise ValueError("enumerate_all is limited to 6 customers and 2 stations")
    if not customers:
        return make_solution(inst, [])
    costs = RouteCosts(inst)
    y2 = inst.weights.y2
    best_order = {}

    def best_route(nodes: frozenset):
        if nodes not in best_order:
            found = None
            for perm in itertools.permutations(sorted(nodes)):
                c = costs.cost(perm)
                if c is not None and (found is None or c < found[0]):
                    found = (c, perm)
            best_order[nodes] = found
        return best_order[nodes]

    best = None
    for blocks in _set_partitions(customers, inst.fleet_size):
        for assign in itertools.product(range(len(blocks) + 1), repeat=len(stations)):
            groups = [set(b) for b in blocks]
            for s, a in zip(stations, assign):
                if a < len(blocks):
                    groups[a].add(s)
            total = 0.0
            seqs = []
            for g in groups:
                r = best_route(frozenset(g))
                if r is None:
                    break
                total += r[0] + y2
                seqs.append(r[1])
            else:
                if best is None or total < best[0] - 1e-12:
                    best = (total, seqs)
    if best is None:
        raise InfeasibleError("instance has no feasible solution")
    return costs.solution(best[1])
