"""Cheapest-insertion primitives and the route-dissolving improvement pass.

Routes are handled here as plain tuples of node ids; discharge durations
are always re-derived with :func:`optimize_discharge`, so the cost of a
sequence is a pure function of the sequence.
"""
from __future__ import annotations

from .core import (
    CUSTOMER, STATION, Instance, Route, Solution, _propagate, make_solution, optimize_discharge,
)

INFEASIBLE = None


class RouteCosts:
    """Memoized cost of a node sequence, vehicle term excluded.

    ``cost(seq)`` is ``y1 * distance - y3 * max discharge`` or None when the
    sequence is infeasible.  The cache belongs to one instance.
    """

    def __init__(self, instance: Instance):
        self.instance = instance
        self._cache = {}
        self._kind = instance.tables.kind
        self._dist = instance.tables.dist

    def cost(self, seq: tuple):
        try:
            return self._cache[seq]
        except KeyError:
            pass
        inst = self.instance
        value = INFEASIBLE
        if _propagate(inst, seq, (0.0,) * len(seq))[0] is None:
            dist = self._dist
            prev = inst.depot.id
            d = 0.0
            for n in seq:
                d += dist[prev][n]
                prev = n
            d += dist[prev][inst.depot.id]
            value = inst.weights.y1 * d
            if any(self._kind[n] == STATION for n in seq):
                value -= inst.weights.y3 * sum(optimize_discharge(inst, seq).gammas)
        self._cache[seq] = value
        return value

    def route(self, seq: tuple) -> Route:
        if any(self._kind[n] == STATION for n in seq):
            return optimize_discharge(self.instance, seq)
        return Route.from_nodes(seq)

    def solution(self, seqs) -> Solution:
        return make_solution(self.instance, [self.route(tuple(s)) for s in seqs if len(s)])

    def total(self, seqs) -> float:
        """Full cost of a route set, vehicles included; None if any route is infeasible."""
        y2 = self.instance.weights.y2
        out = 0.0
        for s in seqs:
            if not s:
                continue
            c = self.cost(tuple(s))
            if c is None:
                return None
            out += c + y2
        return out


def best_insertion(costs: RouteCosts, seqs, block: tuple, forbidden=None):
    """Cheapest feasible place for ``block`` (kept contiguous) among ``seqs``.

    Returns ``(delta, route_index, position)`` or None.  ``forbidden`` maps a
    route index to a set of positions that must not be used.  Ties go to the
    lowest route index, then lowest position.
    """
    best = None
    for ri, seq in enumerate(seqs):
        base = costs.cost(seq)
        if base is None:
            continue
        bad = forbidden.get(ri, ()) if forbidden else ()
        for pos in range(len(seq) + 1):
            if pos in bad:
                continue
            cand = seq[:pos] + block + seq[pos:]
            c = costs.cost(cand)
            if c is None:
                continue
            delta = c - base
            if best is None or delta < best[0] - 1e-12:
                best = (delta, ri, pos)
    return best


def insert_or_open(costs: RouteCosts, seqs: list, node: int) -> bool:
    """Insert ``node`` at its cheapest feasible place, else open a new route.

    Returns False only when the node cannot be served even alone.
    """
    found = best_insertion(costs, seqs, (node,))
    if found is not None:
        _, ri, pos = found
        s = seqs[ri]
        seqs[ri] = s[:pos] + (node,) + s[pos:]
        return True
    if costs.cost((node,)) is not None:
        seqs.append((node,))
        return True
    return False


def add_profitable_stations(costs: RouteCosts, seqs: list, stations=None) -> list:
    """Give the route set the stations that pay for their detour.

    Repeatedly applies the single station insertion with the largest cost
    reduction, then tries relocating each placed station; stops when no
    move strictly lowers the cost.  Stations are only ever placed into
    existing routes.
    """
    inst = costs.instance
    pool = list(inst.station_ids if stations is None else stations)
    seqs = list(seqs)
    while True:
        used = {n for s in seqs for n in s}
        best = None
        for st in pool:
            if st in used:
                continue
            found = best_insertion(costs, seqs, (st,))
            if found is not None and found[0] < -1e-9 and (best is None or found[0] < best[0] - 1e-12):
                best = (found[0], found[1], found[2], st)
        if best is not None:
            _, ri, pos, st = best
            seqs[ri] = seqs[ri][:pos] + (st,) + seqs[ri][pos:]
            continue
        if not _relocate_stations(costs, seqs, set(pool)):
            return seqs


def _relocate_stations(costs: RouteCosts, seqs: list, pool: set) -> bool:
    for ri, seq in enumerate(seqs):
        for st in seq:
            if st not in pool:
                continue
            before = costs.cost(seq)
            without = tuple(n for n in seq if n != st)
            trial = seqs[:ri] + [without] + seqs[ri + 1:]
            found = best_insertion(costs, trial, (st,))
            if found is None:
                continue
            gain = found[0] + costs.cost(without) - before
            if gain < -1e-9:
                _, rj, pos = found
                trial[rj] = trial[rj][:pos] + (st,) + trial[rj][pos:]
                seqs[:] = trial
                return True
    return False


def _route_cost_as_given(costs: RouteCosts, route: Route) -> float:
    inst = costs.instance
    dist = inst.tables.dist
    prev = inst.depot.id
    d = 0.0
    for n in route.nodes:
        d += dist[prev][n]
        prev = n
    d += dist[prev][inst.depot.id]
    return inst.weights.y1 * d - inst.weights.y3 * sum(route.gammas)


def improve_insertion(instance: Instance, solution: Solution, costs: RouteCosts | None = None) -> Solution:
    """Dissolve small routes into the others while that lowers the cost.

    Candidate routes are tried in order of fewest customers, then least
    load.  Each node of a candidate goes to its cheapest feasible position in
    the remaining routes; stations whose best place does not lower the
    cost are dropped, a customer
    that fits nowhere cancels the move.  A move is kept only if the total
    cost strictly drops; the first kept move restarts the scan.
    """
    costs = costs or RouteCosts(instance)
    tab = instance.tables
    y2 = instance.weights.y2
    routes = [r for r in solution.routes if len(r)]
    current = [(r.nodes, _route_cost_as_given(costs, r), r) for r in routes]
    changed = False
    while len(current) > 1:
        order = sorted(
            range(len(current)),
            key=lambda i: (
                sum(1 for n in current[i][0] if tab.kind[n] == CUSTOMER),
                sum(tab.demand[n] for n in current[i][0]),
                current[i][0],
            ),
        )
        old_total = sum(c for _, c, _ in current) + y2 * len(current)
        accepted = None
        for i in order:
            seqs = [current[j][0] for j in range(len(current)) if j != i]
            touched = set()
            ok = True
            victim = current[i][0]
            members = [n for n in victim if tab.kind[n] == CUSTOMER] + [
                n for n in victim if tab.kind[n] == STATION
            ]
            for n in members:
                found = best_insertion(costs, seqs, (n,))
                if found is None or (tab.kind[n] == STATION and found[0] >= -1e-9):
                    if tab.kind[n] == CUSTOMER:
                        ok = False
                        break
                    continue
                _, ri, pos = found
                seqs[ri] = seqs[ri][:pos] + (n,) + seqs[ri][pos:]
                touched.add(ri)
            if not ok:
                continue
            others = [current[j] for j in range(len(current)) if j != i]
            new = []
            for ri, seq in enumerate(seqs):
                if ri in touched:
                    new.append((seq, costs.cost(seq), None))
                else:
                    new.append(others[ri])
            new_total = sum(c for _, c, _ in new) + y2 * len(new)
            if new_total < old_total - 1e-9:
                accepted = new
                break
        if accepted is None:
            break
        current = accepted
        changed = True
    if not changed:
        return solution
    out = [r if r is not None else costs.route(seq) for seq, _, r in current]
    return make_solution(instance, out, solution.metrics.wall_time)
