"""Problem model, schedule simulation, feasibility checks and cost evaluation.

Node ids are non-negative integers unique across the depot, customers and
stations.  Routes store ids, never positions, so a route stays meaningful
when passed between solvers.  All types here are immutable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from types import SimpleNamespace
from typing import Iterable, Sequence, Union

TOL = 1e-6
GAMMA_EPS = 1e-6

DEPOT = "depot"
CUSTOMER = "customer"
STATION = "station"

VIOLATION_KINDS = (
    "capacity",
    "battery",
    "customer_window",
    "grid_window",
    "horizon",
    "missing_customer",
    "duplicate_visit",
    "unknown_node",
    "discharge_at_customer",
    "fleet_size",
)


class InstanceError(ValueError):
    """Raised when an instance breaks one of its invariants."""


class InfeasibleError(RuntimeError):
    """Raised when no feasible schedule or solution exists."""


@dataclass(frozen=True)
class CostWeights:
    y1: float = 0.0354  # per distance unit
    y2: float = 101.81  # per vehicle
    y3: float = 0.2478  # per unit of discharge time

    def __post_init__(self):
        if min(self.y1, self.y2, self.y3) < 0 or not all(
            math.isfinite(w) for w in (self.y1, self.y2, self.y3)
        ):
            raise InstanceError(f"cost weights must be finite and nonnegative: {self}")


DEFAULT_WEIGHTS = CostWeights()


@dataclass(frozen=True)
class Depot:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class Customer:
    id: int
    x: float
    y: float
    demand: float
    service_time: float
    window_open: float
    window_close: float

    def __post_init__(self):
        if not self.demand > 0:
            raise InstanceError(f"customer {self.id}: demand must be positive")
        if self.service_time < 0:
            raise InstanceError(f"customer {self.id}: negative service time")
        if not self.window_open <= self.window_close:
            raise InstanceError(f"customer {self.id}: window_open > window_close")


@dataclass(frozen=True)
class Station:
    id: int
    x: float
    y: float
    grid_start: float
    grid_stop: float

    def __post_init__(self):
        if not self.grid_start <= self.grid_stop:
            raise InstanceError(f"station {self.id}: grid_start > grid_stop")


@dataclass(frozen=True)
class Instance:
    depot: Depot
    customers: tuple
    stations: tuple
    fleet_size: int
    capacity: float
    battery: float
    consumption_rate: float = 1.0
    discharge_rate: float = 1.0
    speed: float = 1.0
    weights: CostWeights = DEFAULT_WEIGHTS
    horizon: float = 1000.0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "customers", tuple(self.customers))
        object.__setattr__(self, "stations", tuple(self.stations))
        nodes = [self.depot, *self.customers, *self.stations]
        ids = [n.id for n in nodes]
        if len(set(ids)) != len(ids):
            raise InstanceError("node ids must be unique")
        if any(not isinstance(i, int) or i < 0 for i in ids):
            raise InstanceError("node ids must be non-negative integers")
        for n in nodes:
            if not (math.isfinite(n.x) and math.isfinite(n.y)):
                raise InstanceError(f"node {n.id}: non-finite coordinates")
        for name in ("capacity", "battery", "consumption_rate", "discharge_rate", "speed"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InstanceError(f"{name} must be finite and positive, got {value}")
        if self.fleet_size < 1:
            raise InstanceError("fleet_size must be at least 1")
        if not (math.isfinite(self.horizon) and self.horizon >= 0):
            raise InstanceError("horizon must be finite and nonnegative")
        for c in self.customers:
            if not (0 <= c.window_open <= c.window_close <= self.horizon):
                raise InstanceError(f"customer {c.id}: window outside [0, horizon]")
        for s in self.stations:
            if not (0 <= s.grid_start <= s.grid_stop <= self.horizon):
                raise InstanceError(f"station {s.id}: grid window outside [0, horizon]")

    @property
    def customer_ids(self) -> tuple:
        return tuple(c.id for c in self.customers)

    @property
    def station_ids(self) -> tuple:
        return tuple(s.id for s in self.stations)

    def node(self, node_id: int):
        try:
            return self._by_id[node_id]
        except KeyError:
            raise KeyError(f"unknown node id {node_id}") from None

    @cached_property
    def _by_id(self) -> dict:
        return {n.id: n for n in (self.depot, *self.customers, *self.stations)}

    @cached_property
    def tables(self) -> SimpleNamespace:
        """Id-indexed lookup lists used by the hot loops.

        ``open``/``close`` hold the customer window or the station grid
        window; ``service`` and ``demand`` are zero for stations and depot.
        """
        size = max(self._by_id) + 1
        kind = [None] * size
        xs = [0.0] * size
        ys = [0.0] * size
        demand = [0.0] * size
        service = [0.0] * size
        open_ = [0.0] * size
        close = [self.horizon] * size
        for n in self._by_id.values():
            xs[n.id], ys[n.id] = float(n.x), float(n.y)
        kind[self.depot.id] = DEPOT
        for c in self.customers:
            kind[c.id] = CUSTOMER
            demand[c.id] = float(c.demand)
            service[c.id] = float(c.service_time)
            open_[c.id] = float(c.window_open)
            close[c.id] = float(c.window_close)
        for s in self.stations:
            kind[s.id] = STATION
            open_[s.id] = float(s.grid_start)
            close[s.id] = float(s.grid_stop)
        ids = list(self._by_id)
        dist = [[0.0] * size for _ in range(size)]
        for a in ids:
            row = dist[a]
            for b in ids:
                row[b] = math.hypot(xs[a] - xs[b], ys[a] - ys[b])
        return SimpleNamespace(
            kind=kind, x=xs, y=ys, demand=demand, service=service,
            open=open_, close=close, dist=dist,
        )

    @cached_property
    def diagonal(self) -> float:
        """Length of the diagonal of the bounding box of all nodes."""
        xs = [n.x for n in self._by_id.values()]
        ys = [n.y for n in self._by_id.values()]
        return math.hypot(max(xs) - min(xs), max(ys) - min(ys))


def travel(instance: Instance, node_a: int, node_b: int) -> tuple:
    """Return ``(distance, time, energy)`` of the leg between two nodes."""
    a, b = instance.node(node_a), instance.node(node_b)
    d = math.hypot(a.x - b.x, a.y - b.y)
    return d, d / instance.speed, instance.consumption_rate * d


@dataclass(frozen=True)
class Route:
    """Ordered visits ``(node_id, discharge_time)``; starts and ends at the depot."""

    visits: tuple = ()

    def __post_init__(self):
        visits = tuple((int(n), float(g)) for n, g in self.visits)
        nodes = [n for n, _ in visits]
        if len(set(nodes)) != len(nodes):
            raise ValueError(f"node visited twice in one route: {nodes}")
        if any(g < 0 or not math.isfinite(g) for _, g in visits):
            raise ValueError("discharge durations must be finite and nonnegative")
        object.__setattr__(self, "visits", visits)

    @classmethod
    def from_nodes(cls, nodes: Iterable[int], gammas: Iterable[float] | None = None) -> "Route":
        nodes = list(nodes)
        if gammas is None:
            gammas = [0.0] * len(nodes)
        return cls(tuple(zip(nodes, gammas)))

    @property
    def nodes(self) -> tuple:
        return tuple(n for n, _ in self.visits)

    @property
    def gammas(self) -> tuple:
        return tuple(g for _, g in self.visits)

    def __len__(self):
        return len(self.visits)


@dataclass(frozen=True)
class Violation:
    kind: str
    visit_index: int | None = None
    route_index: int | None = None
    node: int | None = None
    detail: str = ""


@dataclass(frozen=True)
class Schedule:
    nodes: tuple
    arrival: tuple
    wait: tuple
    service_start: tuple
    departure: tuple
    soc_on_arrival: tuple
    load_on_arrival: tuple
    distance: float
    discharge_time: float
    energy_discharged: float
    return_time: float
    return_soc: float


@dataclass(frozen=True)
class Metrics:
    total_distance: float = 0.0
    vehicles_used: int = 0
    energy_discharged: float = 0.0
    discharge_time: float = 0.0
    wall_time: float = 0.0
    cost: float = 0.0


@dataclass(frozen=True)
class Solution:
    routes: tuple = ()
    metrics: Metrics = field(default_factory=Metrics)

    @property
    def cost(self) -> float:
        return self.metrics.cost

    def customer_routes(self, instance: Instance) -> tuple:
        """Routes reduced to their customer sequence (stations stripped)."""
        kind = instance.tables.kind
        return tuple(tuple(n for n in r.nodes if kind[n] == CUSTOMER) for r in self.routes)


def evaluate_cost(
    metrics_or_solution: Union[Metrics, Solution],
    weights: CostWeights = DEFAULT_WEIGHTS,
    discharge_rate: float = 1.0,
) -> float:
    """Weighted trip cost: distance and vehicle terms minus the discharge reward.

    The discharge reward is paid per unit of discharge *time*, recovered from
    the energy column as ``energy_discharged / discharge_rate``.
    """
    m = metrics_or_solution.metrics if isinstance(metrics_or_solution, Solution) else metrics_or_solution
    discharge_time = m.energy_discharged / discharge_rate
    return weights.y1 * m.total_distance + weights.y2 * m.vehicles_used - weights.y3 * discharge_time


def _canonical(routes):
    routes = [r if isinstance(r, Route) else Route(r) for r in routes]
    return tuple(sorted((r for r in routes if len(r)), key=lambda r: r.nodes))


def make_solution(instance: Instance, routes: Iterable, wall_time: float = 0.0) -> Solution:
    """Wrap routes into a Solution with metrics.

    Empty routes are dropped and the rest sorted by node sequence, so two
    solutions with the same route set compare equal.  Sums use ``math.fsum``
    so the metrics do not depend on route or leg order.
    """
    routes = _canonical(routes)
    dist = instance.tables.dist
    depot = instance.depot.id
    legs = []
    gammas = []
    for r in routes:
        prev = depot
        for n, g in r.visits:
            legs.append(dist[prev][n])
            gammas.append(g)
            prev = n
        legs.append(dist[prev][depot])
    d = math.fsum(legs)
    g = math.fsum(gammas)
    w = instance.weights
    metrics = Metrics(
        total_distance=d,
        vehicles_used=len(routes),
        energy_discharged=instance.discharge_rate * g,
        discharge_time=g,
        wall_time=wall_time,
        cost=w.y1 * d + w.y2 * len(routes) - w.y3 * g,
    )
    return Solution(routes, metrics)


def with_wall_time(solution: Solution, wall_time: float) -> Solution:
    m = solution.metrics
    return Solution(solution.routes, Metrics(
        m.total_distance, m.vehicles_used, m.energy_discharged, m.discharge_time, wall_time, m.cost,
    ))


def _propagate(instance: Instance, nodes: Sequence[int], gammas: Sequence[float],
               wait_at_stations: bool = True, record: bool = False):
    """Forward pass over one route.

    Returns ``(violation, trace)``; ``violation`` is None when the route is
    feasible and ``trace`` holds the per-visit timeline when ``record``.
    """
    tab = instance.tables
    dist, kind = tab.dist, tab.kind
    H, R, speed = instance.consumption_rate, instance.discharge_rate, instance.speed
    cap = instance.capacity
    depot = instance.depot.id

    load = 0.0
    for k, n in enumerate(nodes):
        if n < 0 or n >= len(kind) or kind[n] is None or kind[n] == DEPOT:
            raise ValueError(f"route visits unknown node {n}")
        if kind[n] == CUSTOMER:
            if gammas[k] > 0:
                raise ValueError(f"positive discharge at customer {n}")
            load += tab.demand[n]
            if load > cap + TOL:
                return Violation("capacity", k, node=n, detail=f"load {load:g} > {cap:g}"), None

    trace = [] if record else None
    t = 0.0
    soc = instance.battery
    prev = depot
    for k, n in enumerate(nodes):
        d = dist[prev][n]
        arrival = t + d / speed
        soc -= H * d
        if soc < -TOL:
            return Violation("battery", k, node=n, detail=f"SoC {soc:g} on arrival"), trace
        soc_arrival = soc
        if kind[n] == CUSTOMER:
            start = arrival if arrival > tab.open[n] else tab.open[n]
            if start > tab.close[n] + TOL:
                return Violation("customer_window", k, node=n,
                                 detail=f"service start {start:g} > {tab.close[n]:g}"), trace
            dep = start + tab.service[n]
            load_arrival = load
            load -= tab.demand[n]
        else:
            g = gammas[k]
            start = arrival if (arrival > tab.open[n] or not wait_at_stations) else tab.open[n]
            if start < tab.open[n] - TOL or start + g > tab.close[n] + TOL:
                return Violation("grid_window", k, node=n,
                                 detail=f"discharge [{start:g}, {start + g:g}] outside "
                                        f"[{tab.open[n]:g}, {tab.close[n]:g}]"), trace
            soc -= R * g
            if soc < -TOL:
                return Violation("battery", k, node=n, detail=f"SoC {soc:g} after discharge"), trace
            dep = start + g
            load_arrival = load
        if record:
            trace.append((n, arrival, start - arrival, start, dep, soc_arrival, load_arrival))
        t = dep
        prev = n

    d = dist[prev][depot]
    ret = t + d / speed
    soc -= H * d
    k = len(nodes)
    if soc < -TOL:
        return Violation("battery", k, node=depot, detail=f"SoC {soc:g} on return"), trace
    if ret > instance.horizon + TOL:
        return Violation("horizon", k, node=depot, detail=f"return {ret:g} > {instance.horizon:g}"), trace
    if record:
        trace.append((ret, soc))
    return None, trace


def sequence_feasible(instance: Instance, nodes: Sequence[int], gammas: Sequence[float] | None = None) -> bool:
    if gammas is None:
        gammas = (0.0,) * len(nodes)
    return _propagate(instance, nodes, gammas)[0] is None


def simulate_route(instance: Instance, route: Route, wait_at_stations: bool = True):
    """Propagate arrival time, state of charge and load along ``route``.

    Returns a :class:`Schedule`, or the first :class:`Violation` met.  A
    vehicle arriving before a customer window or a station grid window waits;
    with ``wait_at_stations=False`` station service starts on arrival.
    """
    if not isinstance(route, Route):
        route = Route(route)
    nodes, gammas = route.nodes, route.gammas
    violation, trace = _propagate(instance, nodes, gammas, wait_at_stations, record=True)
    if violation is not None:
        return violation
    ret, ret_soc = trace[-1]
    rows = trace[:-1]
    dist = instance.tables.dist
    depot = instance.depot.id
    path = (depot, *nodes, depot)
    distance = math.fsum(dist[a][b] for a, b in zip(path, path[1:]))
    discharge = math.fsum(gammas)
    cols = list(zip(*rows)) if rows else [()] * 7
    return Schedule(
        nodes=tuple(nodes),
        arrival=tuple(cols[1]),
        wait=tuple(cols[2]),
        service_start=tuple(cols[3]),
        departure=tuple(cols[4]),
        soc_on_arrival=tuple(cols[5]),
        load_on_arrival=tuple(cols[6]),
        distance=distance,
        discharge_time=discharge,
        energy_discharged=instance.discharge_rate * discharge,
        return_time=ret,
        return_soc=ret_soc,
    )


def soc_shortfall(instance: Instance, route: Route) -> float:
    """Energy deficit of a route: ``max(0, -min SoC)`` ignoring all other constraints.

    Deficits within the feasibility tolerance count as zero.
    """
    dist = instance.tables.dist
    H, R = instance.consumption_rate, instance.discharge_rate
    soc = instance.battery
    lowest = soc
    prev = instance.depot.id
    for n, g in route.visits:
        soc -= H * dist[prev][n]
        lowest = min(lowest, soc)
        soc -= R * g
        lowest = min(lowest, soc)
        prev = n
    soc -= H * dist[prev][instance.depot.id]
    lowest = min(lowest, soc)
    return -lowest if lowest < -TOL else 0.0


def check_solution(instance: Instance, solution, wait_at_stations: bool = True) -> list:
    """All constraint violations of a solution; empty iff it is feasible.

    Flow conservation holds by construction of :class:`Route` (every route
    leaves and re-enters the depot), so it is never reported.
    """
    routes = solution.routes if isinstance(solution, Solution) else tuple(solution)
    routes = [r if isinstance(r, Route) else Route(r) for r in routes]
    kind = instance.tables.kind
    out = []
    seen = {}
    structural_ok = []
    for ri, r in enumerate(routes):
        ok = True
        for k, (n, g) in enumerate(r.visits):
            if n < 0 or n >= len(kind) or kind[n] is None or kind[n] == DEPOT:
                out.append(Violation("unknown_node", k, ri, n))
                ok = False
                continue
            if n in seen:
                out.append(Violation("duplicate_visit", k, ri, n, f"also in route {seen[n]}"))
            seen.setdefault(n, ri)
            if kind[n] == CUSTOMER and g > 0:
                out.append(Violation("discharge_at_customer", k, ri, n))
                ok = False
        structural_ok.append(ok)
    for c in instance.customer_ids:
        if c not in seen:
            out.append(Violation("missing_customer", node=c))
    used = sum(1 for r in routes if len(r))
    if used > instance.fleet_size:
        out.append(Violation("fleet_size", detail=f"{used} routes > fleet of {instance.fleet_size}"))
    for ri, r in enumerate(routes):
        if not structural_ok[ri]:
            continue
        v = simulate_route(instance, r, wait_at_stations)
        if isinstance(v, Violation):
            out.append(Violation(v.kind, v.visit_index, ri, v.node, v.detail))
    return out


def _downstream_delay(instance: Instance, trace, start_index: int, ret: float) -> float:
    """Largest delay of the arrival at visit ``start_index`` the rest of the route absorbs."""
    tab = instance.tables
    slack = instance.horizon - ret
    for k in range(len(trace) - 1, start_index - 1, -1):
        n, _, wait, start, dep, _, _ = trace[k]
        if tab.kind[n] == CUSTOMER:
            own = tab.close[n] - start
        else:
            own = tab.close[n] - dep
        slack = wait + min(own, slack)
    return slack


def optimize_discharge(instance: Instance, visit_sequence) -> Route:
    """Assign discharge durations maximizing total discharge for a fixed sequence.

    Stations are raised one at a time, last to first, each to the largest
    value the rest of the route tolerates (energy for all later legs, its own
    grid window, and the time slack of every later visit and the return).
    """
    nodes = visit_sequence.nodes if isinstance(visit_sequence, Route) else tuple(visit_sequence)
    kind = instance.tables.kind
    gammas = [0.0] * len(nodes)
    violation, _ = _propagate(instance, nodes, gammas)
    if violation is not None:
        raise InfeasibleError(f"base sequence infeasible: {violation}")
    stations = [k for k, n in enumerate(nodes) if kind[n] == STATION]
    R = instance.discharge_rate
    for k in reversed(stations):
        _, trace = _propagate(instance, nodes, gammas, record=True)
        ret, ret_soc = trace[-1]
        rows = trace[:-1]
        n, _, _, start, dep, soc_arr, _ = rows[k]
        later_soc = min([r[5] for r in rows[k + 1:]] + [ret_soc])
        by_energy = later_soc / R
        by_window = instance.tables.close[n] - dep
        by_time = _downstream_delay(instance, rows, k + 1, ret)
        inc = min(by_energy, by_window, by_time)
        if inc > 0:
            gammas[k] += inc
    route = Route.from_nodes(nodes, gammas)
    if _propagate(instance, nodes, gammas)[0] is not None:  # pragma: no cover - guarded by construction
        raise InfeasibleError("discharge assignment lost feasibility")
    return route


def station_discharge_cap(instance: Instance, station: int, arrival: float, soc_on_arrival: float) -> float:
    """Longest discharge at ``station`` that still allows a direct return to the depot."""
    tab = instance.tables
    start = max(arrival, tab.open[station])
    back = tab.dist[station][instance.depot.id]
    by_energy = (soc_on_arrival - instance.consumption_rate * back) / instance.discharge_rate
    by_time = min(tab.close[station] - start, instance.horizon - start - back / instance.speed)
    return min(by_energy, by_time)
