"""Solomon parsing and conversion, random instance generation, and the
canonical instance text format.

Canonical format (one record per line, ``#`` starts a comment)::

    NAME c101-s3
    DEPOT
    0 40.0 50.0
    VEHICLE
    # fleet_size capacity battery consumption_rate discharge_rate speed horizon
    25 200.0 200.0 1.0 1.0 1.0 1236.0
    CUSTOMERS
    # id x y demand service_time window_open window_close
    1 45.0 68.0 10.0 90.0 912.0 967.0
    STATIONS
    # id x y grid_start grid_stop
    5 42.0 65.0 432.6 803.4
    WEIGHTS
    # y1 y2 y3
    0.0354 101.81 0.2478

A missing WEIGHTS section means the default weights.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .core import DEFAULT_WEIGHTS, CostWeights, Customer, Depot, Instance, InstanceError, Station


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class SolomonNode:
    id: int
    x: float
    y: float
    demand: float
    ready_time: float
    due_date: float
    service_time: float


@dataclass(frozen=True)
class RawSolomon:
    name: str
    vehicle_count: int
    vehicle_capacity: float
    nodes: tuple  # SolomonNode, nodes[0] is the depot

    @property
    def depot(self) -> SolomonNode:
        return self.nodes[0]

    @property
    def customers(self) -> tuple:
        return self.nodes[1:]

    def head(self, n_customers: int) -> "RawSolomon":
        """The first ``n_customers`` customers, as in the 25/50-customer Solomon sets."""
        return replace(self, nodes=self.nodes[: n_customers + 1])


def _numbers(line: str, lineno: int, count: int | None = None) -> list:
    parts = line.split()
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise ParseError(f"non-numeric field in {line.strip()!r}", lineno) from None
    if count is not None and len(values) != count:
        raise ParseError(f"expected {count} fields, got {len(values)}", lineno)
    return values


def parse_solomon(text: str) -> RawSolomon:
    lines = text.splitlines()
    numbered = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip()]
    if not numbered:
        raise ParseError("empty file")
    name = numbered[0][1].strip()
    upper = [(i, ln.strip().upper()) for i, ln in numbered]

    veh = next((k for k, (_, ln) in enumerate(upper) if ln.startswith("VEHICLE")), None)
    if veh is None:
        raise ParseError("missing VEHICLE section")
    # VEHICLE / NUMBER CAPACITY / values
    if veh + 2 >= len(numbered) or "NUMBER" not in upper[veh + 1][1]:
        raise ParseError("malformed VEHICLE header", numbered[min(veh + 1, len(numbered) - 1)][0])
    lineno, ln = numbered[veh + 2]
    count, capacity = _numbers(ln, lineno, 2)

    cust = next((k for k, (_, ln) in enumerate(upper) if ln.startswith("CUSTOMER")), None)
    if cust is None:
        raise ParseError("missing CUSTOMER section")
    nodes = []
    for lineno, ln in numbered[cust + 1:]:
        head = ln.split()[0]
        if not re.match(r"^[-+0-9.]", head):
            if nodes:
                raise ParseError(f"unexpected text {ln.strip()!r}", lineno)
            continue  # column header line(s)
        v = _numbers(ln, lineno, 7)
        nodes.append(SolomonNode(int(v[0]), *v[1:]))
    if not nodes or nodes[0].id != 0:
        raise ParseError("missing depot (customer number 0)")
    if nodes[0].demand != 0:
        raise ParseError("depot must have zero demand")
    return RawSolomon(name, int(count), capacity, tuple(nodes))


def read_solomon(path) -> RawSolomon:
    with open(path) as fh:
        return parse_solomon(fh.read())


def default_station_ids(raw: RawSolomon, n_stations: int) -> list:
    """Customers at evenly spaced indices ``k * ceil(m / n_stations)``."""
    m = len(raw.customers)
    if n_stations == 0:
        return []
    step = math.ceil(m / n_stations)
    return [raw.customers[k * step].id for k in range(n_stations)]


def convert_to_evrptwd(
    raw: RawSolomon,
    n_stations: int,
    grid_window: tuple = (0.35, 0.65),
    station_ids=None,
    battery: float | None = None,
    consumption_rate: float = 1.0,
    discharge_rate: float = 1.0,
    speed: float = 1.0,
    weights: CostWeights = DEFAULT_WEIGHTS,
    fleet_size: int | None = None,
    absolute_window: bool = False,
) -> Instance:
    """Turn some customers into discharging stations.

    ``grid_window`` is a pair of horizon fractions unless ``absolute_window``.
    The battery defaults to the vehicle capacity; the depot due date becomes
    the horizon.
    """
    m = len(raw.customers)
    if n_stations < 0 or n_stations >= m:
        raise ValueError(f"n_stations must be in [0, {m - 1}], got {n_stations}")
    if station_ids is None:
        station_ids = default_station_ids(raw, n_stations)
    station_ids = list(station_ids)
    if len(station_ids) != n_stations or len(set(station_ids)) != n_stations:
        raise ValueError("station_ids must list n_stations distinct customers")
    horizon = raw.depot.due_date
    g1, g2 = grid_window if absolute_window else (grid_window[0] * horizon, grid_window[1] * horizon)
    chosen = set(station_ids)
    unknown = chosen - {c.id for c in raw.customers}
    if unknown:
        raise ValueError(f"station ids not among customers: {sorted(unknown)}")
    customers = [
        Customer(c.id, c.x, c.y, c.demand, c.service_time, c.ready_time, c.due_date)
        for c in raw.customers if c.id not in chosen
    ]
    stations = [Station(c.id, c.x, c.y, g1, g2) for c in raw.customers if c.id in chosen]
    d = raw.depot
    return Instance(
        depot=Depot(d.id, d.x, d.y),
        customers=customers,
        stations=stations,
        fleet_size=fleet_size or raw.vehicle_count,
        capacity=raw.vehicle_capacity,
        battery=raw.vehicle_capacity if battery is None else battery,
        consumption_rate=consumption_rate,
        discharge_rate=discharge_rate,
        speed=speed,
        weights=weights,
        horizon=horizon,
        name=f"{raw.name}",
    )


@dataclass(frozen=True)
class GenParams:
    n_customers: int = 20
    n_stations: int = 5
    n_vehicles: int = 4
    coord_range: tuple = (-100.0, 100.0)
    depot_range: tuple = (-25.0, 25.0)
    demand_scale: float = 0.1
    demand_param: str = "rate"  # "rate": mean 1/demand_scale; "scale": mean demand_scale
    capacity: float = 200.0
    battery: float = 200.0
    speed: float = 1.0
    consumption_rate: float = 1.0
    discharge_rate: float = 1.0
    window_open_range: tuple = (0.0, 200.0)
    width_mean: float = 35.0
    width_std: float = 5.0
    width_min: float = 1.0
    service_time: float = 0.0
    horizon: float = 500.0
    grid_window: tuple = (0.35, 0.65)  # fractions of the horizon
    weights: CostWeights = field(default=DEFAULT_WEIGHTS)

    def __post_init__(self):
        for name in ("coord_range", "depot_range", "window_open_range", "grid_window"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name} must be ordered, got {(lo, hi)}")
        if self.n_customers < 0 or self.n_stations < 0 or self.n_vehicles < 1:
            raise ValueError("counts must be nonnegative (vehicles positive)")
        if self.demand_param not in ("rate", "scale"):
            raise ValueError("demand_param must be 'rate' or 'scale'")
        if self.width_min <= 0 or self.demand_scale <= 0:
            raise ValueError("width_min and demand_scale must be positive")

    @property
    def demand_mean(self) -> float:
        return 1.0 / self.demand_scale if self.demand_param == "rate" else self.demand_scale


def generate_instance(params: GenParams = GenParams(), seed=None) -> Instance:
    """Random training/testing instance; deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    p = params
    dx, dy = rng.uniform(*p.depot_range, size=2)
    cxy = rng.uniform(*p.coord_range, size=(p.n_customers, 2))
    sxy = rng.uniform(*p.coord_range, size=(p.n_stations, 2))
    demand = rng.exponential(p.demand_mean, size=p.n_customers)
    while np.any(demand <= 0):  # exponential draws can be exactly zero
        bad = demand <= 0
        demand[bad] = rng.exponential(p.demand_mean, size=int(bad.sum()))
    opens = rng.uniform(*p.window_open_range, size=p.n_customers)
    widths = np.maximum(rng.normal(p.width_mean, p.width_std, size=p.n_customers), p.width_min)
    closes = np.minimum(opens + widths, p.horizon)
    opens = np.minimum(opens, closes)
    g1, g2 = p.grid_window[0] * p.horizon, p.grid_window[1] * p.horizon
    customers = [
        Customer(i + 1, float(cxy[i, 0]), float(cxy[i, 1]), float(demand[i]), p.service_time,
                 float(opens[i]), float(closes[i]))
        for i in range(p.n_customers)
    ]
    stations = [
        Station(p.n_customers + 1 + j, float(sxy[j, 0]), float(sxy[j, 1]), g1, g2)
        for j in range(p.n_stations)
    ]
    return Instance(
        depot=Depot(0, float(dx), float(dy)),
        customers=customers,
        stations=stations,
        fleet_size=p.n_vehicles,
        capacity=p.capacity,
        battery=p.battery,
        consumption_rate=p.consumption_rate,
        discharge_rate=p.discharge_rate,
        speed=p.speed,
        weights=p.weights,
        horizon=p.horizon,
        name=f"gen-{seed}" if seed is not None else "gen",
    )


def synthetic_solomon(kind: str = "C1", n_customers: int = 25, seed=0) -> str:
    """Solomon-format text for a synthetic instance of the given class.

    ``kind`` is one of C1, C2, R1, R2, RC1, RC2: clustered, random or mixed
    layouts on a 100x100 grid, with short (type 1) or long (type 2)
    horizons.  Windows are built around a feasible direct-trip arrival so
    every customer is servable on its own.
    """
    if kind not in ("C1", "C2", "R1", "R2", "RC1", "RC2"):
        raise ValueError(f"unknown Solomon class {kind!r}")
    rng = np.random.default_rng(seed)
    depot = (40.0, 50.0) if kind.startswith("C") and not kind.startswith("RC") else (35.0, 35.0)
    long_horizon = kind.endswith("2")
    if kind.startswith("RC"):
        horizon = 960.0 if long_horizon else 240.0
    elif kind.startswith("C"):
        horizon = 3390.0 if long_horizon else 1236.0
    else:
        horizon = 1000.0 if long_horizon else 230.0
    service = 90.0 if kind.startswith("C") and not kind.startswith("RC") else 10.0
    capacity = {"C1": 200.0, "C2": 700.0, "R1": 200.0, "R2": 1000.0, "RC1": 200.0, "RC2": 1000.0}[kind]
    vehicles = 25

    def clustered(n):
        centres = rng.uniform(10, 90, size=(max(1, n // 8), 2))
        pick = rng.integers(0, len(centres), size=n)
        return np.clip(centres[pick] + rng.normal(0, 4, size=(n, 2)), 0, 100)

    if kind.startswith("RC"):
        half = n_customers // 2
        xy = np.vstack([clustered(half), rng.uniform(0, 100, size=(n_customers - half, 2))])
    elif kind.startswith("C"):
        xy = clustered(n_customers)
    else:
        xy = rng.uniform(0, 100, size=(n_customers, 2))
    xy = np.round(xy)
    demand = rng.integers(1, 5, size=n_customers) * 10
    rows = [(0, depot[0], depot[1], 0, 0, horizon, 0)]
    for i in range(n_customers):
        x, y = xy[i]
        d = math.hypot(x - depot[0], y - depot[1])
        latest = horizon - service - d
        centre = rng.uniform(d, max(d, latest))
        half_width = rng.uniform(15, 45) if not long_horizon else rng.uniform(60, 200)
        ready = max(0.0, math.floor(centre - half_width))
        due = min(math.floor(latest), math.ceil(centre + half_width))
        due = max(due, math.ceil(d))
        ready = min(ready, due)
        rows.append((i + 1, x, y, int(demand[i]), ready, due, service))
    lines = [f"{kind}{seed:02d}", "", "VEHICLE", "NUMBER     CAPACITY", f"  {vehicles}         {int(capacity)}",
             "", "CUSTOMER",
             "CUST NO.  XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE   TIME", ""]
    for r in rows:
        lines.append("{:5d} {:10.0f} {:10.0f} {:10d} {:10.0f} {:10.0f} {:10.0f}".format(
            r[0], r[1], r[2], int(r[3]), r[4], r[5], r[6]))
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    return repr(float(v))


def write_instance(instance: Instance, header: str = "") -> str:
    out = []
    for ln in header.splitlines():
        out.append(f"# {ln}".rstrip())
    if instance.name:
        out.append(f"NAME {instance.name}")
    d = instance.depot
    out += ["DEPOT", f"{d.id} {_fmt(d.x)} {_fmt(d.y)}"]
    out += [
        "VEHICLE",
        "# fleet_size capacity battery consumption_rate discharge_rate speed horizon",
        " ".join([str(instance.fleet_size)] + [_fmt(v) for v in (
            instance.capacity, instance.battery, instance.consumption_rate,
            instance.discharge_rate, instance.speed, instance.horizon)]),
        "CUSTOMERS",
        "# id x y demand service_time window_open window_close",
    ]
    for c in instance.customers:
        out.append(" ".join([str(c.id)] + [_fmt(v) for v in (
            c.x, c.y, c.demand, c.service_time, c.window_open, c.window_close)]))
    out += ["STATIONS", "# id x y grid_start grid_stop"]
    for s in instance.stations:
        out.append(" ".join([str(s.id)] + [_fmt(v) for v in (s.x, s.y, s.grid_start, s.grid_stop)]))
    w = instance.weights
    out += ["WEIGHTS", "# y1 y2 y3", f"{_fmt(w.y1)} {_fmt(w.y2)} {_fmt(w.y3)}"]
    return "\n".join(out) + "\n"


_SECTIONS = ("DEPOT", "VEHICLE", "CUSTOMERS", "STATIONS", "WEIGHTS")


def read_instance(text: str) -> Instance:
    name = ""
    section = None
    records = {s: [] for s in _SECTIONS}
    for lineno, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split()[0].upper()
        if head == "NAME":
            name = line[4:].strip()
            continue
        if head in _SECTIONS and len(line.split()) == 1:
            section = head
            continue
        if section is None:
            raise ParseError(f"record outside any section: {line!r}", lineno)
        records[section].append((lineno, line))

    def one(sec, count):
        rows = records[sec]
        if len(rows) != 1:
            raise ParseError(f"{sec} section needs exactly one record, found {len(rows)}",
                             rows[1][0] if len(rows) > 1 else None)
        return rows[0][0], _numbers(rows[0][1], rows[0][0], count)

    def make(cls, lineno, *args):
        try:
            return cls(*args)
        except InstanceError as exc:
            raise ParseError(str(exc), lineno) from None

    lineno, dv = one("DEPOT", 3)
    if dv[0] != int(dv[0]):
        raise ParseError("node id must be an integer", lineno)
    depot = Depot(int(dv[0]), dv[1], dv[2])
    vline, vv = one("VEHICLE", 7)
    customers = []
    for lineno, ln in records["CUSTOMERS"]:
        v = _numbers(ln, lineno, 7)
        customers.append(make(Customer, lineno, int(v[0]), *v[1:]))
    stations = []
    for lineno, ln in records["STATIONS"]:
        v = _numbers(ln, lineno, 5)
        stations.append(make(Station, lineno, int(v[0]), *v[1:]))
    if records["WEIGHTS"]:
        lineno, wv = one("WEIGHTS", 3)
        weights = make(CostWeights, lineno, *wv)
    else:
        weights = DEFAULT_WEIGHTS
    try:
        return Instance(
            depot=depot, customers=customers, stations=stations,
            fleet_size=int(vv[0]), capacity=vv[1], battery=vv[2],
            consumption_rate=vv[3], discharge_rate=vv[4], speed=vv[5],
            weights=weights, horizon=vv[6], name=name,
        )
    except InstanceError as exc:
        raise ParseError(str(exc), vline) from None


def load_instance(path) -> Instance:
    with open(path) as fh:
        return read_instance(fh.read())
