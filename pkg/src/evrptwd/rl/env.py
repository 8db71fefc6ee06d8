"""Fleet simulation seen by the agent: per-vehicle committed plans, pair
states, masking and rewards.

Every vehicle carries the end state of the work already committed to it:
the node it will be at, when it can leave, its SoC and its remaining
cargo room.  Assigning a pair appends one visit to that plan.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from ..core import CUSTOMER, STATION, Instance
from ..masking import customer_arrival, station_arrival


@dataclass(frozen=True)
class RewardWeights:
    a1: float = 0.15
    a2: float = 0.001
    a3: float = 0.15
    a4: float = 0.15
    a5: float = 0.55

    def __post_init__(self):
        if min(self.a1, self.a2, self.a3, self.a4, self.a5) < 0:
            raise ValueError("reward weights must be nonnegative")


@dataclass(frozen=True)
class RlState:
    b_norm: float
    z_norm: float
    i_depo: int
    i_cust: int
    w_norm: float

    def as_array(self) -> np.ndarray:
        return np.array([self.b_norm, self.z_norm, self.i_depo, self.i_cust, self.w_norm])


@dataclass
class Vehicle:
    position: int
    ready: float
    soc: float
    load: float
    visits: list
    retired: bool = False


class FleetEnv:
    def __init__(self, instance: Instance):
        self.instance = instance
        depot = instance.depot.id
        self.vehicles = [Vehicle(depot, 0.0, instance.battery, instance.capacity, [])
                         for _ in range(instance.fleet_size)]
        self.remaining = {c.id: c.demand for c in instance.customers}
        self.visited_station = {s.id: False for s in instance.stations}
        self.clock = 0.0
        self.energy_norm = instance.consumption_rate * instance.diagonal or 1.0

    def copy(self) -> "FleetEnv":
        other = copy.copy(self)
        other.vehicles = [copy.copy(v) for v in self.vehicles]
        for v in other.vehicles:
            v.visits = list(v.visits)
        other.remaining = dict(self.remaining)
        other.visited_station = dict(self.visited_station)
        return other

    @property
    def unserved(self) -> list:
        return [c for c, q in self.remaining.items() if q is not None]

    def served_count(self) -> int:
        return sum(1 for q in self.remaining.values() if q is None)

    def active(self) -> list:
        return [u for u, v in enumerate(self.vehicles) if not v.retired]

    def next_trigger(self):
        """Active vehicle that frees up first (lowest id on ties), or None."""
        act = self.active()
        if not act:
            return None
        return min(act, key=lambda u: (self.vehicles[u].ready, u))

    def _outcome(self, u: int, node: int):
        """Arrival details of the pair, or None when masked."""
        v = self.vehicles[u]
        inst = self.instance
        if v.retired or node == v.position:
            return None
        kind = inst.tables.kind[node]
        if kind == CUSTOMER:
            if self.remaining.get(node) is None:
                return None
            out = customer_arrival(inst, v.position, v.ready, v.soc, v.load, node)
            if out is None:
                return None
            _, dep, soc, load, arrival, start = out
            return arrival, start, dep, soc, load, 0.0
        if kind == STATION:
            if self.visited_station[node]:
                return None
            out = station_arrival(inst, v.position, v.ready, v.soc, node)
            if out is None:
                return None
            arrival, start, soc_arr, cap = out
            return arrival, start, start + cap, soc_arr - inst.discharge_rate * cap, v.load, cap
        return None

    def feasible(self, u: int, node: int) -> bool:
        return self._outcome(u, node) is not None

    def feasible_pairs(self) -> list:
        """Unmasked ``(vehicle, node)`` pairs in lexicographic order."""
        nodes = sorted(self.unserved) + sorted(s for s, done in self.visited_station.items() if not done)
        nodes.sort()
        return [(u, n) for u in self.active() for n in nodes if self._outcome(u, n) is not None]

    def build_state(self, u: int, node: int) -> RlState:
        inst = self.instance
        tab = inst.tables
        v = self.vehicles[u]
        d = tab.dist[v.position][node]
        arrival = v.ready + d / inst.speed
        out = self._outcome(u, node)
        gamma = out[5] if out is not None else 0.0
        return RlState(
            b_norm=inst.consumption_rate * d / self.energy_norm,
            z_norm=inst.discharge_rate * gamma / self.energy_norm,
            i_depo=int(v.position == inst.depot.id),
            i_cust=int(tab.kind[node] == CUSTOMER),
            w_norm=max(0.0, tab.open[node] - arrival) / inst.horizon,
        )

    def reward(self, u: int, node: int, weights: RewardWeights = RewardWeights()) -> float:
        s = self.build_state(u, node)
        return (-weights.a1 * s.b_norm + weights.a2 * s.z_norm + weights.a3 * s.i_cust
                - weights.a4 * s.w_norm - weights.a5 * s.i_depo)

    def assign(self, u: int, node: int) -> None:
        """Commit the pair to vehicle ``u``'s plan."""
        out = self._outcome(u, node)
        if out is None:
            raise ValueError(f"pair ({u}, {node}) is masked")
        _, _, dep, soc, load, gamma = out
        v = self.vehicles[u]
        v.position, v.ready, v.soc, v.load = node, dep, soc, load
        v.visits.append((node, gamma))
        if node in self.remaining:
            self.remaining[node] = None
        else:
            self.visited_station[node] = True

    def retire(self, u: int) -> None:
        """Send vehicle ``u`` home; it takes no further work."""
        self.vehicles[u].retired = True

    def routes(self) -> list:
        return [tuple(v.visits) for v in self.vehicles if v.visits]
