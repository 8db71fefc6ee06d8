"""Assignment masks: may a vehicle in a given state go to a node next?

A vehicle state is ``(position, ready_time, soc, load)`` where
``ready_time`` is when it can leave ``position`` and ``load`` is the cargo
it still carries room for.  A pair is infeasible when

* the node is a customer whose demand is nil (already served) or exceeds
  the remaining load;
* the node is a customer and the SoC cannot cover the leg there plus the
  direct return to the depot;
* the earliest service start misses the customer window or the station
  grid window, or the direct return would miss the horizon;
* the node is a station and the SoC cannot cover both legs plus some
  positive discharge inside the grid window.

Every rule keeps a direct return to the depot possible, so executing an
unmasked pair never leaves the vehicle stranded.
"""
from __future__ import annotations

from .core import CUSTOMER, STATION, TOL, GAMMA_EPS, Instance


def customer_arrival(instance: Instance, pos: int, ready: float, soc: float, load: float, node: int):
    """Departure state after serving ``node`` or None if masked."""
    tab = instance.tables
    if tab.demand[node] > load + TOL:
        return None
    d = tab.dist[pos][node]
    back = tab.dist[node][instance.depot.id]
    H = instance.consumption_rate
    if soc + TOL < H * (d + back):
        return None
    arrival = ready + d / instance.speed
    start = max(arrival, tab.open[node])
    if start > tab.close[node] + TOL:
        return None
    dep = start + tab.service[node]
    if dep + back / instance.speed > instance.horizon + TOL:
        return None
    return node, dep, soc - H * d, load - tab.demand[node], arrival, start


def station_arrival(instance: Instance, pos: int, ready: float, soc: float, node: int):
    """``(arrival, service_start, soc_on_arrival, max_discharge)`` or None if masked."""
    tab = instance.tables
    d = tab.dist[pos][node]
    back = tab.dist[node][instance.depot.id]
    H = instance.consumption_rate
    arrival = ready + d / instance.speed
    start = max(arrival, tab.open[node])
    soc_arr = soc - H * d
    by_energy = (soc_arr - H * back) / instance.discharge_rate
    by_time = min(tab.close[node] - start, instance.horizon - start - back / instance.speed)
    cap = min(by_energy, by_time)
    if cap <= GAMMA_EPS:
        return None
    return arrival, start, soc_arr, cap


def can_visit(instance: Instance, pos: int, ready: float, soc: float, load: float, node: int):
    """Mask check with zero discharge at stations.

    Returns ``(ok, (node, departure, soc, load))``.
    """
    kind = instance.tables.kind[node]
    if kind == CUSTOMER:
        out = customer_arrival(instance, pos, ready, soc, load, node)
        if out is None:
            return False, None
        return True, out[:4]
    if kind == STATION:
        out = station_arrival(instance, pos, ready, soc, node)
        if out is None:
            return False, None
        _, start, soc_arr, _ = out
        return True, (node, start, soc_arr, load)
    return False, None
