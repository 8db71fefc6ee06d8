"""Export the full mixed-integer model of an instance in CPLEX LP format."""
from __future__ import annotations

from .core import Instance

_HEADER = """\\ CEVRPTW-D mixed-integer model of instance {name!r}
\\ Variables:
\\   a_i_j      binary, 1 if some vehicle drives from node i to node j
\\   tau_i      service start at node i (time); tau_{depot} = 0
\\   theta_i    state of charge on arrival at node i; theta_{depot} = battery
\\   lambda_i   cargo carried on arrival at node i; lambda_{depot} = capacity
\\   gamma_i    discharge duration at station i
\\ Node ids: depot {depot}; customers {customers}; stations {stations}
\\ Arcs entering the depot compare against terminal bounds instead of the
\\ depot variables: service start + leg <= horizon, SoC after leg >= 0,
\\ cargo after delivery >= 0.
\\ The SoC rule for arcs leaving a station contains gamma_i * a_i_j.  It is
\\ written with -R gamma_i in place of the product: a visited station has
\\ one outgoing arc that already enforces theta_i - R gamma_i >= H d_ij, so
\\ for the other arcs the relaxed row stays slack; an unvisited station has
\\ gamma_i = 0 through gamma_cap_i: gamma_i <= (G2_i - G1_i) * sum_j a_i_j.
\\ Station visits: visited stations satisfy G1_i <= tau_i and
\\ tau_i + gamma_i <= G2_i; big-M constants are the horizon, battery and
\\ capacity.
"""


def _num(v: float) -> str:
    v = float(v)
    if v == 0:
        return "0"
    return repr(v)


def _expr(terms) -> str:
    """Render ``[(coef, var), ...]`` as an LP expression, wrapped every few terms."""
    parts = []
    for i, (coef, var) in enumerate(terms):
        if coef == 0:
            continue
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = var if mag == 1 else f"{_num(mag)} {var}"
        if not parts and sign == "+":
            parts.append(body)
        else:
            parts.append(f"{sign} {body}")
    if not parts:
        return "0 dummy_zero"
    lines = []
    for i in range(0, len(parts), 6):
        lines.append(" ".join(parts[i:i + 6]))
    return "\n   ".join(lines)


def export_milp(instance: Instance) -> str:
    """LP text with objective, every constraint family, bounds and binaries.

    Constraint names start with their family: ``visit_`` (each customer
    left exactly once), ``flow_``, ``fleet``, ``station_once_``,
    ``time_cust_``, ``time_stat_``, ``time_depot_``, ``soc_cust_``,
    ``soc_stat_``, ``soc_depot_``, ``load_``, ``grid_start_``,
    ``grid_stop_``, ``gamma_cap_``.
    """
    inst = instance
    tab = inst.tables
    dist = tab.dist
    depot = inst.depot.id
    K = list(inst.customer_ids)
    P = list(inst.station_ids)
    V = [depot] + K + P
    H, R, speed = inst.consumption_rate, inst.discharge_rate, inst.speed
    l0, Q, C = inst.horizon, inst.battery, inst.capacity
    w = inst.weights

    def a(i, j):
        return f"a_{i}_{j}"

    arcs = [(i, j) for i in V for j in V if i != j]
    out = [_HEADER.format(name=inst.name, depot=depot, customers=K, stations=P)]

    obj = []
    for i, j in arcs:
        coef = w.y1 * dist[i][j] + (w.y2 if i == depot else 0.0)
        obj.append((coef, a(i, j)))
    for i in P:
        obj.append((-w.y3, f"gamma_{i}"))
    out.append("Minimize")
    out.append(" obj: " + _expr(obj))
    out.append("Subject To")

    rows = []

    def row(name, terms, sense, rhs):
        rows.append(f" {name}: {_expr(terms)} {sense} {_num(rhs)}")

    for i in K:
        row(f"visit_{i}", [(1, a(i, j)) for j in V if j != i], "=", 1)
    for i in V:
        row(f"flow_{i}", [(1, a(i, j)) for j in V if j != i] + [(-1, a(j, i)) for j in V if j != i], "=", 0)
    row("fleet", [(1, a(depot, j)) for j in V if j != depot], "<=", inst.fleet_size)
    for i in P:
        row(f"station_once_{i}", [(1, a(i, j)) for j in V if j != i], "<=", 1)

    # time: tau_i + (t_ij + s_i) a_ij - l0 (1 - a_ij) <= tau_j
    for i in [depot] + K + P:
        for j in V:
            if i == j:
                continue
            t = dist[i][j] / speed
            s = tab.service[i]
            if i == depot and j == depot:
                continue
            if j == depot:
                terms = [(1, f"tau_{i}"), (t + s + l0, a(i, j))]
                if i in P:
                    terms.append((1, f"gamma_{i}"))
                row(f"time_depot_{i}", terms, "<=", 2 * l0)
                continue
            if i == depot:
                row(f"time_depot_out_{j}", [(t + l0, a(i, j)), (-1, f"tau_{j}")], "<=", l0)
            elif i in K:
                row(f"time_cust_{i}_{j}", [(1, f"tau_{i}"), (t + s + l0, a(i, j)), (-1, f"tau_{j}")], "<=", l0)
            else:
                row(f"time_stat_{i}_{j}", [(1, f"tau_{i}"), (1, f"gamma_{i}"), (t + l0, a(i, j)),
                                           (-1, f"tau_{j}")], "<=", l0)

    # SoC: theta_j <= theta_i - H d_ij a_ij (- R gamma_i at stations) + Q (1 - a_ij)
    for i in V:
        for j in V:
            if i == j:
                continue
            e = H * dist[i][j]
            if j == depot:
                terms = [(-1, f"theta_{i}"), (e + Q, a(i, j))]
                if i in P:
                    terms.append((R, f"gamma_{i}"))
                row(f"soc_depot_{i}", terms, "<=", Q)
                continue
            if i == depot:
                row(f"soc_depot_out_{j}", [(1, f"theta_{j}"), (e + Q, a(i, j))], "<=", 2 * Q)
            elif i in K:
                row(f"soc_cust_{i}_{j}", [(1, f"theta_{j}"), (-1, f"theta_{i}"), (e + Q, a(i, j))], "<=", Q)
            else:
                row(f"soc_stat_{i}_{j}", [(1, f"theta_{j}"), (-1, f"theta_{i}"), (e + Q, a(i, j)),
                                          (R, f"gamma_{i}")], "<=", Q)

    # load: lambda_j <= lambda_i - c_i a_ij + C (1 - a_ij)
    for i in V:
        for j in V:
            if i == j:
                continue
            c = tab.demand[i]
            if j == depot:
                if i in K:
                    row(f"load_{i}_{j}", [(-1, f"lambda_{i}"), (c + C, a(i, j))], "<=", C)
                continue
            if i == depot:
                row(f"load_{i}_{j}", [(1, f"lambda_{j}"), (C, a(i, j))], "<=", 2 * C)
            else:
                row(f"load_{i}_{j}", [(1, f"lambda_{j}"), (-1, f"lambda_{i}"), (c + C, a(i, j))], "<=", C)

    for i in P:
        g1, g2 = tab.open[i], tab.close[i]
        out_arcs = [a(i, j) for j in V if j != i]
        row(f"grid_start_{i}", [(1, f"tau_{i}")] + [(-g1, x) for x in out_arcs], ">=", 0)
        row(f"grid_stop_{i}", [(1, f"tau_{i}"), (1, f"gamma_{i}")] + [(l0, x) for x in out_arcs], "<=", g2 + l0)
        row(f"gamma_cap_{i}", [(1, f"gamma_{i}")] + [(-(g2 - g1), x) for x in out_arcs], "<=", 0)

    out += rows
    out.append("Bounds")
    out.append(f" tau_{depot} = 0")
    out.append(f" theta_{depot} = {_num(Q)}")
    out.append(f" lambda_{depot} = {_num(C)}")
    for i in K:
        out.append(f" {_num(tab.open[i])} <= tau_{i} <= {_num(tab.close[i])}")
    for i in P:
        out.append(f" 0 <= tau_{i} <= {_num(l0)}")
    for i in K + P:
        out.append(f" 0 <= theta_{i} <= {_num(Q)}")
        out.append(f" 0 <= lambda_{i} <= {_num(C)}")
    for i in P:
        out.append(f" 0 <= gamma_{i} <= {_num(tab.close[i] - tab.open[i])}")
    out.append("Binaries")
    names = [a(i, j) for i, j in arcs]
    for k in range(0, len(names), 8):
        out.append(" " + " ".join(names[k:k + 8]))
    out.append("End")
    return "\n".join(out) + "\n"
