"""
One vehicle, one station
========================

Build a hand-made instance, follow a single route through it and let the
discharge planner decide how long to sell energy at the station.
"""
from evrptwd import Customer, Depot, Instance, Route, Station, make_solution, optimize_discharge, simulate_route

# Depot at the origin, two customers east of it, a station in between.
# The station's grid window runs from t=20 to t=120.
inst = Instance(
    depot=Depot(0, 0.0, 0.0),
    customers=[Customer(1, 30, 10, demand=5, service_time=5, window_open=40, window_close=90),
               Customer(2, -20, 5, demand=8, service_time=0, window_open=100, window_close=160)],
    stations=[Station(3, 15, 5, grid_start=20, grid_stop=120)],
    fleet_size=1, capacity=50, battery=120, horizon=300,
)

# Without discharging, the route just drives and waits for windows.
plain = simulate_route(inst, Route.from_nodes([1, 3, 2]))
print("arrivals      ", [round(a, 1) for a in plain.arrival])
print("waits         ", [round(w, 1) for w in plain.wait])
print("SoC on arrival", [round(s, 1) for s in plain.soc_on_arrival])

# The planner stretches the station stop as far as energy, the grid window
# and the next customer's window allow.
route = optimize_discharge(inst, [1, 3, 2])
print("discharge at station 3:", round(route.gammas[1], 2))

# Cost drops by y3 per unit of discharge time.
before = make_solution(inst, [Route.from_nodes([1, 3, 2])]).cost
after = make_solution(inst, [route]).cost
print(f"cost {before:.2f} -> {after:.2f}")
