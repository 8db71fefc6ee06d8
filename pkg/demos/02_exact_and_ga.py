"""
Exact search and the genetic algorithm on a tiny instance
=========================================================

On a handful of customers the branch-and-bound solver proves the optimum,
so the GA can be checked against it.  The same instance is also written
out as an LP model for an external MILP solver.
"""
from evrptwd import GenParams, check_solution, generate_instance
from evrptwd.exact import enumerate_all, solve_exact
from evrptwd.ga import GaConfig, run_ga
from evrptwd.lpformat import export_milp

params = GenParams(n_customers=5, n_stations=2, n_vehicles=2, coord_range=(-40, 40), depot_range=(-10, 10),
                   window_open_range=(0, 150), width_mean=60, width_std=20, horizon=300, grid_window=(0.2, 0.7))
inst = generate_instance(params, seed=8)

res = solve_exact(inst)
print(f"branch-and-bound: cost {res.solution.cost:.4f}, {res.nodes_expanded} nodes, proven={res.proven_optimal}")
for r in res.solution.routes:
    print("   route", r.nodes, "discharge", [round(g, 1) for g in r.gammas])

brute = enumerate_all(inst)
print(f"enumeration:      cost {brute.cost:.4f}")

sol, generations, history = run_ga(inst, GaConfig(seed=0))
print(f"GA:               cost {sol.cost:.4f} after {generations} generations")
print("violations:", check_solution(inst, sol.routes))

# The LP file carries its variable naming scheme in the header comment.
text = export_milp(inst)
print(text.splitlines()[0])
print(len(text.splitlines()), "lines of LP text")
