import pytest

from evrptwd import CostWeights, GenParams, InfeasibleError, Route, check_solution, generate_instance, make_solution
from evrptwd.exact import SearchLimits, enumerate_all, solve_exact

from conftest import TINY, line_instance, tiny_instances


def feasible_tiny(count, seed=0):
    out = []
    for inst in tiny_instances(count, seed):
        try:
            enumerate_all(inst)
        except InfeasibleError:
            continue
        out.append(inst)
    return out


@pytest.mark.parametrize("inst", tiny_instances(40), ids=lambda i: i.name)
def test_branch_and_bound_matches_enumeration(inst):
    res = solve_exact(inst)
    assert res.proven_optimal
    assert check_solution(inst, res.solution.routes) == []
    assert res.solution.cost == pytest.approx(enumerate_all(inst).cost, abs=1e-9)


def test_bound_does_not_change_optimum():
    for inst in feasible_tiny(15, seed=3):
        assert solve_exact(inst).solution.cost == pytest.approx(solve_exact(inst, use_bound=False).solution.cost, abs=1e-9)


def test_two_far_customers_need_two_routes_when_capacity_binds():
    inst = line_instance([(10, 0, 60, 0, 0, 500), (-10, 0, 60, 0, 0, 500)], fleet=2)
    sol = solve_exact(inst).solution
    assert len(sol.routes) == 2


def test_profitable_station_is_used():
    # a station on the way with a wide grid window pays back its detour
    inst = line_instance([(20, 0, 1, 0, 0, 500)], [(10, 0, 0, 500)], battery=300)
    sol = solve_exact(inst).solution
    assert sol.routes[0].nodes == (2, 1) or sol.routes[0].nodes == (1, 2)
    no_station = make_solution(inst, [Route.from_nodes([1])])
    assert sol.cost < no_station.cost


def test_cheap_vehicles_are_traded_against_distance():
    # with a vehicle costing less than the detours it saves, more routes win
    w = CostWeights(1.0, 5.0, 0.2478)
    for seed in range(30):
        p = GenParams(n_customers=4, n_stations=1, weights=w, **TINY)
        inst = generate_instance(p, seed=seed)
        try:
            best = enumerate_all(inst)
        except InfeasibleError:
            continue
        assert solve_exact(inst).solution.cost == pytest.approx(best.cost, abs=1e-9)


def test_infeasible_instance_raises():
    inst = line_instance([(10, 0, 60, 0, 0, 500), (-10, 0, 60, 0, 0, 500)], fleet=1)
    with pytest.raises(InfeasibleError):
        solve_exact(inst)


def test_node_budget_stops_search():
    inst = max(feasible_tiny(30), key=lambda i: len(i.customers) + len(i.stations))
    full = solve_exact(inst)
    with pytest.raises(InfeasibleError):
        solve_exact(inst, SearchLimits(max_nodes_expanded=1))
    budget = full.nodes_expanded // 2
    res = solve_exact(inst, SearchLimits(max_nodes_expanded=budget))
    assert not res.proven_optimal
    assert res.nodes_expanded == budget + 1
    assert res.solution.cost >= full.solution.cost - 1e-9
    assert res.bound_at_exit <= full.solution.cost + 1e-9


def test_limits_validate():
    with pytest.raises(ValueError):
        SearchLimits(max_nodes_expanded=0)
