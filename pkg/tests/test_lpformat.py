import re

import pytest

from evrptwd.exact import solve_exact
from evrptwd.lpformat import export_milp

from conftest import line_instance, tiny_instances
from lp_reader import solve_lp_text

FAMILIES = ("visit_", "flow_", "fleet", "time_cust_", "time_stat_", "soc_cust_", "soc_stat_", "load_",
            "grid_start_", "grid_stop_", "gamma_cap_")


def test_export_lists_families_and_binaries():
    inst = max(tiny_instances(20), key=lambda i: len(i.customers) + len(i.stations))
    text = export_milp(inst)
    assert text.startswith("\\")
    for fam in FAMILIES:
        assert re.search(rf"^ {fam}\S*:", text, re.M), fam
    assert "Binaries" in text and text.rstrip().endswith("End")


def test_export_is_deterministic():
    inst = tiny_instances(3)[2]
    assert export_milp(inst) == export_milp(inst)


@pytest.mark.parametrize("inst", tiny_instances(12, seed=5), ids=lambda i: i.name)
def test_milp_optimum_equals_branch_and_bound(inst):
    res, _ = solve_lp_text(export_milp(inst))
    assert res.success
    assert res.fun == pytest.approx(solve_exact(inst).solution.cost, abs=1e-4)


def test_milp_with_station():
    inst = line_instance([(20, 0, 1, 0, 0, 500)], [(10, 0, 0, 500)], battery=300)
    res, _ = solve_lp_text(export_milp(inst))
    assert res.fun == pytest.approx(solve_exact(inst).solution.cost, abs=1e-4)
