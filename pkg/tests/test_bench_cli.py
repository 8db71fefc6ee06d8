import io
import json

import pytest

from evrptwd import GenParams, generate_instance, read_instance, write_instance
from evrptwd.bench import (
    ReportRow, compare, cost_gap, packaged_table, parse_config, read_report, report_csv, text_table, verify_rows,
)
from evrptwd.cli import main
from evrptwd.dataio import synthetic_solomon
from evrptwd.exact import enumerate_all
from evrptwd.rl import greedy_cost, load_checkpoint


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def solomon(tmp_path):
    path = tmp_path / "C101.txt"
    path.write_text(synthetic_solomon("C1", 25, seed=0))
    return path


@pytest.fixture
def toy(tmp_path):
    p = GenParams(n_customers=3, n_stations=1, n_vehicles=2, coord_range=(-30, 30), width_mean=200,
                  window_open_range=(0, 50), horizon=400)
    inst = generate_instance(p, seed=4)
    path = tmp_path / "toy.txt"
    path.write_text(write_instance(inst))
    return inst, path


def test_convert_three_stations(solomon, tmp_path):
    out = tmp_path / "c.txt"
    code, _, _ = run("convert", str(solomon), "--stations", "3", "--out", str(out))
    assert code == 0
    text = out.read_text()
    assert "stations 3 customers 22" in text
    inst = read_instance(text)
    assert len(inst.customers) == 22 and len(inst.stations) == 3


def test_convert_zero_stations_to_stdout(solomon):
    code, text, _ = run("convert", str(solomon), "--stations", "0")
    assert code == 0 and "stations 0 customers 25" in text


def test_convert_missing_file(tmp_path):
    code, _, err = run("convert", str(tmp_path / "nope.txt"), "--stations", "1")
    assert code == 2 and "nope.txt" in err


def test_run_exact_matches_enumeration(toy):
    inst, path = toy
    code, text, _ = run("run", "--method", "exact", str(path))
    assert code == 0
    (row,) = read_report(text)
    assert row.cost == pytest.approx(enumerate_all(inst).cost, abs=1e-9)
    assert (row.nC, row.nS, row.method) == (3, 1, "exact")


def test_run_ga_is_seed_deterministic(toy, tmp_path):
    _, path = toy
    cfg = tmp_path / "small.cfg"
    cfg.write_text("ga.population_size = 10\nga.stagnation_limit = 5\n")
    a = run("run", "--method", "ga", "--seed", "3", "--config", str(cfg), str(path))[1]
    b = run("--seed", "3", "--config", str(cfg), "run", "--method", "ga", str(path))[1]
    strip = lambda t: [r.__class__(**{**r.__dict__, "t": None}) for r in read_report(t)]
    assert strip(a) == strip(b)


def test_run_usage_errors(toy, tmp_path):
    _, path = toy
    assert run("run", "--method", "rl", str(path))[0] == 2
    assert run("run", "--method", "exact", str(tmp_path / "missing.txt"))[0] == 2
    assert run("run", "--method", "simplex", str(path))[0] == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("ga.colour = blue\n")
    assert run("run", "--method", "ga", "--config", str(bad), str(path))[0] == 2


def test_run_infeasible_instance_exits_one(tmp_path):
    from conftest import line_instance
    path = tmp_path / "late.txt"
    path.write_text(write_instance(line_instance([(10, 0, 5, 0, 0, 5)])))
    code, text, err = run("run", "--method", "exact", str(path))
    assert code == 1 and "infeasible" in err
    (row,) = read_report(text)
    assert not row.feasible


def test_train_and_checkpoint_reproduce_final_cost(tmp_path):
    cfg = tmp_path / "quick.cfg"
    cfg.write_text("gen.n_customers = 6\ngen.n_stations = 2\ngen.n_vehicles = 2\nrl.epsilon_episodes = 4\n")
    ckpt = tmp_path / "net.json"
    code, text, _ = run("train", "--episodes", "8", "--config", str(cfg), "--out", str(ckpt))
    assert code == 0 and "fulfilment" in text
    curve = (tmp_path / "net_curve.csv").read_text().splitlines()
    assert len(curve) == 1 + 8
    net, meta = load_checkpoint(ckpt)
    gen = GenParams(n_customers=6, n_stations=2, n_vehicles=2)
    assert greedy_cost(net, generate_instance(gen, seed=meta["final_instance_seed"])) == meta["final_cost"]
    assert json.loads(ckpt.read_text())["layer_sizes"] == [5, 12, 6, 3, 1]


def test_train_needs_out():
    assert run("train", "--episodes", "1")[0] == 2


def row(name, cost, t=1.0, method="ga"):
    return ReportRow(name, 22, 3, method, 0.0, 0.0, 0.0, t, cost)


def test_gap_arithmetic():
    assert cost_gap(100, 120) == pytest.approx(20.0)
    assert cost_gap(268.43, 291.99) == pytest.approx(8.777, abs=1e-3)
    assert cost_gap(-50, -40) == pytest.approx(20.0)


def test_compare_identical_and_mismatched():
    rows = [row("a", 100.0, 2.0), row("b", 50.0, 4.0)]
    comp, summary = compare(rows, rows)
    assert all(c.gap_pct == 0 and c.time_ratio == 1 for c in comp)
    assert summary == {25: (0.0, 0.0, 1.0, 0.0)}
    with pytest.raises(ValueError):
        compare(rows, rows[:1])


def test_compare_cli_on_table_rows(tmp_path):
    table = read_report(packaged_table("instance_table.csv"))
    ga = [r for r in table if r.dataset == "CL101" and r.method == "ga"]
    rl = [r for r in table if r.dataset == "CL101" and r.method == "rl"]
    (tmp_path / "a.csv").write_text(report_csv(ga))
    (tmp_path / "b.csv").write_text(report_csv(rl))
    code, text, _ = run("compare", str(tmp_path / "a.csv"), str(tmp_path / "b.csv"))
    assert code == 0 and "8.78" in text
    (tmp_path / "c.csv").write_text("not,a,report\n")
    assert run("compare", str(tmp_path / "a.csv"), str(tmp_path / "c.csv"))[0] == 2


def test_report_round_trip_and_table():
    rows = [row("CL101", 268.43), ReportRow("x", 3, 1, "rl", None, None, None, 0.5, None)]
    assert read_report(report_csv(rows)) == rows
    assert "t" in report_csv(rows, include_time=False).splitlines()[0]
    assert read_report(report_csv(rows, include_time=False))[0].t is None
    assert "268.43" in text_table(rows)
    with pytest.raises(ValueError):
        read_report("dataset,nC\n")


def test_verify_tables_bundled_instance_table():
    code, text, _ = run("verify-tables")
    assert code == 0
    assert text.strip().endswith("24/24 rows within 0.02")


def test_family_table_ga_rows_within_rounding():
    rows = [r for r in read_report(packaged_table("family_table.csv")) if r.method == "ga"]
    assert all(ok for _, _, ok in verify_rows(rows, tolerance=1.0))


def test_fabricated_cost_is_flagged(tmp_path):
    rows = read_report(packaged_table("instance_table.csv"))[:3]
    rows[1] = rows[1].__class__(**{**rows[1].__dict__, "cost": rows[1].cost + 5})
    path = tmp_path / "t.csv"
    path.write_text(report_csv(rows))
    code, text, _ = run("verify-tables", str(path))
    assert code == 1 and "FAIL CL101 ga" in text


def test_config_parsing():
    cfg = parse_config("# comment\nga.population_size = 30\nweights.y1 = 0.5\n")
    assert cfg == {"ga": {"population_size": "30"}, "weights": {"y1": "0.5"}}
    for bad in ("nosection = 1", "zz.a = 1", "ga.population_size"):
        with pytest.raises(ValueError):
            parse_config(bad)
