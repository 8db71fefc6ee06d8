"""
Checking published result rows
==============================

Every row of a results table should satisfy
cost = y1 * d + y2 * v - y3 * ed.  The bundled per-instance table does;
the family averages for the RL method do not.
"""
from evrptwd.bench import cost_gap, packaged_table, read_report, verify_rows

for name in ("instance_table.csv", "family_table.csv"):
    rows = read_report(packaged_table(name))
    checked = verify_rows(rows, tolerance=0.02 if name == "instance_table.csv" else 1.0)
    bad = [(r.dataset, r.method, round(res, 2)) for r, res, ok in checked if not ok]
    print(f"{name}: {len(checked) - len(bad)}/{len(checked)} rows consistent")
    for item in bad[:5]:
        print("   off:", item)

rows = {(r.dataset, r.method): r for r in read_report(packaged_table("instance_table.csv"))}
print(f"CL101 GA -> RL gap {cost_gap(rows['CL101', 'ga'].cost, rows['CL101', 'rl'].cost):.2f}%")
