import numpy as np
import pytest

from evrptwd import Customer, Depot, GenParams, Instance, Station, generate_instance

TINY = dict(n_vehicles=2, coord_range=(-40.0, 40.0), depot_range=(-10.0, 10.0),
            window_open_range=(0.0, 150.0), width_mean=60.0, width_std=20.0,
            horizon=300.0, grid_window=(0.2, 0.7))


def tiny_instances(count, seed=0, max_customers=5, max_stations=2):
    """Seeded random instances with 1-5 customers, 0-2 stations and 2 vehicles."""
    rng = np.random.default_rng(seed)
    out = []
    for s in range(count):
        p = GenParams(n_customers=int(rng.integers(1, max_customers + 1)),
                      n_stations=int(rng.integers(0, max_stations + 1)), **TINY)
        out.append(generate_instance(p, seed=s))
    return out


def line_instance(customers, stations=(), fleet=1, capacity=100.0, battery=200.0, horizon=1000.0, **kw):
    """Instance with the depot at the origin.

    ``customers`` items are ``(x, y, demand, service, open, close)``,
    ``stations`` items ``(x, y, g1, g2)``; ids run 1.. in that order.
    """
    cs = [Customer(k + 1, *c) for k, c in enumerate(customers)]
    ss = [Station(len(cs) + k + 1, *s) for k, s in enumerate(stations)]
    return Instance(Depot(0, 0.0, 0.0), cs, ss, fleet, capacity, battery, horizon=horizon, **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
