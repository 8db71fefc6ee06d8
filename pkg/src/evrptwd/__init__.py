"""Capacitated electric vehicle routing with time windows and vehicle-to-grid discharging."""
from .core import (
    DEFAULT_WEIGHTS, CostWeights, Customer, Depot, InfeasibleError, Instance, InstanceError,
    Metrics, Route, Schedule, Solution, Station, Violation, check_solution, evaluate_cost,
    make_solution, optimize_discharge, simulate_route, travel,
)
from .dataio import (
    GenParams, ParseError, RawSolomon, convert_to_evrptwd, generate_instance, parse_solomon,
    read_instance, write_instance,
)
from .insertion import improve_insertion

__version__ = "0.1.0"
