"""Genetic algorithm over complete route sets.

A chromosome is a whole solution.  Offspring are built from structure the
two parents share (common arcs or common route memberships), the rest is
filled in by cheapest feasible insertion, then mutated.  Stations are not
inherited: every offspring starts station-free and receives the stations
whose insertion strictly lowers its cost.
"""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from .core import CUSTOMER, InfeasibleError, Instance, Solution, soc_shortfall, with_wall_time
from .insertion import RouteCosts, add_profitable_stations, best_insertion, improve_insertion, insert_or_open

COMMON_NODES = "common_nodes"
COMMON_ARCS = "common_arcs"


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 200
    elite_fraction: float = 0.10
    mutation_prob: float = 0.10
    stagnation_limit: int = 50
    generation_cap: int = 500
    offspring_per_generation: int | None = None  # None: half the population
    time_limit: float | None = None  # seconds, checked between generations
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.elite_fraction < 1:
            raise ValueError("elite_fraction must be in (0, 1)")
        if not 0 <= self.mutation_prob <= 1:
            raise ValueError("mutation_prob must be in [0, 1]")
        if self.population_size < 1 or self.stagnation_limit < 1 or self.generation_cap < 0:
            raise ValueError("population_size and stagnation_limit must be positive")

    @property
    def n_offspring(self) -> int:
        if self.offspring_per_generation is not None:
            return self.offspring_per_generation
        return max(1, self.population_size // 2)


@dataclass(frozen=True)
class Chromosome:
    solution: Solution
    fitness: float
    charge_penalty: float

    @property
    def key(self):
        return (self.fitness, tuple(r.nodes for r in self.solution.routes))


def fitness(instance: Instance, chromosome) -> float:
    """Trip cost plus a charge penalty weighted by 1000 times the distance.

    The penalty is the summed energy shortfall of the routes, so a
    solution that never runs the battery below zero scores exactly its
    trip cost.
    """
    sol = chromosome.solution if isinstance(chromosome, Chromosome) else chromosome
    penalty = sum(soc_shortfall(instance, r) for r in sol.routes)
    m = sol.metrics
    w = instance.weights
    return (w.y1 * m.total_distance + w.y2 * m.vehicles_used
            + 1000.0 * m.total_distance * penalty - w.y3 * m.discharge_time)


def make_chromosome(instance: Instance, solution: Solution) -> Chromosome:
    penalty = sum(soc_shortfall(instance, r) for r in solution.routes)
    return Chromosome(solution, fitness(instance, solution), penalty)


def _from_seqs(costs: RouteCosts, seqs) -> Chromosome:
    return make_chromosome(costs.instance, costs.solution(seqs))


def _customer_seqs(instance: Instance, chromosome: Chromosome) -> list:
    return [s for s in chromosome.solution.customer_routes(instance) if s]


def _check_servable(costs: RouteCosts):
    for c in costs.instance.customer_ids:
        if costs.cost((c,)) is None:
            raise InfeasibleError(f"customer {c} cannot be served even alone")


def nearest_neighbor(costs: RouteCosts, rng: np.random.Generator) -> list:
    """Routes grown by nearest feasible customer, each seeded at a random customer."""
    inst = costs.instance
    dist = inst.tables.dist
    unserved = sorted(inst.customer_ids)
    seqs = []
    while unserved:
        first = unserved[int(rng.integers(len(unserved)))]
        seq = (first,)
        unserved.remove(first)
        while True:
            last = seq[-1]
            nxt = None
            for c in sorted(unserved, key=lambda c: (dist[last][c], c)):
                if costs.cost(seq + (c,)) is not None:
                    nxt = c
                    break
            if nxt is None:
                break
            seq = seq + (nxt,)
            unserved.remove(nxt)
        seqs.append(seq)
    return seqs


def init_population(instance: Instance, config: GaConfig, rng=None, costs: RouteCosts | None = None) -> list:
    """Nearest-neighbour tours from random starts, each polished by route dissolving."""
    costs = costs or RouteCosts(instance)
    _check_servable(costs)
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    pop = []
    for _ in range(config.population_size):
        seqs = nearest_neighbor(costs, rng)
        seqs = add_profitable_stations(costs, fit_fleet(costs, seqs) or seqs)
        sol = improve_insertion(instance, costs.solution(seqs), costs)
        pop.append(make_chromosome(instance, sol))
    return pop


def select_parent(population, rng: np.random.Generator) -> Chromosome:
    """Binary tournament: draw two members uniformly, keep the fitter."""
    i, j = rng.integers(len(population), size=2)
    a, b = population[int(i)], population[int(j)]
    return a if a.key <= b.key else b


def _common_arc_offspring(costs, seqs_a, seqs_b, rng):
    depot = costs.instance.depot.id

    def arcs(seqs):
        out = set()
        for s in seqs:
            path = (depot, *s, depot)
            out.update(zip(path, path[1:]))
        return out

    common = arcs(seqs_a) & arcs(seqs_b)
    succ = {i: j for i, j in common if i != depot}
    has_pred = {j for i, j in common if i != depot}
    starts_at_depot = {j for i, j in common if i == depot}
    chains = []
    for s in seqs_a:
        for c in s:
            if c in has_pred:
                continue
            chain = [c]
            while chain[-1] in succ and succ[chain[-1]] != depot:
                chain.append(succ[chain[-1]])
            chains.append((tuple(chain), chain[0] in starts_at_depot, succ.get(chain[-1]) == depot))
    routes, protected, free = [], [], []
    for chain, head, tail in chains:
        if (head or tail) and costs.cost(chain) is not None:
            path = ((depot,) if head else ()) + chain + ((depot,) if tail else ())
            routes.append(chain)
            protected.append(set(zip(path, path[1:])) | set(zip(chain, chain[1:])))
        else:
            free.append(chain)
    order = rng.permutation(len(free))
    for k in order:
        chain = free[int(k)]
        forbidden = {}
        for ri, seq in enumerate(routes):
            path = (depot, *seq, depot)
            bad = {p for p in range(len(seq) + 1) if (path[p], path[p + 1]) in protected[ri]}
            if bad:
                forbidden[ri] = bad
        found = best_insertion(costs, routes, chain, forbidden)
        if found is not None:
            _, ri, pos = found
            routes[ri] = routes[ri][:pos] + chain + routes[ri][pos:]
            protected[ri] |= set(zip(chain, chain[1:]))
        elif costs.cost(chain) is not None:
            routes.append(chain)
            protected.append(set(zip(chain, chain[1:])))
        else:
            for c in chain:
                _place(costs, routes, protected, c)
    return routes


def _place(costs, routes, protected, node):
    if not insert_or_open(costs, routes, node):  # pragma: no cover - servability checked upfront
        raise InfeasibleError(f"customer {node} cannot be served")
    while len(protected) < len(routes):
        protected.append(set())


def _common_node_offspring(costs, seqs_a, seqs_b, rng):
    route_b = {c: k for k, s in enumerate(seqs_b) for c in s}
    groups, free = [], []
    for s in seqs_a:
        by_b = {}
        for c in s:
            by_b.setdefault(route_b[c], []).append(c)
        for k, members in by_b.items():
            whole = len(members) == len(s) == len(seqs_b[k])
            if len(members) >= 2 or whole:
                groups.append(tuple(members))
            else:
                free.extend(members)
    routes = []
    for g in groups:
        if costs.cost(g) is not None:
            routes.append(g)
            continue
        alt = tuple(c for c in seqs_b[route_b[g[0]]] if c in set(g))
        if costs.cost(alt) is not None:
            routes.append(alt)
        else:
            free.extend(g)
    order = rng.permutation(len(free))
    for k in order:
        if not insert_or_open(costs, routes, free[int(k)]):  # pragma: no cover
            raise InfeasibleError(f"customer {free[int(k)]} cannot be served")
    return routes


def fit_fleet(costs: RouteCosts, seqs: list):
    """Dissolve routes until at most ``fleet_size`` remain, or None if stuck.

    The route with the fewest customers that can be spread over the others
    by cheapest feasible insertion goes first, whatever the cost change.
    Stations that fit nowhere are dropped.
    """
    inst = costs.instance
    kind = inst.tables.kind
    seqs = [tuple(t) for t in seqs if t]
    while len(seqs) > inst.fleet_size:
        order = sorted(range(len(seqs)), key=lambda i: (sum(kind[n] == CUSTOMER for n in seqs[i]), seqs[i]))
        for i in order:
            rest = seqs[:i] + seqs[i + 1:]
            ok = True
            for n in sorted(seqs[i], key=lambda n: kind[n] != CUSTOMER):
                found = best_insertion(costs, rest, (n,))
                if found is None:
                    if kind[n] == CUSTOMER:
                        ok = False
                        break
                    continue
                _, ri, pos = found
                rest[ri] = rest[ri][:pos] + (n,) + rest[ri][pos:]
            if ok:
                seqs = rest
                break
        else:
            return None
    return seqs


def crossover(instance: Instance, parent_a: Chromosome, parent_b: Chromosome, mode: str, rng,
              costs: RouteCosts | None = None) -> Chromosome:
    """Offspring keeping what both parents share.

    ``common_arcs`` keeps every arc present in both parents as a fixed path
    fragment; fragments attached to the depot in both parents stay route
    ends.  ``common_nodes`` keeps groups of customers that share a route in
    both parents.  Everything else goes back by cheapest feasible insertion
    in random order, opening a new route when nothing fits.  An offspring
    that cannot be brought within the fleet size is replaced by the fitter
    parent.
    """
    costs = costs or RouteCosts(instance)
    a = _customer_seqs(instance, parent_a)
    b = _customer_seqs(instance, parent_b)
    if mode == COMMON_ARCS:
        seqs = _common_arc_offspring(costs, a, b, rng)
    elif mode == COMMON_NODES:
        seqs = _common_node_offspring(costs, a, b, rng)
    else:
        raise ValueError(f"unknown crossover mode {mode!r}")
    seqs = fit_fleet(costs, seqs)
    if seqs is None:
        return min(parent_a, parent_b, key=lambda c: c.key)
    return _from_seqs(costs, add_profitable_stations(costs, seqs))


def _remove(seqs, nodes):
    drop = set(nodes)
    return [t for t in (tuple(c for c in s if c not in drop) for s in seqs) if t]


def _reinsert(costs, seqs, nodes, rng):
    for k in rng.permutation(len(nodes)):
        if not insert_or_open(costs, seqs, nodes[int(k)]):  # pragma: no cover
            raise InfeasibleError(f"customer {nodes[int(k)]} cannot be served")
    return seqs


def mutate(instance: Instance, chromosome: Chromosome, config: GaConfig, rng,
           costs: RouteCosts | None = None) -> Chromosome:
    """Drop station-only routes, then with ``mutation_prob`` apply one of
    random node removal, random route removal or nearest-pair removal,
    reinserting the removed customers.  A result over the fleet size that
    cannot be repaired leaves the chromosome unmutated.
    """
    costs = costs or RouteCosts(instance)
    kind = instance.tables.kind
    routes = [r for r in chromosome.solution.routes if any(kind[n] == CUSTOMER for n in r.nodes)]
    if len(routes) != len(chromosome.solution.routes):
        chromosome = make_chromosome(instance, costs.solution([r.nodes for r in routes]))
    if rng.random() >= config.mutation_prob:
        return chromosome
    seqs = [r.nodes for r in chromosome.solution.routes]
    customers = sorted(c for s in seqs for c in s if kind[c] == CUSTOMER)
    op = int(rng.integers(3))
    if op == 0:
        victims = [customers[int(rng.integers(len(customers)))]]
    elif op == 1:
        victims = [c for c in seqs[int(rng.integers(len(seqs)))] if kind[c] == CUSTOMER]
    else:
        c = customers[int(rng.integers(len(customers)))]
        dist = instance.tables.dist
        others = [o for o in customers if o != c]
        victims = [c] + ([min(others, key=lambda o: (dist[c][o], o))] if others else [])
    kept = [s for s in _remove(seqs, victims) if any(kind[n] == CUSTOMER for n in s)]
    seqs = fit_fleet(costs, _reinsert(costs, kept, victims, rng))
    if seqs is None:
        return chromosome
    return _from_seqs(costs, add_profitable_stations(costs, seqs))


def _feasible_fleet(instance, chromosome):
    return chromosome.charge_penalty == 0 and chromosome.solution.metrics.vehicles_used <= instance.fleet_size


def run_ga(instance: Instance, config: GaConfig = GaConfig()):
    """Evolve a population; returns ``(solution, generations_run, history)``.

    ``history`` rows are ``(generation, best_fitness, mean_fitness)``.  The
    returned solution is the best feasible chromosome ever seen.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    costs = RouteCosts(instance)
    if not instance.customers:
        sol = costs.solution([])
        return with_wall_time(sol, time.perf_counter() - t0), 0, [(0, 0.0, 0.0)]
    pop = sorted(init_population(instance, config, rng, costs), key=lambda c: c.key)
    best = None

    def consider(members):
        nonlocal best
        improved = False
        for ch in members:
            if _feasible_fleet(instance, ch) and (best is None or ch.key < best.key):
                if best is None or ch.fitness < best.fitness - 1e-9:
                    improved = True
                best = ch
        return improved

    consider(pop)
    history = [(0, pop[0].fitness, float(np.mean([c.fitness for c in pop])))]
    n_elite = max(1, int(round(config.elite_fraction * config.population_size)))
    stagnant = 0
    generation = 0
    while generation < config.generation_cap and stagnant < config.stagnation_limit:
        if config.time_limit is not None and time.perf_counter() - t0 > config.time_limit:
            break
        generation += 1
        children = []
        for _ in range(config.n_offspring):
            pa = select_parent(pop, rng)
            pb = select_parent(pop, rng)
            mode = COMMON_NODES if rng.random() < 0.5 else COMMON_ARCS
            child = crossover(instance, pa, pb, mode, rng, costs)
            children.append(mutate(instance, child, config, rng, costs))
        merged = sorted(pop + children, key=lambda c: c.key)
        rest = merged[n_elite:]
        pick = rng.choice(len(rest), size=min(len(rest), config.population_size - n_elite), replace=False)
        pop = merged[:n_elite] + [rest[int(k)] for k in sorted(pick)]
        stagnant = 0 if consider(children) else stagnant + 1
        history.append((generation, pop[0].fitness, float(np.mean([c.fitness for c in pop]))))
    if best is None:
        raise InfeasibleError("no chromosome satisfied the fleet size")
    return with_wall_time(best.solution, time.perf_counter() - t0), generation, history


def history_csv(history) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["generation", "best_fitness", "mean_fitness"])
    for g, b, m in history:
        w.writerow([g, repr(b), repr(m)])
    return buf.getvalue()
