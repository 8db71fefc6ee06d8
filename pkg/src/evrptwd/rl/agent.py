"""Assignment selection, episode rollouts, training and greedy inference."""
from __future__ import annotations

import csv
import io
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..core import InfeasibleError, Instance, Route, Solution, make_solution, with_wall_time
from ..dataio import GenParams, generate_instance
from ..insertion import RouteCosts, improve_insertion
from .env import FleetEnv, RewardWeights
from .network import LAYER_SIZES, ValueNetwork


class ReplayBuffer:
    """FIFO store of ``(state, reward, q)``; the oldest entries go first."""

    def __init__(self, capacity: int = 5000):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items = deque(maxlen=capacity)

    def __len__(self):
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def add(self, state, reward: float, q: float) -> None:
        self._items.append((np.asarray(state, dtype=float), float(reward), float(q)))

    def sample(self, size: int, rng: np.random.Generator) -> list:
        k = min(size, len(self._items))
        idx = rng.choice(len(self._items), size=k, replace=False)
        return [self._items[int(i)] for i in idx]


def regression_target(state, reward: float, q: float) -> float:
    """What the value of a stored pair is regressed to: its immediate reward."""
    return reward


def select_assignments(env: FleetEnv, network: ValueNetwork, epsilon: float, rng, trigger=None) -> list:
    """Pairs chosen for one decision step, as ``(vehicle, node, state, q)``.

    Works on a copy of ``env``: every feasible pair is scored (busy vehicles
    included), the best one (or, with probability ``epsilon``, a uniformly
    drawn feasible one) is applied to the copy, and scoring repeats until
    the ``trigger`` vehicle has been given a node or no feasible pair is
    left.  Equal values go to the lowest ``(vehicle, node)``.
    """
    sim = env.copy()
    if trigger is None:
        trigger = sim.next_trigger()
    chosen = []
    while True:
        pairs = sim.feasible_pairs()
        if not pairs:
            break
        states = np.array([sim.build_state(u, n).as_array() for u, n in pairs])
        q = network.forward(states)
        if epsilon > 0 and rng.random() < epsilon:
            k = int(rng.integers(len(pairs)))
        else:
            k = int(np.argmax(q))  # first maximum = lexicographically smallest pair
        u, n = pairs[k]
        chosen.append((u, n, states[k], float(q[k])))
        sim.assign(u, n)
        if u == trigger:
            break
    return chosen


@dataclass
class Rollout:
    routes: list
    served: int
    n_customers: int
    transitions: list = field(default_factory=list)

    @property
    def fulfilment_ratio(self) -> float:
        return self.served / self.n_customers if self.n_customers else 1.0

    @property
    def unserved(self) -> int:
        return self.n_customers - self.served


def rollout(instance: Instance, network: ValueNetwork, epsilon: float = 0.0, rng=None,
            weights: RewardWeights = RewardWeights()) -> Rollout:
    """Run one episode from time 0 until every vehicle has gone home.

    A vehicle that frees up and cannot be given any node (customer or
    station) returns to the depot for good, so vehicles keep visiting
    stations after the last customer is served.  Transitions are
    ``(state, reward, q)`` triples.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    env = FleetEnv(instance)
    transitions = []
    while True:
        trigger = env.next_trigger()
        if trigger is None:
            break
        env.clock = max(env.clock, env.vehicles[trigger].ready)
        picks = select_assignments(env, network, epsilon, rng, trigger)
        for u, n, state, q in picks:
            transitions.append((state, env.reward(u, n, weights), q))
            env.assign(u, n)
        if not any(u == trigger for u, *_ in picks):
            env.retire(trigger)
    routes = [Route(v) for v in env.routes()]
    return Rollout(routes, env.served_count(), len(instance.customers), transitions)


@dataclass(frozen=True)
class RlConfig:
    episodes: int = 200
    batch_size: int = 16
    buffer_capacity: int = 5000
    epsilon_episodes: int = 75
    learning_rate: float = 1e-3
    layer_sizes: tuple = LAYER_SIZES
    reward: RewardWeights = RewardWeights()
    gen: GenParams = GenParams()
    seed: int = 0

    def epsilon(self, episode: int) -> float:
        """Exploration rate for 0-based ``episode``: 1 at the start, 0 from ``epsilon_episodes`` on."""
        if self.epsilon_episodes <= 0:
            return 0.0
        return max(0.0, 1.0 - episode / self.epsilon_episodes)


@dataclass(frozen=True)
class CurveRow:
    episode: int
    fulfilment_ratio: float
    cost: float
    epsilon: float


@dataclass
class TrainResult:
    network: ValueNetwork
    curve: list
    final_instance_seed: int
    final_cost: float
    buffer_size: int


def episode_seeds(seed: int, episodes: int) -> list:
    return [int(s) for s in np.random.SeedSequence([seed, 1]).generate_state(episodes)]


def _rollout_cost(instance: Instance, ro: Rollout) -> float:
    return make_solution(instance, ro.routes).cost


def train(config: RlConfig = RlConfig(), progress=None) -> TrainResult:
    """Train on a fresh random instance per episode.

    Each episode's transitions go to the replay buffer; after the episode
    one batch is drawn and the network takes one optimizer step.
    ``progress`` is called with every :class:`CurveRow` if given.
    """
    net = ValueNetwork(config.layer_sizes, config.learning_rate, seed=config.seed)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 2]))
    buffer = ReplayBuffer(config.buffer_capacity)
    seeds = episode_seeds(config.seed, config.episodes)
    curve = []
    for ep, inst_seed in enumerate(seeds):
        inst = generate_instance(config.gen, seed=inst_seed)
        eps = config.epsilon(ep)
        ro = rollout(inst, net, eps, rng, config.reward)
        for state, r, q in ro.transitions:
            buffer.add(state, r, q)
        if len(buffer):
            batch = buffer.sample(config.batch_size, rng)
            x = np.array([s for s, _, _ in batch])
            y = np.array([regression_target(s, r, q) for s, r, q in batch])
            net.train_step(x, y)
        row = CurveRow(ep, ro.fulfilment_ratio, _rollout_cost(inst, ro), eps)
        curve.append(row)
        if progress is not None:
            progress(row)
    final_seed = seeds[-1] if seeds else 0
    final_cost = greedy_cost(net, generate_instance(config.gen, seed=final_seed)) if seeds else 0.0
    return TrainResult(net, curve, final_seed, final_cost, len(buffer))


def greedy_cost(network: ValueNetwork, instance: Instance) -> float:
    """Cost of the raw greedy rollout (no refinement), served customers only."""
    return _rollout_cost(instance, rollout(instance, network))


def infer_timed(network: ValueNetwork, instance: Instance, refine: bool = True):
    """Greedy rollout plus refinement; returns ``(solution, rollout_seconds, refine_seconds)``.

    Raises :class:`InfeasibleError` naming the unserved customers when the
    rollout dead-ends.
    """
    t0 = time.perf_counter()
    ro = rollout(instance, network)
    t1 = time.perf_counter()
    if ro.unserved:
        served = {n for r in ro.routes for n in r.nodes}
        missing = [c for c in instance.customer_ids if c not in served]
        raise InfeasibleError(f"greedy rollout left {len(missing)} customer(s) unserved: {missing}")
    costs = RouteCosts(instance)
    sol = costs.solution([r.nodes for r in ro.routes])
    if refine:
        sol = improve_insertion(instance, sol, costs)
    t2 = time.perf_counter()
    return with_wall_time(sol, t2 - t0), t1 - t0, t2 - t1


def infer(network: ValueNetwork, instance: Instance) -> Solution:
    """Greedy (epsilon = 0) rollout followed by route-dissolving refinement."""
    return infer_timed(network, instance)[0]


def curve_csv(curve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["episode", "fulfilment_ratio", "cost", "epsilon"])
    for row in curve:
        w.writerow([row.episode, repr(row.fulfilment_ratio), repr(row.cost), repr(row.epsilon)])
    return buf.getvalue()
