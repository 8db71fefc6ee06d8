"""
Training the dispatcher and comparing it with the GA
====================================================

Train the value network on random instances, then dispatch a 25-node
instance converted from Solomon format and compare cost and time with the
genetic algorithm.
"""
import time

import numpy as np

from evrptwd import convert_to_evrptwd, parse_solomon
from evrptwd.bench import cost_gap
from evrptwd.dataio import synthetic_solomon
from evrptwd.ga import GaConfig, run_ga
from evrptwd.rl import RlConfig, infer_timed, train

result = train(RlConfig(seed=0))
ratios = np.array([row.fulfilment_ratio for row in result.curve])
print(f"trained {len(ratios)} episodes; fulfilment first 25 {ratios[:25].mean():.2f}, last 25 {ratios[-25:].mean():.2f}")

# 25 nodes: 22 customers plus 3 customers turned into stations.
inst = convert_to_evrptwd(parse_solomon(synthetic_solomon("RC1", 25, seed=1)), 3)

t0 = time.perf_counter()
ga = run_ga(inst, GaConfig(seed=0))[0]
t_ga = time.perf_counter() - t0

rl, t_roll, t_refine = infer_timed(result.network, inst)
print(f"GA cost {ga.cost:.2f} in {t_ga:.2f}s")
print(f"RL cost {rl.cost:.2f} in {t_roll + t_refine:.3f}s (rollout {t_roll:.3f}s, refinement {t_refine:.3f}s)")
print(f"gap {cost_gap(ga.cost, rl.cost):.1f}%, speed-up {t_ga / (t_roll + t_refine):.0f}x")
