"""Value-based dispatching agent."""
from .agent import (
    CurveRow, ReplayBuffer, RlConfig, Rollout, TrainResult, curve_csv, episode_seeds, greedy_cost,
    infer, infer_timed, regression_target, rollout, select_assignments, train,
)
from .env import FleetEnv, RewardWeights, RlState
from .network import LAYER_SIZES, ValueNetwork, load_checkpoint, save_checkpoint
