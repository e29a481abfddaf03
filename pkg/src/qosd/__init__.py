"""Minimum-budget edge perturbation that pushes every critical pair's shortest path past a threshold."""

from qosd.errors import (
    Disconnected,
    InfeasibleWithinCap,
    InvalidInstance,
    NonTermination,
    QoSDError,
    Saturated,
    TooLarge,
    UnboundedGain,
    Uncertified,
    Unreachable,
)
from qosd.estimator import ExactEstimator, NoisyEstimator, PathEstimate, parse_estimator
from qosd.graph import (
    CostFamily,
    CostKind,
    Instance,
    WeightedDigraph,
    edge_cost,
    feasibility,
    load_instance,
    read_edge_list,
    save_instance,
    shortest_path,
    slack,
)
from qosd.instancegen import GenSpec, generate, tiny_instance
from qosd.oracle import OracleSolution, brute_force_opt, constraint_generation_solve, ratio_bound
from qosd.reward import RewardParams, reward, reward_gradient_fixed_paths, smooth_feasibility, soft_transform
from qosd.stressing import PathSet, best_increment, potential, pps, pps_i, sandwich_check

__version__ = "0.1.0"

__all__ = [
    "CostFamily", "CostKind", "Disconnected", "ExactEstimator", "GenSpec", "InfeasibleWithinCap",
    "Instance", "InvalidInstance", "NoisyEstimator", "NonTermination", "OracleSolution", "PathEstimate",
    "PathSet", "QoSDError", "RewardParams", "Saturated", "TooLarge", "UnboundedGain", "Uncertified",
    "Unreachable", "WeightedDigraph", "best_increment", "brute_force_opt", "constraint_generation_solve",
    "edge_cost", "feasibility", "generate", "load_instance", "parse_estimator", "potential", "pps", "pps_i",
    "ratio_bound", "read_edge_list", "reward", "reward_gradient_fixed_paths", "save_instance",
    "sandwich_check", "shortest_path", "slack", "smooth_feasibility", "soft_transform", "tiny_instance",
]
