"""Smooth feasibility score, budget-penalised reward and its gradient.

Two evaluators live here. :func:`smooth_feasibility` and :func:`reward`
score a relaxed vector by rounding it into the box and asking an estimator
for each pair's shortest-path cost. Rounding makes that score piecewise
constant, so :func:`surrogate_reward` and
:func:`reward_gradient_fixed_paths` instead hold the path set fixed and
extend edge costs to real budgets, which gives a differentiable objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from qosd.errors import InvalidInstance
from qosd.graph import CostKind, Instance
from qosd.stressing import PathSet


@dataclass(frozen=True)
class RewardParams:
    zeta: float = 5.0
    kappa: float = 0.05

    def __post_init__(self):
        if not self.zeta > 0:
            raise InvalidInstance("zeta must be positive")
        if self.kappa < 0:
            raise InvalidInstance("kappa must be non-negative")


def soft_transform(x_hat) -> np.ndarray:
    """Componentwise softplus ``log(1 + e^x)``, stable for large ``|x|``."""
    return np.logaddexp(0.0, np.asarray(x_hat, dtype=float))


def round_into_box(instance: Instance, x_hat) -> tuple[int, ...]:
    """Round half up, then clamp each entry to ``[0, b_e]``."""
    x_hat = np.asarray(x_hat, dtype=float)
    if x_hat.shape != (instance.m,) or not np.all(np.isfinite(x_hat)):
        raise InvalidInstance(f"x_hat must be a finite vector of length {instance.m}")
    rounded = np.floor(x_hat + 0.5)
    clipped = np.clip(rounded, 0, np.asarray(instance.box))
    return tuple(int(v) for v in clipped)


def smooth_feasibility(instance: Instance, estimator, x_hat, zeta: float) -> float:
    if not zeta > 0:
        raise InvalidInstance("zeta must be positive")
    x = round_into_box(instance, x_hat)
    estimates = estimator.estimate_many(instance, x, instance.pairs)
    gaps = np.array([est.predicted_cost for est in estimates]) - instance.threshold
    return float(np.sum(expit(zeta * gaps)))


def budget_penalty(x_hat, kappa: float) -> float:
    return kappa * float(np.log1p(np.sum(soft_transform(x_hat))))


def reward_terms(instance: Instance, estimator, x_hat, params: RewardParams = RewardParams()) -> dict:
    score = smooth_feasibility(instance, estimator, x_hat, params.zeta)
    penalty = budget_penalty(x_hat, params.kappa)
    return {"feasibility_score": score, "penalty": penalty, "reward": score - penalty}


def reward(instance: Instance, estimator, x_hat, params: RewardParams = RewardParams()) -> float:
    return reward_terms(instance, estimator, x_hat, params)["reward"]


# --- fixed-path surrogate -------------------------------------------------------


def _edge_growth(instance: Instance, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    cost = instance.cost
    if cost.kind is CostKind.LINEAR:
        g, dg = x, np.ones_like(x)
    elif cost.kind is CostKind.QUADRATIC:
        g, dg = x * x, 2.0 * x
    else:
        if np.any(x <= -1.0):
            raise InvalidInstance("log-concave costs need budgets above -1")
        g, dg = np.log1p(x), 1.0 / (1.0 + x)
    return cost.slope * g, cost.slope * dg


def _path_matrix(instance: Instance, pathset: PathSet) -> np.ndarray:
    A = np.zeros((len(pathset), instance.m))
    for i, entry in enumerate(pathset.entries):
        for e in entry.path:
            A[i, e] += 1.0
    return A


def surrogate_reward(instance: Instance, pathset: PathSet, x_hat, params: RewardParams = RewardParams()) -> float:
    """Reward with each pair's cost replaced by its fixed path's real-extended cost."""
    x = np.asarray(x_hat, dtype=float)
    weights = np.asarray(instance.graph.weights)
    growth, _ = _edge_growth(instance, x)
    costs = _path_matrix(instance, pathset) @ (weights + growth)
    score = np.sum(expit(params.zeta * (costs - instance.threshold)))
    return float(score) - budget_penalty(x, params.kappa)


def reward_gradient_fixed_paths(
    instance: Instance, pathset: PathSet, x_hat, params: RewardParams = RewardParams()
) -> np.ndarray:
    x = np.asarray(x_hat, dtype=float)
    weights = np.asarray(instance.graph.weights)
    growth, dgrowth = _edge_growth(instance, x)
    A = _path_matrix(instance, pathset)
    sig = expit(params.zeta * (A @ (weights + growth) - instance.threshold))
    # d sigmoid(zeta z)/dz = zeta * s * (1 - s); chain through each path's edges
    score_grad = (params.zeta * sig * (1.0 - sig)) @ A * dgrowth
    soft_total = np.sum(soft_transform(x))
    penalty_grad = params.kappa * expit(x) / (1.0 + soft_total)
    return score_grad - penalty_grad
