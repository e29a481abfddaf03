"""Path-cost estimators used by the stressing greedy.

An estimator answers "how long is the shortest ``s -> t`` path under ``x``?"
The exact backend runs Dijkstra. The noisy backend returns the same path but
corrupts the reported cost with multiplicative zero-mean uniform noise, which
models a regression surrogate with relative error rate ``eta``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from qosd.errors import InvalidInstance
from qosd.graph import EdgePath, Instance, Pair, shortest_path, shortest_paths

DEFAULT_SEED = 0


def default_seed() -> int:
    return int(os.environ.get("QOSD_SEED", DEFAULT_SEED))


@dataclass(frozen=True)
class PathEstimate:
    predicted_cost: float
    path: EdgePath
    true_cost: float


class ExactEstimator:
    """Dijkstra-backed estimator; predicted cost is the true cost."""

    eta = 0.0
    is_exact = True

    def __init__(self):
        self.queries = 0

    @property
    def descriptor(self) -> str:
        return "exact"

    def clone(self) -> "ExactEstimator":
        return ExactEstimator()

    def _predict(self, true_cost: float, s: int, t: int) -> float:
        self.queries += 1
        return true_cost

    def estimate(self, instance: Instance, x: Sequence[int], s: int, t: int) -> PathEstimate:
        cost, path = shortest_path(instance, x, s, t)
        return PathEstimate(self._predict(cost, s, t), path, cost)

    def estimate_many(self, instance: Instance, x: Sequence[int], pairs: Sequence[Pair]) -> list[PathEstimate]:
        """Estimate several pairs at once; equivalent to calling :meth:`estimate` in order."""
        exact = shortest_paths(instance, x, pairs)
        return [PathEstimate(self._predict(c, s, t), p, c) for (s, t), (c, p) in zip(pairs, exact)]


class NoisyEstimator(ExactEstimator):
    """Exact path, cost scaled by ``1 + u`` with ``u ~ U[-eta, eta]``.

    The draw for a query is a pure function of ``(seed, s, t, query index)``,
    so two estimators with the same seed replay the same noise for the same
    query sequence. Instances are not thread-safe because of the counter;
    use :meth:`clone` per worker.
    """

    is_exact = False

    def __init__(self, eta: float, seed: int | None = None):
        super().__init__()
        if not 0.0 <= eta < 1.0:
            raise InvalidInstance(f"noise rate must lie in [0, 1), got {eta}")
        self.eta = float(eta)
        self.seed = default_seed() if seed is None else int(seed)

    @property
    def descriptor(self) -> str:
        return f"noisy:{self.eta:g}:{self.seed}"

    def clone(self, seed: int | None = None) -> "NoisyEstimator":
        return NoisyEstimator(self.eta, self.seed if seed is None else seed)

    def noise(self, s: int, t: int, index: int) -> float:
        rng = np.random.default_rng([self.seed & 0xFFFFFFFFFFFFFFFF, s, t, index])
        return self.eta * (2.0 * rng.random() - 1.0)

    def _predict(self, true_cost: float, s: int, t: int) -> float:
        index = self.queries
        self.queries += 1
        if self.eta == 0.0:
            return true_cost
        return true_cost * (1.0 + self.noise(s, t, index))


def parse_estimator(text: str) -> ExactEstimator:
    """Parse ``exact`` or ``noisy:<eta>[:<seed>]``."""
    parts = text.strip().lower().split(":")
    if parts[0] == "exact" and len(parts) == 1:
        return ExactEstimator()
    if parts[0] == "noisy" and len(parts) in (2, 3):
        try:
            eta = float(parts[1])
            seed = int(parts[2]) if len(parts) == 3 else None
        except ValueError:
            raise InvalidInstance(f"bad estimator spec {text!r}") from None
        return NoisyEstimator(eta, seed)
    raise InvalidInstance(f"bad estimator spec {text!r}; expected exact or noisy:<eta>:<seed>")
