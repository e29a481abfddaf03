"""Predictive path stressing: the greedy gain-to-cost perturbation search.

The outer loop collects the pairs an estimator reports below the threshold
together with their current shortest paths. The inner loop then repeatedly
applies the single-edge increment with the best potential gain per unit of
budget, holding that path set fixed, until the clamped potential
``sum(min(T, c_p))`` is within ``epsilon_bar`` of ``|P| * T``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

from qosd.errors import NonTermination, Saturated, UnboundedGain
from qosd.estimator import ExactEstimator, PathEstimate
from qosd.graph import (
    EdgePath,
    Instance,
    Pair,
    feasibility,
    path_cost,
    shortest_paths,
    slack,
    total_cost,
)

DEFAULT_STEP_CAP = 10**6


@dataclass
class PathEntry:
    pair: Pair
    path: EdgePath
    cached_cost: float


class PathSet:
    """Working set of shortest paths for the currently violating pairs.

    ``cached_cost`` starts as the estimator's reading and is then advanced by
    the exact edge-cost increments applied during the inner loop, so it stays
    consistent with the current ``x`` for the fixed path.
    """

    def __init__(self, entries: Sequence[PathEntry]):
        self.entries = list(entries)
        self.member_index: dict[int, list[int]] = defaultdict(list)
        for i, entry in enumerate(self.entries):
            for e in entry.path:
                self.member_index[e].append(i)

    @classmethod
    def from_estimates(cls, pairs: Sequence[Pair], estimates: Sequence[PathEstimate]) -> "PathSet":
        return cls([PathEntry(p, est.path, est.predicted_cost) for p, est in zip(pairs, estimates)])

    @classmethod
    def build(cls, instance: Instance, x: Sequence[int], estimator, pairs: Sequence[Pair] | None = None) -> "PathSet":
        pairs = list(instance.pairs if pairs is None else pairs)
        return cls.from_estimates(pairs, estimator.estimate_many(instance, x, pairs))

    def __len__(self):
        return len(self.entries)

    def candidate_edges(self) -> list[int]:
        return sorted(self.member_index)

    def apply(self, instance: Instance, x: Sequence[int], e: int, delta: int) -> None:
        """Advance cached costs for ``x[e] += delta``; ``x`` is the pre-update vector."""
        w = instance.graph.weights[e]
        f = instance.cost.value
        inc = f(w, x[e] + delta) - f(w, x[e])
        for i in self.member_index.get(e, ()):
            self.entries[i].cached_cost += inc

    def resync(self, instance: Instance, x: Sequence[int]) -> None:
        """Replace cached costs with exact fixed-path costs under ``x``."""
        for entry in self.entries:
            entry.cached_cost = path_cost(instance, x, entry.path)

    def path_slack(self, threshold: float) -> float:
        return sum(max(0.0, threshold - entry.cached_cost) for entry in self.entries)


def potential(pathset: PathSet, instance: Instance) -> float:
    """Clamped potential ``sum(min(T, c_p))`` over the working paths."""
    T = instance.threshold
    return sum(min(T, entry.cached_cost) for entry in pathset.entries)


def best_increment(
    pathset: PathSet, instance: Instance, x: Sequence[int], delta_cap: int | None = None
) -> tuple[int, int, float]:
    """Return ``(edge, delta, ratio)`` maximising potential gain per budget unit.

    Only edges on working paths are candidates and ``delta`` ranges over
    ``1 .. box - x`` (optionally capped). Ties go to the smaller edge id, then
    the smaller delta.
    """
    T = instance.threshold
    f = instance.cost.value
    weights, box = instance.graph.weights, instance.box
    best_e, best_d, best_ratio = -1, 0, -math.inf
    for e in pathset.candidate_edges():
        room = box[e] - x[e]
        if delta_cap is not None:
            room = min(room, delta_cap)
        if room <= 0:
            continue
        costs = [pathset.entries[i].cached_cost for i in pathset.member_index[e]]
        if all(c >= T for c in costs):
            continue
        base = sum(min(T, c) for c in costs)
        f0 = f(weights[e], x[e])
        for d in range(1, room + 1):
            inc = f(weights[e], x[e] + d) - f0
            clamped = sum(min(T, c + inc) for c in costs)
            ratio = (clamped - base) / d
            if ratio > best_ratio:
                best_e, best_d, best_ratio = e, d, ratio
            if all(c + inc >= T for c in costs):
                # every path through e is clamped; larger deltas only dilute the ratio
                break
    if best_e < 0 or not best_ratio > 0:
        raise Saturated("no edge on a violating path can be raised within the box")
    return best_e, best_d, best_ratio


@dataclass
class StressReport:
    solution: tuple[int, ...]
    total_budget: int
    outer_rounds: int
    inner_steps: int
    estimator_queries: int
    final_potential: float
    feasible_exact: bool
    feasibility_rate: float
    initial_slack: float
    path_slack: float
    estimator: str = "exact"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["solution"] = list(self.solution)
        return d


@dataclass
class TraceStep:
    round: int
    step: int
    edge: int
    delta: int
    ratio: float
    potential: float
    ceiling: float


def _violating(instance: Instance, estimates: Sequence[PathEstimate]) -> list[int]:
    T = instance.threshold
    return [i for i, est in enumerate(estimates) if est.predicted_cost < T]


def pps(
    instance: Instance,
    estimator=None,
    x0: Sequence[int] | None = None,
    *,
    epsilon_bar: float | None = None,
    step_cap: int = DEFAULT_STEP_CAP,
    delta_cap: int | None = None,
    on_step: Callable[[TraceStep], None] | None = None,
) -> StressReport:
    """Run the two-level stressing loop against ``estimator``.

    Each outer round makes at least one increment, which keeps the loop live
    when the remaining shortfall is already below ``epsilon_bar``. With a
    noisy estimator the result can still violate pairs; ``feasible_exact``
    reports the truth.
    """
    estimator = ExactEstimator() if estimator is None else estimator
    eps = instance.epsilon_bar if epsilon_bar is None else epsilon_bar
    T = instance.threshold
    x = list(instance.check_perturbation(instance.zero() if x0 is None else x0))
    queries_before = estimator.queries
    pairs = instance.pairs
    initial_slack = slack(instance, x)

    estimates = estimator.estimate_many(instance, x, pairs)
    violating = _violating(instance, estimates)
    rounds = steps = 0
    accumulated_slack = 0.0
    final_potential = 0.0
    while violating:
        rounds += 1
        if rounds > step_cap:
            raise NonTermination(f"round cap {step_cap} reached")
        pathset = PathSet.from_estimates([pairs[i] for i in violating], [estimates[i] for i in violating])
        accumulated_slack += pathset.path_slack(T)
        target = len(pathset) * T - eps
        round_steps = 0
        current = potential(pathset, instance)
        while current < target or round_steps == 0:
            try:
                e, d, ratio = best_increment(pathset, instance, x, delta_cap)
            except Saturated:
                if estimator.is_exact:
                    raise
                # noisy readings may point at paths that cannot move; fall back to true costs
                pathset.resync(instance, x)
                current = potential(pathset, instance)
                if current >= len(pathset) * T or (current >= target and round_steps > 0):
                    break
                e, d, ratio = best_increment(pathset, instance, x, delta_cap)
            pathset.apply(instance, x, e, d)
            x[e] += d
            steps += 1
            round_steps += 1
            current = potential(pathset, instance)
            if on_step is not None:
                on_step(TraceStep(rounds, steps, e, d, ratio, current, len(pathset) * T))
            if steps >= step_cap:
                raise NonTermination(f"step cap {step_cap} reached after {rounds} rounds")
        final_potential = current
        estimates = estimator.estimate_many(instance, x, pairs)
        violating = _violating(instance, estimates)

    rate, _ = feasibility(instance, x)
    return StressReport(
        solution=tuple(x),
        total_budget=total_cost(x),
        outer_rounds=rounds,
        inner_steps=steps,
        estimator_queries=estimator.queries - queries_before,
        final_potential=final_potential,
        feasible_exact=rate == 1.0,
        feasibility_rate=rate,
        initial_slack=initial_slack,
        path_slack=accumulated_slack,
        estimator=estimator.descriptor,
    )


def pps_i(instance: Instance, x0: Sequence[int] | None = None, **kwargs) -> StressReport:
    """Exact-path safeguard: the stressing loop driven by Dijkstra.

    Accepts any starting vector inside the box and returns one that meets
    the threshold on every pair, or raises :class:`Saturated`.
    """
    report = pps(instance, ExactEstimator(), x0, **kwargs)
    assert report.feasible_exact, "exact stressing returned an infeasible vector"
    return report


@dataclass
class SandwichCheck:
    lower_ok: bool
    upper_ok: bool | None
    slack: float
    path_slack: float
    added: int
    c_min: float | None
    c_max: float
    upper_skipped: bool = False
    # per-edge sharing across pairs can make the plain lower bound fail;
    # this variant divides by the largest number of pairs sharing one edge
    multiplicity: int = 1
    lower_ok_shared: bool = True
    notes: list[str] = field(default_factory=list)


_TOL = 1e-9


def sandwich_check(
    instance: Instance,
    x_before: Sequence[int],
    x_after: Sequence[int],
    path_slack: float | None = None,
    *,
    require_upper: bool = False,
) -> SandwichCheck:
    """Check ``S/C_max <= added`` and ``added <= S_path/c_min`` for a safeguard run.

    ``S`` is the per-pair shortfall at ``x_before``; ``S_path`` is the
    shortfall summed over each round's working paths. When ``path_slack`` is
    not supplied it is recovered by replaying the safeguard from
    ``x_before``, which must reproduce ``x_after``.
    """
    xb = instance.check_perturbation(x_before)
    xa = instance.check_perturbation(x_after)
    if any(a < b for a, b in zip(xa, xb)):
        raise ValueError("x_after must dominate x_before componentwise")
    cost = instance.cost
    notes = []
    if path_slack is None:
        replay = pps_i(instance, xb)
        if replay.solution != xa:
            raise ValueError("x_after is not the safeguard output from x_before; pass path_slack")
        path_slack = replay.path_slack
    S = slack(instance, xb)
    added = total_cost(xa) - total_cost(xb)

    changed = [e for e in range(instance.m) if xa[e] > xb[e]]
    c_max = max((cost.gain_bounds(xb[e], xa[e])[1] for e in changed), default=cost.step_gain(0))
    lower_ok = S / c_max <= added + _TOL

    shares = defaultdict(int)
    for c, path in shortest_paths(instance, xb):
        if c < instance.threshold:
            for e in path:
                shares[e] += 1
    multiplicity = max(shares.values(), default=1)
    lower_ok_shared = S / (c_max * multiplicity) <= added + _TOL

    if cost.has_uniform_gain_floor:
        c_min = cost.slope
        upper_ok = added <= path_slack / c_min + _TOL
        skipped = False
    else:
        if require_upper:
            raise UnboundedGain("log-concave gains decay to zero; no uniform c_min exists")
        c_min, upper_ok, skipped = None, None, True
        notes.append("upper bound skipped: unbounded gain decay")
    return SandwichCheck(
        lower_ok=lower_ok,
        upper_ok=upper_ok,
        slack=S,
        path_slack=path_slack,
        added=added,
        c_min=c_min,
        c_max=c_max,
        upper_skipped=skipped,
        multiplicity=multiplicity,
        lower_ok_shared=lower_ok_shared,
        notes=notes,
    )
