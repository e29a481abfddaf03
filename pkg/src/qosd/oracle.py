"""Exact solvers for desk-scale instances.

Two independent routes to the optimum ``OPT = min ||x||_1``:

* :func:`brute_force_opt` walks total budgets ``B = 0, 1, 2, ...`` and every
  boxed composition of ``B``, checking feasibility with Dijkstra.
* :func:`constraint_generation_solve` (linear costs only) keeps a growing set
  of path constraints ``sum_{e in p} (w_e + slope * x_e) >= T``, solves the
  reduced covering program exactly by branch and bound, and adds whichever
  shortest paths still violate the threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

from qosd.errors import InfeasibleWithinCap, InvalidInstance, TooLarge, Uncertified
from qosd.graph import CostKind, Instance, shortest_paths, total_cost

MAX_CANDIDATES = 10**8
DEFAULT_NODE_CAP = 2_000_000


@dataclass(frozen=True)
class OracleSolution:
    x_opt: tuple[int, ...]
    opt_cost: int
    explored: int
    certified: bool
    rounds: int = 0
    method: str = ""

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(e for e, v in enumerate(self.x_opt) if v)


# --- brute force ------------------------------------------------------------


def relevant_edges(instance: Instance) -> list[int]:
    """Edges lying on some simple critical-pair path of base length below ``T``.

    Budget placed anywhere else never helps: such an edge is either on no
    critical path or only on paths that already meet the threshold, and
    ``f_e >= w_e`` keeps them there. Paths are enumerated by depth-first
    search, independently of Dijkstra.
    """
    g, T = instance.graph, instance.threshold
    keep = set()
    for s, t in set(instance.pairs):
        on_path = [False] * g.node_count
        on_path[s] = True
        stack: list[int] = []

        def walk(u: int, length: float) -> None:
            if u == t:
                keep.update(stack)
                return
            for e in g.out_edges[u]:
                v = g.targets[e]
                nl = length + g.weights[e]
                if on_path[v] or not nl < T:
                    continue
                on_path[v] = True
                stack.append(e)
                walk(v, nl)
                stack.pop()
                on_path[v] = False

        walk(s, 0.0)
    return sorted(keep)


def count_compositions(boxes: Sequence[int], max_total: int) -> int:
    """Number of integer vectors ``0 <= y <= boxes`` with ``sum(y) <= max_total``."""
    ways = [1] + [0] * max_total
    for b in boxes:
        nxt = [0] * (max_total + 1)
        running = 0
        for total in range(max_total + 1):
            running += ways[total]
            if total - b - 1 >= 0:
                running -= ways[total - b - 1]
            nxt[total] = running
        ways = nxt
    return sum(ways)


def compositions(total: int, boxes: Sequence[int]) -> Iterator[list[int]]:
    """Boxed compositions of ``total`` in colexicographic order (last coordinate slowest)."""
    k = len(boxes)
    if k == 0:
        if total == 0:
            yield []
        return
    y = [0] * k
    suffix_room = [0] * (k + 1)
    for i in range(k - 1, -1, -1):
        suffix_room[i] = suffix_room[i + 1] + boxes[i]

    def fill(i: int, remaining: int) -> Iterator[list[int]]:
        # assign coordinates from the last one down to index 0
        if i < 0:
            if remaining == 0:
                yield y
            return
        prefix_room = suffix_room[0] - suffix_room[i + 1] - boxes[i]
        lo = max(0, remaining - prefix_room)
        for v in range(lo, min(boxes[i], remaining) + 1):
            y[i] = v
            yield from fill(i - 1, remaining - v)
        y[i] = 0

    yield from fill(k - 1, total)


def _feasible(instance: Instance, x: Sequence[int]) -> bool:
    T = instance.threshold
    return all(c >= T for c, _ in shortest_paths(instance, x))


def brute_force_opt(
    instance: Instance, budget_cap: int | None = None, *, max_candidates: int = MAX_CANDIDATES
) -> OracleSolution:
    edges = relevant_edges(instance)
    boxes = [instance.box[e] for e in edges]
    full = sum(boxes)
    cap = full if budget_cap is None else min(int(budget_cap), full)
    x = list(instance.zero())
    explored = 0
    for B in range(cap + 1):
        # checked per level so that easy instances in large boxes still solve
        if count_compositions(boxes, B) > max_candidates:
            raise TooLarge(f"more than {max_candidates} candidates at budget {B} over {len(edges)} edges")
        for y in compositions(B, boxes):
            explored += 1
            for e, v in zip(edges, y):
                x[e] = v
            if _feasible(instance, x):
                return OracleSolution(tuple(x), B, explored, True, method="brute")
    raise InfeasibleWithinCap(f"no feasible perturbation with total budget <= {cap}")


# --- constraint generation ----------------------------------------------------


class _CoverSolver:
    """Exact branch and bound for ``min sum(x)`` s.t. ``sum_{e in c} x_e >= d_c`` and a box.

    Branching picks the constraint with the largest residual demand and
    creates one child per free edge ``e_i`` in it: ``x[e_i] += 1`` with edges
    ``e_1 .. e_{i-1}`` frozen. Children partition the feasible region, so the
    search is exhaustive.
    """

    def __init__(self, constraints: Sequence[tuple[tuple[int, ...], int]], box: Sequence[int], node_cap: int):
        self.cons = [c for c, _ in constraints]
        self.demand = [d for _, d in constraints]
        self.box = box
        self.node_cap = node_cap
        self.member: dict[int, list[int]] = {}
        for i, c in enumerate(self.cons):
            for e in c:
                self.member.setdefault(e, []).append(i)
        self.nodes = 0
        self.best_cost = math.inf
        self.best_x: dict[int, int] | None = None

    def _lower_bound(self, res: list[int], x: dict[int, int], frozen: set[int]) -> float:
        open_cons = [i for i, r in enumerate(res) if r > 0]
        if not open_cons:
            return 0
        hits = 0
        for e, cons in self.member.items():
            if e in frozen or x[e] >= self.box[e]:
                continue
            hits = max(hits, sum(1 for i in cons if res[i] > 0))
        if hits == 0:
            return math.inf
        total = sum(res[i] for i in open_cons)
        return max(max(res[i] for i in open_cons), math.ceil(total / hits))

    def _greedy(self) -> None:
        x = {e: 0 for e in self.member}
        res = list(self.demand)
        while any(r > 0 for r in res):
            best_e, best_hits = None, 0
            for e in sorted(self.member):
                if x[e] >= self.box[e]:
                    continue
                hits = sum(1 for i in self.member[e] if res[i] > 0)
                if hits > best_hits:
                    best_e, best_hits = e, hits
            if best_e is None:
                return
            x[best_e] += 1
            for i in self.member[best_e]:
                res[i] -= 1
        self.best_cost = sum(x.values())
        self.best_x = dict(x)

    def solve(self) -> dict[int, int] | None:
        self._greedy()
        x = {e: 0 for e in self.member}
        self._search(x, list(self.demand), 0, set())
        return self.best_x

    def _search(self, x: dict[int, int], res: list[int], cost: int, frozen: set[int]) -> None:
        self.nodes += 1
        if self.nodes > self.node_cap:
            raise TooLarge(f"branch and bound exceeded {self.node_cap} nodes")
        if all(r <= 0 for r in res):
            if cost < self.best_cost:
                self.best_cost, self.best_x = cost, dict(x)
            return
        if cost + self._lower_bound(res, x, frozen) >= self.best_cost:
            return
        ci = max(range(len(res)), key=lambda i: (res[i], -i))
        free = [e for e in self.cons[ci] if e not in frozen and x[e] < self.box[e]]
        # try edges that cover the most open constraints first
        free.sort(key=lambda e: (-sum(1 for i in self.member[e] if res[i] > 0), e))
        added = []
        for e in free:
            x[e] += 1
            for i in self.member[e]:
                res[i] -= 1
            self._search(x, res, cost + 1, frozen)
            for i in self.member[e]:
                res[i] += 1
            x[e] -= 1
            frozen.add(e)
            added.append(e)
        frozen.difference_update(added)


def _demand(instance: Instance, path: Sequence[int]) -> int:
    base = sum(instance.graph.weights[e] for e in path)
    need = (instance.threshold - base) / instance.cost.slope
    return max(0, math.ceil(need - 1e-9))


def constraint_generation_solve(
    instance: Instance, *, node_cap: int = DEFAULT_NODE_CAP, round_cap: int = 10_000
) -> OracleSolution:
    if instance.cost.kind is not CostKind.LINEAR:
        raise InvalidInstance("constraint generation needs the linear cost family")
    T = instance.threshold
    constraints: dict[tuple[int, ...], int] = {}
    x = list(instance.zero())
    explored = rounds = 0
    while True:
        violated = [p for c, p in shortest_paths(instance, x) if not c >= T]
        if not violated:
            return OracleSolution(tuple(x), total_cost(x), explored, True, rounds, "congen")
        if rounds >= round_cap:
            raise TooLarge(f"constraint generation exceeded {round_cap} rounds")
        rounds += 1
        for path in violated:
            if path in constraints:
                # rounding left this path a hair short; demand one more unit
                constraints[path] += 1
            else:
                constraints[path] = _demand(instance, path)
        solver = _CoverSolver(list(constraints.items()), instance.box, node_cap)
        sol = solver.solve()
        explored += solver.nodes
        if sol is None:
            raise InfeasibleWithinCap("path constraints cannot be met within the box")
        x = list(instance.zero())
        for e, v in sol.items():
            x[e] = v


# --- approximation ratio ------------------------------------------------------


def ratio_bound(
    instance: Instance, algo_cost: int, opt: OracleSolution, epsilon_bar: float | None = None
) -> tuple[float, bool]:
    """Guarantee ``1 + h ln n + ln T + ln(1/eps)`` for an exact estimator, ``h = ceil(T / w_min)``."""
    if not opt.certified:
        raise Uncertified("ratio check needs a certified optimum")
    eps = instance.epsilon_bar if epsilon_bar is None else epsilon_bar
    h = math.ceil(instance.threshold / instance.graph.min_weight)
    bound = 1 + h * math.log(instance.n) + math.log(instance.threshold) + math.log(1 / eps)
    return bound, algo_cost <= bound * opt.opt_cost
