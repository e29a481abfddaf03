"""Seeded synthetic instances on Erdos-Renyi, Barabasi-Albert and Watts-Strogatz graphs."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import networkx as nx

from qosd.errors import Disconnected, InvalidInstance
from qosd.graph import CostFamily, Instance, WeightedDigraph, dijkstra, feasibility

FAMILIES = ("er", "ba", "ws")


@dataclass(frozen=True)
class GenSpec:
    family: str = "er"
    n: int = 32
    p: float = 0.1
    m_attach: int = 2
    k: int = 4
    beta: float = 0.1
    weights: tuple = ("unit",)
    pair_count: int = 10
    threshold_pct: float = 1.4
    seed: int = 0
    cost: CostFamily = field(default_factory=CostFamily)
    epsilon_bar: float = 0.5
    pair_retries: int = 1000

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInstance(f"family must be one of {FAMILIES}")
        if self.n < 2:
            raise InvalidInstance("n must be at least 2")
        if self.family == "er" and not 0 < self.p <= 1:
            raise InvalidInstance("p must lie in (0, 1]")
        if self.family == "ba" and not 1 <= self.m_attach < self.n:
            raise InvalidInstance("m_attach must lie in [1, n)")
        if self.family == "ws" and (self.k % 2 or not 0 < self.k < self.n or not 0 <= self.beta <= 1):
            raise InvalidInstance("ws needs even 0 < k < n and beta in [0, 1]")
        if self.threshold_pct < 1:
            raise InvalidInstance("threshold_pct must be >= 1")
        if self.pair_count < 1 or self.pair_count > self.n * (self.n - 1):
            raise InvalidInstance("pair_count out of range")
        if self.weights[0] not in ("unit", "int"):
            raise InvalidInstance("weights must be ('unit',) or ('int', lo, hi)")


def parse_weights(text: str) -> tuple:
    """``unit`` or ``int:<lo>:<hi>``."""
    parts = text.split(":")
    if parts == ["unit"]:
        return ("unit",)
    if parts[0] == "int" and len(parts) == 3:
        lo, hi = int(parts[1]), int(parts[2])
        if 1 <= lo <= hi:
            return ("int", lo, hi)
    raise InvalidInstance(f"bad weight distribution {text!r}")


def topology(spec: GenSpec) -> list[tuple[int, int]]:
    """Arc list; undirected generators contribute both directions."""
    if spec.family == "er":
        g = nx.gnp_random_graph(spec.n, spec.p, seed=spec.seed, directed=True)
        return sorted(g.edges())
    if spec.family == "ba":
        g = nx.barabasi_albert_graph(spec.n, spec.m_attach, seed=spec.seed)
    else:
        g = nx.watts_strogatz_graph(spec.n, spec.k, spec.beta, seed=spec.seed)
    arcs = []
    for u, v in sorted(tuple(sorted(e)) for e in g.edges()):
        arcs += [(u, v), (v, u)]
    return arcs


def generate(spec: GenSpec) -> Instance:
    rng = random.Random(spec.seed)
    arcs = topology(spec)
    if not arcs:
        raise Disconnected("generated graph has no edges")
    weights = {}
    edges = []
    for u, v in arcs:
        key = (min(u, v), max(u, v)) if spec.family != "er" else (u, v)
        if key not in weights:
            weights[key] = 1.0 if spec.weights[0] == "unit" else float(rng.randint(spec.weights[1], spec.weights[2]))
        edges.append((u, v, weights[key]))
    graph = WeightedDigraph(spec.n, edges)

    pairs: list[tuple[int, int]] = []
    baseline: list[float] = []
    trees: dict[int, list[float]] = {}
    attempts = 0
    while len(pairs) < spec.pair_count:
        attempts += 1
        if attempts > spec.pair_retries:
            raise Disconnected(f"found only {len(pairs)} reachable pairs after {spec.pair_retries} draws")
        s, t = rng.sample(range(spec.n), 2)
        if (s, t) in pairs:
            continue
        if s not in trees:
            trees[s] = dijkstra(graph, graph.weights, s)[0]
        if trees[s][t] == math.inf:
            continue
        pairs.append((s, t))
        baseline.append(trees[s][t])

    threshold = spec.threshold_pct * max(baseline)
    return Instance(
        graph=graph,
        cost=spec.cost,
        pairs=tuple(pairs),
        threshold=threshold,
        box=None,
        epsilon_bar=spec.epsilon_bar,
        name=f"{spec.family}-n{spec.n}-s{spec.seed}",
    )


def tiny_instance(seed: int, *, n_max: int = 6, box: int = 4, max_weight: int = 3, max_pairs: int = 2) -> Instance:
    """Small linear instance with integer data, suitable for exhaustive search.

    Draws a sparse random digraph on 3..``n_max`` nodes, one or more
    connected pairs, and an integer threshold a few units above the largest
    baseline distance, retrying until the all-box perturbation is feasible.
    """
    rng = random.Random(seed)
    while True:
        n = rng.randint(3, n_max)
        p = rng.uniform(0.3, 0.6)
        arcs = [(u, v) for u in range(n) for v in range(n) if u != v and rng.random() < p]
        if not arcs:
            continue
        graph = WeightedDigraph(n, [(u, v, rng.randint(1, max_weight)) for u, v in arcs])
        candidates = []
        for s in range(n):
            dist = dijkstra(graph, graph.weights, s)[0]
            candidates += [(s, t, dist[t]) for t in range(n) if t != s and dist[t] < math.inf]
        if not candidates:
            continue
        chosen = rng.sample(candidates, min(len(candidates), rng.randint(1, max_pairs)))
        base = max(d for _, _, d in chosen)
        threshold = int(base) + rng.randint(1, 3)
        instance = Instance(
            graph=graph,
            cost=CostFamily("linear", 1.0),
            pairs=tuple((s, t) for s, t, _ in chosen),
            threshold=float(threshold),
            box=box,
            epsilon_bar=0.5,
            name=f"tiny-{seed}",
        )
        # all-box vector must be feasible, otherwise no optimum exists
        if feasibility(instance, instance.box)[0] == 1.0:
            return instance
