"""Weighted digraphs, edge-cost families, Dijkstra and feasibility checks.

Everything here is exact ground truth: the solvers in other modules may use
approximate path-cost estimates, but feasibility is always decided by the
functions in this module.
"""

from __future__ import annotations

import enum
import hashlib
import heapq
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from qosd.errors import InvalidInstance, Unreachable

Pair = tuple[int, int]
EdgePath = tuple[int, ...]


class WeightedDigraph:
    """Immutable directed multigraph with strictly positive base weights.

    Edge ids are dense, ``0 .. m-1``, in insertion order. Parallel edges are
    allowed since budgets are attached to edge ids, not node pairs.
    """

    __slots__ = ("node_count", "sources", "targets", "weights", "out_edges")

    def __init__(self, node_count: int, edges: Iterable[tuple[int, int, float]]):
        if node_count <= 0:
            raise InvalidInstance("node_count must be positive")
        sources, targets, weights = [], [], []
        out: list[list[int]] = [[] for _ in range(node_count)]
        for eid, (u, v, w) in enumerate(edges):
            u, v, w = int(u), int(v), float(w)
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise InvalidInstance(f"edge {eid} ({u}->{v}) references a node >= {node_count}")
            if u == v:
                raise InvalidInstance(f"edge {eid} is a self-loop on node {u}")
            if not w > 0 or not math.isfinite(w):
                raise InvalidInstance(f"edge {eid} has non-positive weight {w}")
            sources.append(u)
            targets.append(v)
            weights.append(w)
            out[u].append(eid)
        self.node_count = int(node_count)
        self.sources = tuple(sources)
        self.targets = tuple(targets)
        self.weights = tuple(weights)
        self.out_edges = tuple(tuple(ids) for ids in out)

    @property
    def edge_count(self) -> int:
        return len(self.weights)

    @property
    def min_weight(self) -> float:
        return min(self.weights)

    def edges(self) -> list[tuple[int, int, float]]:
        return list(zip(self.sources, self.targets, self.weights))

    def __eq__(self, other):
        if not isinstance(other, WeightedDigraph):
            return NotImplemented
        return self.node_count == other.node_count and self.edges() == other.edges()

    def __hash__(self):
        return hash((self.node_count, self.sources, self.targets, self.weights))

    def __repr__(self):
        return f"WeightedDigraph(n={self.node_count}, m={self.edge_count})"


class CostKind(str, enum.Enum):
    LINEAR = "linear"
    QUADRATIC = "quadratic"
    LOG = "log"

    @classmethod
    def parse(cls, value: str) -> "CostKind":
        if isinstance(value, cls):
            return value
        aliases = {
            "linear": cls.LINEAR,
            "quadratic": cls.QUADRATIC,
            "quadratic_convex": cls.QUADRATIC,
            "quadraticconvex": cls.QUADRATIC,
            "qc": cls.QUADRATIC,
            "log": cls.LOG,
            "log_concave": cls.LOG,
            "logconcave": cls.LOG,
        }
        try:
            return aliases[str(value).lower().replace("-", "_")]
        except KeyError:
            raise InvalidInstance(f"unknown cost kind {value!r}") from None


@dataclass(frozen=True)
class CostFamily:
    """Edge-cost function ``f_e(x) = w_e + slope * g(x)``.

    ``g`` is ``x``, ``x**2`` or ``log(1 + x)`` depending on ``kind``, so that
    ``f_e(0) = w_e`` for every family.
    """

    kind: CostKind = CostKind.LINEAR
    slope: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", CostKind.parse(self.kind))
        if not self.slope > 0:
            raise InvalidInstance("cost slope must be positive")

    def growth(self, x: float) -> float:
        if self.kind is CostKind.LINEAR:
            return float(x)
        if self.kind is CostKind.QUADRATIC:
            return float(x) * float(x)
        return math.log1p(x)

    def value(self, base_weight: float, x: float) -> float:
        return base_weight + self.slope * self.growth(x)

    def derivative(self, x: float) -> float:
        """d f_e / d x for the real-valued extension."""
        if self.kind is CostKind.LINEAR:
            return self.slope
        if self.kind is CostKind.QUADRATIC:
            return 2.0 * self.slope * x
        return self.slope / (1.0 + x)

    def step_gain(self, x: int) -> float:
        """``f_e(x + 1) - f_e(x)``; independent of the base weight."""
        return self.slope * (self.growth(x + 1) - self.growth(x))

    def gain_bounds(self, lo: int, hi: int) -> tuple[float, float]:
        """Smallest and largest unit-step gain over steps ``lo -> lo+1 .. hi-1 -> hi``."""
        if hi <= lo:
            raise ValueError("empty step range")
        first, last = self.step_gain(lo), self.step_gain(hi - 1)
        return min(first, last), max(first, last)

    @property
    def has_uniform_gain_floor(self) -> bool:
        """True when every unit step gains at least ``slope``."""
        return self.kind in (CostKind.LINEAR, CostKind.QUADRATIC)

    def sufficient_budget(self, threshold: float) -> int:
        """Smallest integer ``b`` with ``slope * g(b) >= threshold``."""
        target = threshold / self.slope
        if self.kind is CostKind.LINEAR:
            b = math.ceil(target)
        elif self.kind is CostKind.QUADRATIC:
            b = math.ceil(math.sqrt(target))
        else:
            b = math.ceil(math.expm1(target))
        while self.slope * self.growth(b) < threshold:
            b += 1
        return max(b, 0)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "slope": self.slope}


def edge_cost(cost: CostFamily, base_weight: float, x_e: int) -> float:
    return cost.value(base_weight, x_e)


def default_box(cost: CostFamily, threshold: float) -> int:
    """Per-edge budget cap that lets a single edge reach the threshold on its own.

    This is ``ceil(T)`` for the linear and quadratic families at slope >= 1 and
    larger for the log family, whose growth is too slow for ``ceil(T)`` to
    guarantee a feasible instance.
    """
    return max(math.ceil(threshold), cost.sufficient_budget(threshold))


@dataclass(frozen=True)
class Instance:
    graph: WeightedDigraph
    cost: CostFamily
    pairs: tuple[Pair, ...]
    threshold: float
    box: tuple[int, ...] = None
    epsilon_bar: float = 0.5
    name: str = field(default="", compare=False)

    def __post_init__(self):
        pairs = tuple((int(s), int(t)) for s, t in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "threshold", float(self.threshold))
        if not self.threshold > 0:
            raise InvalidInstance("threshold must be positive")
        if not self.epsilon_bar > 0:
            raise InvalidInstance("epsilon_bar must be positive")
        m = self.graph.edge_count
        if self.box is None:
            box = (default_box(self.cost, self.threshold),) * m
        elif isinstance(self.box, (int, float)):
            box = (int(self.box),) * m
        else:
            box = tuple(int(b) for b in self.box)
        if len(box) != m or any(b < 0 for b in box):
            raise InvalidInstance("box must hold one non-negative integer per edge")
        object.__setattr__(self, "box", box)
        if not pairs:
            raise InvalidInstance("at least one critical pair is required")
        n = self.graph.node_count
        for s, t in pairs:
            if not (0 <= s < n and 0 <= t < n) or s == t:
                raise InvalidInstance(f"invalid pair ({s}, {t})")
        reach = {}
        for s, t in pairs:
            if s not in reach:
                dist, _ = dijkstra(self.graph, self.graph.weights, s)
                reach[s] = dist
            if reach[s][t] == math.inf:
                raise Unreachable(s, t)

    @property
    def n(self) -> int:
        return self.graph.node_count

    @property
    def m(self) -> int:
        return self.graph.edge_count

    def zero(self) -> tuple[int, ...]:
        return (0,) * self.m

    def check_perturbation(self, x: Sequence[int]) -> tuple[int, ...]:
        """Validate ``x`` against the box and return it as an int tuple."""
        if len(x) != self.m:
            raise InvalidInstance(f"perturbation has length {len(x)}, expected {self.m}")
        out = tuple(int(v) for v in x)
        for e, (v, b) in enumerate(zip(out, self.box)):
            if v != x[e] or not 0 <= v <= b:
                raise InvalidInstance(f"x[{e}] = {x[e]} outside box [0, {b}]")
        return out


def total_cost(x: Sequence[int]) -> int:
    return sum(int(v) for v in x)


def perturbed_weights(instance: Instance, x: Sequence[int]) -> list[float]:
    f = instance.cost.value
    return [f(w, xe) for w, xe in zip(instance.graph.weights, x)]


def dijkstra(graph: WeightedDigraph, weights: Sequence[float], source: int, target: int | None = None):
    """Single-source Dijkstra with deterministic predecessor choice.

    Among predecessors that tie on distance, the one with the smallest
    ``(node id, edge id)`` wins. Returns ``(dist, pred_edge)``; when ``target``
    is given the search stops once it is settled.
    """
    n = graph.node_count
    dist = [math.inf] * n
    pred_node = [n] * n
    pred_edge = [-1] * n
    done = [False] * n
    dist[source] = 0.0
    heap = [(0.0, source)]
    targets, out_edges = graph.targets, graph.out_edges
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u == target:
            break
        for e in out_edges[u]:
            v = targets[e]
            if done[v]:
                continue
            nd = d + weights[e]
            if nd < dist[v]:
                dist[v] = nd
                pred_node[v] = u
                pred_edge[v] = e
                heapq.heappush(heap, (nd, v))
            elif nd == dist[v] and (u, e) < (pred_node[v], pred_edge[v]):
                pred_node[v] = u
                pred_edge[v] = e
    return dist, pred_edge


def extract_path(graph: WeightedDigraph, pred_edge: Sequence[int], source: int, target: int) -> EdgePath:
    path = []
    v = target
    while v != source:
        e = pred_edge[v]
        if e < 0:
            raise Unreachable(source, target)
        path.append(e)
        v = graph.sources[e]
    path.reverse()
    return tuple(path)


def path_cost(instance: Instance, x: Sequence[int], path: Iterable[int]) -> float:
    f, w = instance.cost.value, instance.graph.weights
    total = 0.0
    for e in path:
        total += f(w[e], x[e])
    return total


def shortest_path(instance: Instance, x: Sequence[int], s: int, t: int) -> tuple[float, EdgePath]:
    weights = perturbed_weights(instance, x)
    dist, pred = dijkstra(instance.graph, weights, s, t)
    if dist[t] == math.inf:
        raise Unreachable(s, t)
    return dist[t], extract_path(instance.graph, pred, s, t)


def shortest_paths(
    instance: Instance, x: Sequence[int], pairs: Sequence[Pair] | None = None
) -> list[tuple[float, EdgePath]]:
    """Shortest path for every pair, sharing one Dijkstra run per source."""
    pairs = instance.pairs if pairs is None else pairs
    weights = perturbed_weights(instance, x)
    trees = {}
    out = []
    for s, t in pairs:
        if s not in trees:
            trees[s] = dijkstra(instance.graph, weights, s)
        dist, pred = trees[s]
        if dist[t] == math.inf:
            raise Unreachable(s, t)
        out.append((dist[t], extract_path(instance.graph, pred, s, t)))
    return out


def shortest_costs(instance: Instance, x: Sequence[int]) -> list[float]:
    return [c for c, _ in shortest_paths(instance, x)]


def feasibility(instance: Instance, x: Sequence[int]) -> tuple[float, list[Pair]]:
    """Fraction of pairs whose exact shortest path reaches the threshold, plus the violators."""
    T = instance.threshold
    violating = [p for p, c in zip(instance.pairs, shortest_costs(instance, x)) if not c >= T]
    rate = (len(instance.pairs) - len(violating)) / len(instance.pairs)
    return rate, violating


def slack(instance: Instance, x: Sequence[int]) -> float:
    """Total shortfall ``sum(max(0, T - SP))`` over the critical pairs."""
    T = instance.threshold
    return sum(max(0.0, T - c) for c in shortest_costs(instance, x))


# --- file formats ---------------------------------------------------------


def read_edge_list(path: str | Path) -> WeightedDigraph:
    edges = []
    max_node = -1
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise InvalidInstance(f"{path}:{lineno}: expected 'source target weight'")
            u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
            if u < 0 or v < 0:
                raise InvalidInstance(f"{path}:{lineno}: node ids must be non-negative")
            edges.append((u, v, w))
            max_node = max(max_node, u, v)
    return WeightedDigraph(max_node + 1, edges)


def format_edge_list(graph: WeightedDigraph) -> str:
    lines = [f"# nodes {graph.node_count} edges {graph.edge_count}"]
    lines += [f"{u} {v} {w!r}" for u, v, w in graph.edges()]
    return "\n".join(lines) + "\n"


def write_edge_list(graph: WeightedDigraph, path: str | Path) -> None:
    Path(path).write_text(format_edge_list(graph), encoding="utf-8")


def instance_to_dict(instance: Instance, graph_path: str) -> dict:
    box = instance.box
    box_field = box[0] if box and all(b == box[0] for b in box) else list(box)
    return {
        "graph_path": graph_path,
        "cost": instance.cost.to_dict(),
        "pairs": [list(p) for p in instance.pairs],
        "threshold": instance.threshold,
        "box": box_field,
        "epsilon_bar": instance.epsilon_bar,
    }


def save_instance(instance: Instance, path: str | Path, graph_path: str | Path | None = None) -> Path:
    """Write the instance JSON and its edge-list sidecar; returns the sidecar path."""
    path = Path(path)
    graph_path = Path(graph_path) if graph_path is not None else path.with_suffix(".edges")
    write_edge_list(instance.graph, graph_path)
    try:
        ref = str(graph_path.resolve().relative_to(path.resolve().parent))
    except ValueError:
        ref = str(graph_path.resolve())
    doc = instance_to_dict(instance, ref)
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return graph_path


def load_instance(path: str | Path) -> Instance:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    try:
        graph_path = Path(doc["graph_path"])
        if not graph_path.is_absolute():
            graph_path = path.parent / graph_path
        graph = read_edge_list(graph_path)
        cost_doc = doc.get("cost", {})
        cost = CostFamily(cost_doc.get("kind", "linear"), float(cost_doc.get("slope", 1.0)))
        return Instance(
            graph=graph,
            cost=cost,
            pairs=tuple(tuple(p) for p in doc["pairs"]),
            threshold=float(doc["threshold"]),
            box=doc.get("box"),
            epsilon_bar=float(doc.get("epsilon_bar", 0.5)),
            name=path.stem,
        )
    except KeyError as exc:
        raise InvalidInstance(f"{path}: missing field {exc}") from None


def instance_fingerprint(instance: Instance) -> str:
    """Content hash identifying an instance independently of file names."""
    doc = instance_to_dict(instance, "")
    doc["box"] = list(instance.box)
    blob = json.dumps(doc, sort_keys=True) + format_edge_list(instance.graph)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]
