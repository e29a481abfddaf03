import math

import pytest
from hypothesis import strategies as st

from qosd.graph import CostFamily, Instance, WeightedDigraph, dijkstra

# node ids: s=0, a=1, b=2, t=3; edge ids 0..3 in this order
DIAMOND_EDGES = [(0, 1, 1.0), (1, 3, 1.0), (0, 2, 1.0), (2, 3, 1.0)]


def make_diamond(threshold: float = 4.0, cost: CostFamily | None = None, box=None) -> Instance:
    return Instance(
        graph=WeightedDigraph(4, DIAMOND_EDGES),
        cost=cost or CostFamily("linear", 1.0),
        pairs=((0, 3),),
        threshold=threshold,
        box=box,
    )


def make_shared_edge(threshold: float = 4.0) -> Instance:
    # s1=0, s2=1, m=2, t=3; edges s1->m, s2->m, m->t
    graph = WeightedDigraph(4, [(0, 2, 1.0), (1, 2, 1.0), (2, 3, 1.0)])
    return Instance(graph=graph, cost=CostFamily("linear", 1.0), pairs=((0, 3), (1, 3)), threshold=threshold)


def make_single_edge(weight: float = 1.0, threshold: float = 5.0) -> Instance:
    return Instance(graph=WeightedDigraph(2, [(0, 1, weight)]), cost=CostFamily(), pairs=((0, 1),), threshold=threshold)


@pytest.fixture
def diamond():
    return make_diamond()


@pytest.fixture
def shared_edge():
    return make_shared_edge()


@st.composite
def small_digraphs(draw, max_nodes: int = 7, max_weight: int = 5):
    n = draw(st.integers(2, max_nodes))
    arcs = [(u, v) for u in range(n) for v in range(n) if u != v]
    chosen = draw(st.lists(st.sampled_from(arcs), min_size=1, max_size=min(len(arcs), 3 * n), unique=True))
    weights = draw(st.lists(st.integers(1, max_weight), min_size=len(chosen), max_size=len(chosen)))
    return WeightedDigraph(n, [(u, v, float(w)) for (u, v), w in zip(chosen, weights)])


@st.composite
def small_instances(draw, kinds=("linear", "quadratic", "log"), max_nodes: int = 7, max_pairs: int = 3):
    graph = draw(small_digraphs(max_nodes=max_nodes))
    reachable = []
    for s in range(graph.node_count):
        dist = dijkstra(graph, graph.weights, s)[0]
        reachable += [(s, t, dist[t]) for t in range(graph.node_count) if t != s and dist[t] < math.inf]
    if not reachable:
        # guarantee one pair: reuse the first arc
        reachable = [(graph.sources[0], graph.targets[0], graph.weights[0])]
    picked = draw(st.lists(st.sampled_from(reachable), min_size=1, max_size=max_pairs, unique=True))
    base = max(d for _, _, d in picked)
    pct = draw(st.sampled_from([1.0, 1.4, 2.0, 2.6]))
    kind = draw(st.sampled_from(kinds))
    slope = 5.0 if kind == "log" else draw(st.sampled_from([1.0, 2.0]))
    return Instance(
        graph=graph,
        cost=CostFamily(kind, slope),
        pairs=tuple((s, t) for s, t, _ in picked),
        threshold=pct * base,
    )


# acceptance outcomes, one line per criterion, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
