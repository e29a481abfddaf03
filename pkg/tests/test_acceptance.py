"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line."""

import json
import math
import random
import statistics

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from qosd.cli import bench, solve
from qosd.estimator import ExactEstimator, NoisyEstimator, parse_estimator
from qosd.graph import CostFamily, feasibility, shortest_costs, slack
from qosd.instancegen import GenSpec, generate, tiny_instance
from qosd.oracle import brute_force_opt, constraint_generation_solve, ratio_bound
from qosd.reward import RewardParams, reward_gradient_fixed_paths, surrogate_reward
from qosd.stressing import PathSet, potential, pps, pps_i, sandwich_check

FAMILY_PARAMS = {"er": dict(p=0.15), "ba": dict(m_attach=2), "ws": dict(k=4, beta=0.2)}
GRID_COSTS = [CostFamily("linear", 1.0), CostFamily("quadratic", 1.0), CostFamily("log", 5.0)]
NOISE_LEVELS = [0.05, 0.10, 0.30]


def report(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")


def grid_spec(i: int) -> GenSpec:
    family = ["er", "ba", "ws"][i % 3]
    return GenSpec(
        family=family,
        n=[16, 32, 64][(i // 3) % 3],
        pair_count=[3, 10][(i // 9) % 2],
        cost=GRID_COSTS[(i // 18) % 3],
        threshold_pct=[1.4, 2.0, 2.6][(i // 54) % 3],
        seed=i,
        **FAMILY_PARAMS[family],
    )


@pytest.fixture(scope="module")
def safeguard_runs():
    """200 instances x four starting vectors, each repaired by the exact safeguard."""
    runs = []
    for i in range(200):
        inst = generate(grid_spec(i))
        starts = [("zero", inst.zero())]
        for eta in NOISE_LEVELS:
            starts.append((f"noisy:{eta}", pps(inst, NoisyEstimator(eta, seed=i)).solution))
        for label, x0 in starts:
            runs.append((i, label, inst, x0, pps_i(inst, x0)))
    return runs


def test_criterion_1_safeguard_always_feasible(safeguard_runs):
    rates = [feasibility(inst, r.solution)[0] for _, _, inst, _, r in safeguard_runs]
    bad = sum(rate != 1.0 for rate in rates)
    ok = len(rates) == 800 and bad == 0
    report(1, ok, f"{len(rates) - bad}/{len(rates)} runs exactly feasible after the safeguard")
    assert ok


def test_criterion_2_approximation_ratio():
    holds = 0
    worst = 0.0
    for seed in range(100):
        inst = tiny_instance(seed)
        assert inst.n <= 6 and max(inst.box) <= 4 and inst.epsilon_bar == 0.5
        opt = brute_force_opt(inst)
        algo = pps_i(inst).total_budget
        bound, ok = ratio_bound(inst, algo, opt)
        holds += ok
        if opt.opt_cost:
            worst = max(worst, algo / opt.opt_cost)
    report(2, holds == 100, f"ratio bound held in {holds}/100 cases, worst observed ratio {worst:.3f}")
    assert holds == 100


def test_criterion_3_oracles_agree():
    matches = 0
    for seed in range(1000, 1050):
        inst = tiny_instance(seed)
        matches += brute_force_opt(inst).opt_cost == constraint_generation_solve(inst).opt_cost
    report(3, matches == 50, f"{matches}/50 exact matches")
    assert matches == 50


def test_criterion_4_cost_sandwich(safeguard_runs):
    runs = lower_fail = upper_fail = 0
    for _, _, inst, x0, r in safeguard_runs:
        if not inst.cost.has_uniform_gain_floor:
            continue
        check = sandwich_check(inst, x0, r.solution, r.path_slack)
        runs += 1
        lower_fail += not check.lower_ok
        upper_fail += not check.upper_ok
    ok = runs > 0 and lower_fail == 0 and upper_fail == 0
    report(4, ok, f"{runs} bounded-gain runs: lower bound failed {lower_fail}, upper bound failed {upper_fail}")
    assert lower_fail == 0, f"S/C_max <= added violated on {lower_fail}/{runs} runs"
    assert upper_fail == 0, f"added <= S_path/c_min violated on {upper_fail}/{runs} runs"


def test_criterion_5_noise_trend():
    etas = [0.0, 0.05, 0.10, 0.30]
    specs = [GenSpec("er", n=64, p=0.08, pair_count=50, threshold_pct=1.4, seed=s) for s in range(20)]
    _, table = bench(specs, etas)
    feas = [row["pps_feas"] for row in table]
    cost = [row["pps_cost"] for row in table]
    monotone = all(a >= b for a, b in zip(feas, feas[1:]))
    ok = monotone and cost[-1] > cost[0] and all(row["failures"] == 0 for row in table)
    report(5, ok, "feasibility " + " -> ".join(f"{v:.2f}" for v in feas) + "; budget " + " -> ".join(f"{v:.1f}" for v in cost))
    assert monotone
    assert cost[-1] > cost[0]
    assert all(row["ppsi_feas"] == 100.0 for row in table)


def _central_difference(fn, x, h=1e-5):
    grad = np.zeros_like(x)
    for i in range(len(x)):
        up, down = x.copy(), x.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (fn(up) - fn(down)) / (2 * h)
    return grad


def test_criterion_6_gradient_check():
    rng = random.Random(2024)
    worst = 0.0
    kinds = []
    for draw in range(100):
        cost = GRID_COSTS[draw % 3]
        family = ["er", "ba", "ws"][(draw // 3) % 3]
        inst = generate(GenSpec(family, n=12, pair_count=4, seed=draw, cost=cost, **FAMILY_PARAMS[family]))
        x_int = [rng.randint(0, min(b, 3)) for b in inst.box]
        pathset = PathSet.build(inst, x_int, ExactEstimator())
        x_hat = np.array([rng.uniform(0.0, 3.0) for _ in range(inst.m)])
        params = RewardParams(zeta=rng.uniform(0.5, 5.0), kappa=rng.uniform(0.0, 0.2))
        analytic = reward_gradient_fixed_paths(inst, pathset, x_hat, params)
        numeric = _central_difference(lambda z: surrogate_reward(inst, pathset, z, params), x_hat)
        scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
        rel = np.linalg.norm(analytic - numeric) / scale if scale > 0 else 0.0
        worst = max(worst, rel)
        kinds.append(cost.kind.value)
    ok = worst < 1e-5 and set(kinds) == {"linear", "quadratic", "log"}
    report(6, ok, f"max relative error {worst:.2e} over 100 draws")
    assert ok


def test_criterion_7_monotonicity():
    rng = random.Random(7)
    pairs_checked = sp_bad = slack_bad = 0
    instances = [generate(grid_spec(i)) for i in range(0, 200, 10)]
    while pairs_checked < 1000:
        inst = instances[pairs_checked % len(instances)]
        x = [rng.randint(0, b) if rng.random() < 0.3 else 0 for b in inst.box]
        y = [rng.randint(v, b) if rng.random() < 0.3 else v for v, b in zip(x, inst.box)]
        cx, cy = shortest_costs(inst, x), shortest_costs(inst, y)
        sp_bad += any(a > b + 1e-9 for a, b in zip(cx, cy))
        for z in (x, y):
            slack_bad += (slack(inst, z) == 0.0) != (feasibility(inst, z)[0] == 1.0)
        pairs_checked += 1

    trajectory_bad = ceiling_bad = steps = 0
    for inst in instances:
        for estimator in (ExactEstimator(), NoisyEstimator(0.3, seed=1)):
            trace = []
            pps(inst, estimator, on_step=trace.append)
            steps += len(trace)
            for prev, cur in zip(trace, trace[1:]):
                if cur.round == prev.round and cur.potential < prev.potential - 1e-9:
                    trajectory_bad += 1
            ceiling_bad += sum(s.potential > s.ceiling + 1e-9 for s in trace)
    # potential of a fresh path set is clamped too
    inst = instances[0]
    ps = PathSet.build(inst, inst.box, ExactEstimator())
    ceiling_bad += potential(ps, inst) > len(ps) * inst.threshold + 1e-9

    ok = not (sp_bad or slack_bad or trajectory_bad or ceiling_bad)
    report(
        7, ok,
        f"{pairs_checked} budget pairs (SP violations {sp_bad}, slack/feasibility mismatches {slack_bad}); "
        f"{steps} trajectory steps (decreases {trajectory_bad}, above ceiling {ceiling_bad})",
    )
    assert ok


def _record_bytes(record) -> str:
    data = json.loads(record.to_json())
    data.pop("wall_time_ms")
    return json.dumps(data, sort_keys=True)


def test_criterion_8_determinism():
    configs = [("pps", "exact"), ("pps", "noisy:0.1:{seed}"), ("pps", "noisy:0.3:{seed}"), ("pps-i", "exact"), ("oracle-brute", "exact")]
    cases = identical = 0
    for k in range(4):
        inst = tiny_instance(500 + k) if k % 2 else generate(GenSpec("ws", n=16, pair_count=5, seed=k, k=4))
        for method, est in configs:
            if method == "oracle-brute" and k % 2 == 0:
                method = "oracle-congen"
            spec = est.format(seed=k)
            a = solve(inst, method, parse_estimator(spec))
            b = solve(inst, method, parse_estimator(spec))
            cases += 1
            identical += _record_bytes(a) == _record_bytes(b)
    ok = cases == 20 and identical == 20
    report(8, ok, f"{identical}/{cases} repeated runs byte-identical")
    assert ok
