"""``qosd`` command line: gen, solve, score, oracle, verify, bench.

Solve records are printed as one JSON object per line; bench writes CSV.
Errors are reported as a JSON object ``{"error": <code>, "message": ...}``
with exit status 2.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from statistics import mean
from typing import Sequence

from qosd.errors import QoSDError
from qosd.estimator import ExactEstimator, NoisyEstimator, default_seed, parse_estimator
from qosd.graph import CostFamily, Instance, feasibility, instance_fingerprint, load_instance, save_instance, slack
from qosd.instancegen import GenSpec, generate, parse_weights
from qosd.oracle import TooLarge, brute_force_opt, constraint_generation_solve, ratio_bound
from qosd.reward import RewardParams, reward_terms
from qosd.stressing import DEFAULT_STEP_CAP, pps, pps_i, sandwich_check

METHODS = ("pps", "pps-i", "oracle-brute", "oracle-congen")

BENCH_RAW_COLUMNS = [
    "instance_id", "dataset", "seed", "noise", "status",
    "pps_feas", "pps_cost", "ppsi_feas", "ppsi_cost", "ppsi_time_s",
]
BENCH_COLUMNS = ["dataset", "noise", "seeds", "failures", "pps_feas", "pps_cost", "ppsi_feas", "ppsi_cost", "ppsi_time_s"]


@dataclass
class RunRecord:
    instance_id: str
    method: str
    estimator: str
    total_budget: int
    feasibility_rate: float
    feasible_exact: bool
    slack: float
    wall_time_ms: float
    seed: int | None
    bound_check: dict | None
    solution: list[int]

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def read_vector(spec: str, length: int, cast=int) -> list:
    """Read ``zero`` or a file holding a JSON list or whitespace-separated numbers."""
    if spec == "zero":
        return [cast(0)] * length
    text = Path(spec).read_text(encoding="utf-8")
    try:
        values = json.loads(text)
    except json.JSONDecodeError:
        values = text.split()
    if len(values) != length:
        raise QoSDError(f"{spec}: expected {length} entries, found {len(values)}")
    return [cast(float(v)) if cast is int else cast(v) for v in values]


def solve(
    instance: Instance,
    method: str,
    estimator=None,
    x0: Sequence[int] | None = None,
    *,
    epsilon_bar: float | None = None,
    step_cap: int = DEFAULT_STEP_CAP,
    delta_cap: int | None = None,
    budget_cap: int | None = None,
) -> RunRecord:
    """Run one solver and build its record; feasibility is re-measured here."""
    if method not in METHODS:
        raise QoSDError(f"unknown method {method!r}")
    estimator = ExactEstimator() if estimator is None else estimator
    x0 = instance.zero() if x0 is None else instance.check_perturbation(x0)
    start = time.perf_counter()
    bound = None
    if method == "pps":
        report = pps(instance, estimator, x0, epsilon_bar=epsilon_bar, step_cap=step_cap, delta_cap=delta_cap)
        x = report.solution
    elif method == "pps-i":
        report = pps_i(instance, x0, epsilon_bar=epsilon_bar, step_cap=step_cap, delta_cap=delta_cap)
        x = report.solution
        check = sandwich_check(instance, x0, x, report.path_slack)
        bound = {"sandwich": asdict(check)}
    else:
        sol = brute_force_opt(instance, budget_cap) if method == "oracle-brute" else constraint_generation_solve(instance)
        x = sol.x_opt
        bound = {"certified": sol.certified, "explored": sol.explored, "rounds": sol.rounds}
    elapsed = (time.perf_counter() - start) * 1000.0
    rate, _ = feasibility(instance, x)
    uses_estimator = method == "pps"
    return RunRecord(
        instance_id=instance_fingerprint(instance),
        method=method,
        estimator=estimator.descriptor if uses_estimator else "exact",
        total_budget=sum(x),
        feasibility_rate=rate,
        feasible_exact=rate == 1.0,
        slack=slack(instance, x),
        wall_time_ms=round(elapsed, 3),
        seed=getattr(estimator, "seed", None) if uses_estimator else None,
        bound_check=bound,
        solution=list(x),
    )


# --- bench --------------------------------------------------------------------


def _bench_one(job: tuple) -> dict:
    spec, eta = job
    row = {"dataset": f"{spec.family}-n{spec.n}", "seed": spec.seed, "noise": eta, "instance_id": ""}
    try:
        instance = generate(spec)
        row["instance_id"] = instance_fingerprint(instance)
        estimator = ExactEstimator() if eta == 0 else NoisyEstimator(eta, spec.seed)
        raw = pps(instance, estimator)
        start = time.perf_counter()
        fixed = pps_i(instance, raw.solution)
        fix_time = time.perf_counter() - start
        row.update(
            status="ok",
            pps_feas=100.0 * raw.feasibility_rate,
            pps_cost=raw.total_budget,
            ppsi_feas=100.0 * feasibility(instance, fixed.solution)[0],
            ppsi_cost=fixed.total_budget,
            ppsi_time_s=round(fix_time, 6),
        )
    except QoSDError as exc:
        row["status"] = exc.code
    return row


def aggregate(rows: Sequence[dict]) -> list[dict]:
    out = []
    keys = []
    for r in rows:
        key = (r["dataset"], r["noise"])
        if key not in keys:
            keys.append(key)
    for dataset, noise in keys:
        group = [r for r in rows if r["dataset"] == dataset and r["noise"] == noise]
        ok = [r for r in group if r["status"] == "ok"]
        agg = {"dataset": dataset, "noise": noise, "seeds": len(group), "failures": len(group) - len(ok)}
        for col in ("pps_feas", "pps_cost", "ppsi_feas", "ppsi_cost", "ppsi_time_s"):
            agg[col] = round(mean(r[col] for r in ok), 6) if ok else ""
        out.append(agg)
    return out


def bench(
    specs: Sequence[GenSpec], etas: Sequence[float], workers: int = 1, raw_out=None
) -> tuple[list[dict], list[dict]]:
    """Noise-sensitivity table: raw PPS under each noise level, then the exact safeguard.

    Rows come back in job order regardless of completion order. When
    ``raw_out`` is a writable file, per-instance rows are flushed as they
    arrive so partial results survive a crash.
    """
    jobs = [(spec, float(eta)) for eta in etas for spec in specs]
    writer = None
    if raw_out is not None:
        writer = csv.DictWriter(raw_out, fieldnames=BENCH_RAW_COLUMNS, restval="")
        writer.writeheader()
    rows = []
    if workers > 1:
        pool = ProcessPoolExecutor(max_workers=workers)
        results = pool.map(_bench_one, jobs)
    else:
        pool = None
        results = map(_bench_one, jobs)
    try:
        for row in results:
            rows.append(row)
            if writer is not None:
                writer.writerow(row)
                raw_out.flush()
    finally:
        if pool is not None:
            pool.shutdown()
    return rows, aggregate(rows)


# --- argument handling ----------------------------------------------------------


def _gen_spec(args, seed: int) -> GenSpec:
    return GenSpec(
        family=args.family,
        n=args.n,
        p=args.p,
        m_attach=args.m,
        k=args.k,
        beta=args.beta,
        weights=parse_weights(args.weights),
        pair_count=args.pairs,
        threshold_pct=args.tpct,
        seed=seed,
        cost=CostFamily(args.cost, args.slope),
        epsilon_bar=args.epsilon_bar,
    )


def _add_gen_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=("er", "ba", "ws"), default="er")
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--p", type=float, default=0.1, help="edge probability (er)")
    p.add_argument("--m", type=int, default=2, help="attachment count (ba)")
    p.add_argument("--k", type=int, default=4, help="ring degree (ws)")
    p.add_argument("--beta", type=float, default=0.1, help="rewiring probability (ws)")
    p.add_argument("--weights", default="unit", help="unit or int:<lo>:<hi>")
    p.add_argument("--pairs", type=int, default=10)
    p.add_argument("--tpct", type=float, default=1.4, help="threshold as a multiple of the max baseline distance")
    p.add_argument("--cost", default="linear", help="linear, quadratic or log")
    p.add_argument("--slope", type=float, default=1.0)
    p.add_argument("--epsilon-bar", type=float, default=0.5)


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--estimator", default="exact", help="exact or noisy:<eta>:<seed>")
    p.add_argument("--epsilon-bar", type=float, default=None)
    p.add_argument("--step-cap", type=int, default=DEFAULT_STEP_CAP)
    p.add_argument("--delta-cap", type=int, default=None)
    p.add_argument("--x0", default="zero", help="'zero' or a file with one integer per edge")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qosd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic instance")
    _add_gen_args(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("solve", help="run a solver and print a run record")
    p.add_argument("instance")
    p.add_argument("--method", choices=METHODS, default="pps-i")
    _add_solver_args(p)
    p.add_argument("--budget-cap", type=int, default=None)

    p = sub.add_parser("score", help="evaluate the smooth reward of a relaxed vector")
    p.add_argument("instance")
    p.add_argument("xhat")
    p.add_argument("--zeta", type=float, default=RewardParams.zeta)
    p.add_argument("--kappa", type=float, default=RewardParams.kappa)
    p.add_argument("--estimator", default="exact")

    p = sub.add_parser("oracle", help="compute a certified optimum")
    p.add_argument("instance")
    p.add_argument("--method", choices=("brute", "congen"), default="brute")
    p.add_argument("--budget-cap", type=int, default=None)

    p = sub.add_parser("verify", help="run the safeguard and check cost bounds")
    p.add_argument("instance")
    p.add_argument("--x0", default="zero")
    p.add_argument("--oracle", choices=("brute", "congen", "none"), default="brute")

    p = sub.add_parser("bench", help="noise-sensitivity benchmark (CSV)")
    _add_gen_args(p)
    p.add_argument("--seeds", type=int, default=20, help="number of instances per noise level")
    p.add_argument("--seed", type=int, default=None, help="first seed")
    p.add_argument("--etas", default="0,0.05,0.1,0.3")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--raw", default=None, help="also write per-instance rows here")
    p.add_argument("-o", "--output", default="-")
    return parser


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def run(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    seed = default_seed() if getattr(args, "seed", None) is None else args.seed

    if args.command == "gen":
        instance = generate(_gen_spec(args, seed))
        sidecar = save_instance(instance, args.output)
        _emit({"instance": args.output, "graph": str(sidecar), "n": instance.n, "m": instance.m,
               "pairs": len(instance.pairs), "threshold": instance.threshold, "instance_id": instance_fingerprint(instance)})
        return 0

    if args.command == "solve":
        instance = load_instance(args.instance)
        x0 = read_vector(args.x0, instance.m)
        record = solve(
            instance, args.method, parse_estimator(args.estimator), x0,
            epsilon_bar=args.epsilon_bar, step_cap=args.step_cap, delta_cap=args.delta_cap, budget_cap=args.budget_cap,
        )
        sys.stdout.write(record.to_json() + "\n")
        if args.method == "pps":
            return 0
        return 0 if record.feasible_exact else 1

    if args.command == "score":
        instance = load_instance(args.instance)
        x_hat = read_vector(args.xhat, instance.m, cast=float)
        _emit(reward_terms(instance, parse_estimator(args.estimator), x_hat, RewardParams(args.zeta, args.kappa)))
        return 0

    if args.command == "oracle":
        instance = load_instance(args.instance)
        if args.method == "brute":
            sol = brute_force_opt(instance, args.budget_cap)
        else:
            sol = constraint_generation_solve(instance)
        _emit({"method": sol.method, "opt_cost": sol.opt_cost, "x_opt": list(sol.x_opt),
               "explored": sol.explored, "rounds": sol.rounds, "certified": sol.certified})
        return 0

    if args.command == "verify":
        instance = load_instance(args.instance)
        x0 = read_vector(args.x0, instance.m)
        report = pps_i(instance, x0)
        out = {"pps_i": report.to_dict(), "sandwich": asdict(sandwich_check(instance, x0, report.solution, report.path_slack))}
        out["ratio"] = None
        if args.oracle != "none":
            try:
                opt = brute_force_opt(instance) if args.oracle == "brute" else constraint_generation_solve(instance)
                bound, holds = ratio_bound(instance, report.total_budget, opt)
                out["ratio"] = {"opt_cost": opt.opt_cost, "bound": bound, "holds": holds}
            except TooLarge as exc:
                out["ratio"] = {"skipped": str(exc)}
        _emit(out)
        ok = report.feasible_exact and (out["ratio"] is None or out["ratio"].get("holds", True))
        return 0 if ok else 1

    if args.command == "bench":
        etas = [float(v) for v in args.etas.split(",")]
        specs = [_gen_spec(args, seed + i) for i in range(args.seeds)]
        raw_fh = open(args.raw, "w", newline="", encoding="utf-8") if args.raw else None
        try:
            _, table = bench(specs, etas, args.workers, raw_fh)
        finally:
            if raw_fh is not None:
                raw_fh.close()
        out_fh = sys.stdout if args.output == "-" else open(args.output, "w", newline="", encoding="utf-8")
        try:
            writer = csv.DictWriter(out_fh, fieldnames=BENCH_COLUMNS)
            writer.writeheader()
            writer.writerows(table)
        finally:
            if out_fh is not sys.stdout:
                out_fh.close()
        return 0
    return 2


def main(argv: Sequence[str] | None = None) -> int:
    try:
        return run(argv)
    except (QoSDError, OSError, ValueError) as exc:
        code = getattr(exc, "code", type(exc).__name__.lower())
        _emit({"error": code, "message": str(exc)})
        return 2


if __name__ == "__main__":
    sys.exit(main())
