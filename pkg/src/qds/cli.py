"""Command-line front end: scenario checks, sampling runs, adversary
replays, and query-count sweeps.

Exit codes follow one convention across subcommands: 0 on success, 2 for
input problems (missing files, schema violations, capacity violations),
3 when a precondition or assertion fails (tolerance exceeded, hard-input
conditions unmet, family too large, a bound check fails, sweep ratio out
of band).

``QDS_THREADS``, when set, overrides any ``--threads`` value.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .adversary import HardInputParams, check_hard_input, run_adversary
from .database import DistributedDatabase, load_scenario
from .errors import (
    CapacityError,
    EmptyDatabaseError,
    FamilyTooLargeError,
    HardInputError,
    QdsError,
    SchemaError,
    TraceError,
)
from .sampler import run_sampling, steps_to_json

DEFAULT_BAND = (1.0, 8.0)

_GRID_KEYS = {"N", "n", "nu", "M", "seed", "band", "model"}


def _read_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from exc


def _load_scenario_file(path: str) -> DistributedDatabase:
    return load_scenario(_read_json(path))


def _resolve_threads(requested: int) -> int:
    env = os.environ.get("QDS_THREADS")
    if env is not None:
        try:
            requested = int(env)
        except ValueError:
            raise SchemaError(f"QDS_THREADS must be an integer, got {env!r}")
    if requested < 1:
        raise SchemaError(f"thread count must be positive, got {requested}")
    return requested


def _fmt(value) -> str:
    """Deterministic, shortest round-trip formatting for CSV cells."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(cell) for cell in row) for row in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_check(args: argparse.Namespace) -> int:
    db = _load_scenario_file(args.scenario)
    stats = db.stats
    print(
        f"ok: N={db.N} n={db.n} nu={db.nu} M={stats.total} "
        f"machine_totals={list(stats.machine_totals)}"
    )
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    db = _load_scenario_file(args.scenario)
    report = run_sampling(db, args.model)
    document = report.to_json()
    document["trace"] = steps_to_json(report.trace)
    document["scenario"] = args.scenario
    document["tolerance"] = args.tolerance
    document["within_tolerance"] = report.final_state_error <= args.tolerance
    with open(args.out, "w", encoding="utf-8") as handle:
        json.dump(document, handle, indent=2)
        handle.write("\n")
    queries = report.queries
    if args.model == "sequential":
        count_line = f"queries={queries['sequential_total']} (sequential)"
    else:
        count_line = (
            f"queries={queries['parallel_rounds']} parallel rounds "
            f"(= {queries['parallel_as_sequential']} sequential-equivalents)"
        )
    print(
        f"model={args.model} iterations={report.schedule.iterations} "
        f"d_applications={report.d_applications} {count_line}"
    )
    print(
        f"final_state_error={report.final_state_error:.3e} "
        f"max_distribution_error={report.max_distribution_error:.3e} "
        f"tolerance={args.tolerance:g}"
    )
    if not document["within_tolerance"]:
        print("final-state error exceeds tolerance", file=sys.stderr)
        return 3
    return 0


def cmd_adversary(args: argparse.Namespace) -> int:
    db = _load_scenario_file(args.scenario)
    params = HardInputParams(k=args.k, alpha=args.alpha, beta=args.beta)
    check = check_hard_input(db, params)
    if not check.passed:
        for line in check.failures():
            print(f"hard-input condition failed: {line}", file=sys.stderr)
        return 3
    threads = _resolve_threads(args.threads)
    report = run_adversary(
        db,
        params,
        model=args.model,
        limit=args.limit,
        threads=threads,
    )
    potential = report.potential
    rows: list[list] = []
    roots = np.sqrt(potential.D)
    for t in range(potential.k_calls + 1):
        rows.append(
            [
                t,
                float(potential.D[t]),
                float(potential.upper_bounds[t]),
                float(roots[t] - roots[t - 1]) if t else None,
                float(potential.oracle_step_means[t - 1]) if t else None,
            ]
        )
    _write_csv(
        args.trace,
        ["t", "D_t", "growth_bound", "step_increment", "oracle_diff_avg"],
        rows,
    )
    with open(args.summary, "w", encoding="utf-8") as handle:
        json.dump(report.to_json(), handle, indent=2)
        handle.write("\n")
    print(
        f"family={report.family.size} members, machine-{args.k} calls={potential.k_calls}, "
        f"model={report.model}"
    )
    print(
        f"D_final={potential.D_final:.6g} E={potential.E:.3e} F={potential.F:.6g} "
        f"epsilon={potential.epsilon:.3e} min_fidelity={potential.min_fidelity:.6g}"
    )
    for c in report.bounds.checks:
        status = "pass" if c.passed else "FAIL"
        if not c.applicable:
            status = "n/a "
        print(f"  [{status}] {c.name}: lhs={c.lhs:.6g} rhs={c.rhs:.6g} {c.note}")
    if not report.bounds.passed:
        print("one or more applicable bound checks failed", file=sys.stderr)
        return 3
    return 0


def generate_scenario(N: int, n: int, nu: int, M: int, seed: int) -> DistributedDatabase | None:
    """Deterministic scenario for one sweep grid point, or None if impossible.

    Multiplicities are drawn uniformly in ``[0, nu // n]`` per (element,
    machine) cell, columns are trimmed to respect the capacity, and random
    single-copy adjustments bring the total to exactly ``M``.  The
    generator is seeded by ``(seed, N, n, nu, M)``, so a grid point's
    scenario never depends on the rest of the grid.
    """
    if M < 1 or M > nu * N:
        return None
    rng = np.random.default_rng([seed, N, n, nu, M])
    cap = max(1, nu // n)
    counts = rng.integers(0, cap + 1, size=(n, N))
    for i in range(N):
        while counts[:, i].sum() > nu:
            machines = np.flatnonzero(counts[:, i])
            counts[int(rng.choice(machines)), i] -= 1
    while counts.sum() > M:
        flat = np.flatnonzero(counts)
        cell = int(rng.choice(flat))
        counts[np.unravel_index(cell, counts.shape)] -= 1
    while counts.sum() < M:
        open_columns = np.flatnonzero(counts.sum(axis=0) < nu)
        if open_columns.size == 0:
            return None
        i = int(rng.choice(open_columns))
        j = int(rng.integers(0, n))
        counts[j, i] += 1
    return DistributedDatabase(N=N, n=n, nu=nu, counts=counts)


def _axis(grid: dict, key: str) -> list[int]:
    values = grid.get(key)
    if (
        not isinstance(values, list)
        or not values
        or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in values)
    ):
        raise SchemaError(f"grid axis {key!r} must be a non-empty list of positive integers")
    return values


def _sweep_point(N: int, n: int, nu: int, M: int, seed: int, model: str):
    db = generate_scenario(N, n, nu, M, seed)
    if db is None:
        return [N, n, nu, M, 0, None, None, None, None]
    report = run_sampling(db, model)
    if model == "sequential":
        measured = report.queries["sequential_total"]
    else:
        measured = report.queries["parallel_as_sequential"]
    scale = n * math.sqrt(nu * N / M)
    ratio = measured / scale
    return [N, n, nu, M, 1, measured, float(scale), float(ratio), None]


def cmd_sweep(args: argparse.Namespace) -> int:
    grid = _read_json(args.grid)
    if not isinstance(grid, dict):
        raise SchemaError("grid document must be an object")
    unknown = set(grid) - _GRID_KEYS
    if unknown:
        raise SchemaError(f"unknown grid key(s): {sorted(unknown)}")
    axes = [_axis(grid, key) for key in ("N", "n", "nu", "M")]
    seed = grid.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise SchemaError(f"seed must be a non-negative integer, got {seed!r}")
    band = grid.get("band", list(DEFAULT_BAND))
    if (
        not isinstance(band, list)
        or len(band) != 2
        or not all(isinstance(b, (int, float)) and not isinstance(b, bool) for b in band)
        or not band[0] < band[1]
    ):
        raise SchemaError(f"band must be [low, high] with low < high, got {band!r}")
    model = grid.get("model", "sequential")
    if model not in ("sequential", "parallel"):
        raise SchemaError(f"model must be sequential or parallel, got {model!r}")
    threads = _resolve_threads(args.threads)

    points = [
        (N, n, nu, M)
        for N in axes[0]
        for n in axes[1]
        for nu in axes[2]
        for M in axes[3]
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(
                pool.map(lambda p: _sweep_point(*p, seed, model), points)
            )
    else:
        rows = [_sweep_point(*p, seed, model) for p in points]

    low, high = float(band[0]), float(band[1])
    valid = 0
    out_of_band = 0
    for row in rows:
        if row[4]:
            valid += 1
            in_band = low <= row[7] <= high
            row[8] = int(in_band)
            if not in_band:
                out_of_band += 1
    _write_csv(
        args.out,
        ["N", "n", "nu", "M", "valid", "queries", "scale", "ratio", "in_band"],
        rows,
    )
    print(
        f"{len(rows)} grid points: {valid} valid, {len(rows) - valid} invalid, "
        f"{out_of_band} outside band [{low:g}, {high:g}]"
    )
    if valid == 0:
        print("no grid point produced a valid scenario", file=sys.stderr)
        return 3
    if out_of_band:
        print("ratio left the configured band", file=sys.stderr)
        return 3
    return 0


# ---------------------------------------------------------------------------
# parser and entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qds",
        description="Sampling and lower-bound experiments on distributed multiset databases.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sample = sub.add_parser("sample", help="run the sampler on a scenario")
    p_sample.add_argument("--scenario", required=True, help="scenario JSON path")
    p_sample.add_argument(
        "--model", choices=("sequential", "parallel"), default="sequential"
    )
    p_sample.add_argument("--tolerance", type=float, default=1e-9)
    p_sample.add_argument("--out", required=True, help="report JSON path")
    p_sample.set_defaults(func=cmd_sample)

    p_adv = sub.add_parser("adversary", help="replay a trace against a relocation family")
    p_adv.add_argument("--scenario", required=True)
    p_adv.add_argument("--k", type=int, required=True, help="target machine (1-based)")
    p_adv.add_argument("--alpha", type=float, required=True)
    p_adv.add_argument("--beta", type=float, required=True)
    p_adv.add_argument("--limit", type=int, default=10_000)
    p_adv.add_argument(
        "--model", choices=("sequential", "parallel"), default="sequential"
    )
    p_adv.add_argument("--threads", type=int, default=1)
    p_adv.add_argument("--trace", required=True, help="per-step CSV path")
    p_adv.add_argument("--summary", required=True, help="summary JSON path")
    p_adv.set_defaults(func=cmd_adversary)

    p_sweep = sub.add_parser("sweep", help="query counts across a parameter grid")
    p_sweep.add_argument("--grid", required=True, help="grid JSON path")
    p_sweep.add_argument("--threads", type=int, default=1)
    p_sweep.add_argument("--out", required=True, help="table CSV path")
    p_sweep.set_defaults(func=cmd_sweep)

    p_check = sub.add_parser("check", help="validate a scenario file")
    p_check.add_argument("--scenario", required=True)
    p_check.set_defaults(func=cmd_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, CapacityError, EmptyDatabaseError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except (HardInputError, FamilyTooLargeError, TraceError) as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return 3
    except QdsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
