"""End-to-end checks of the guarantees the package advertises.

Each test verifies one numbered guarantee on concrete instances and
prints a single ``[PASS]``/``[FAIL]`` summary line (visible when pytest
runs with output capture disabled, which this project enables by
default).  Tolerances are pinned here and nowhere else; the suite is
deterministic.
"""

import math
import time
from itertools import combinations

import numpy as np

from conftest import INSTANCE_A, random_database, random_state
from qds import (
    DistributedDatabase,
    HardInputParams,
    StateVector,
    apply_controlled_oracle,
    apply_parallel_oracle,
    build_schedule,
    build_truncated_trace,
    closing_phases,
    enumerate_family,
    fidelity_eigen,
    fidelity_uhlmann,
    load_scenario,
    run_adversary,
    run_sampling,
    to_document,
    update_multiplicity,
)
from qds.oracles import bank_slot_names
from qds.registers import RegisterLayout, distance, distance_up_to_global_phase
from qds.sampler import bank_leakage, parallel_layout, sequential_layout

STATE_TOL = 1e-9
DIST_TOL = 1e-9
ANCILLA_TOL = 1e-12
PHASE_TOL = 1e-10
HAND_CASE_TOL = 1e-12
BOUND_TOL = 1e-9
ALGEBRA_TOL = 1e-12
FIDELITY_TOL = 1e-9
PARALLEL_DIM_CAP = 2**20
SEQUENTIAL_BUDGET_S = 60.0

_cache: dict = {}


def _report(tag, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}")
    assert ok, f"{tag}: {detail}"


def _scenarios():
    """50 deterministic random scenarios with N <= 16, n <= 3, nu <= 8."""
    if "scenarios" not in _cache:
        rng = np.random.default_rng(20260815)
        out = []
        while len(out) < 50:
            N = int(rng.integers(2, 17))
            n = int(rng.integers(1, 4))
            nu = int(rng.integers(1, 9))
            out.append(random_database(rng, N, n, nu))
        _cache["scenarios"] = out
    return _cache["scenarios"]


def _sequential_runs():
    if "seq" not in _cache:
        start = time.perf_counter()
        _cache["seq"] = [run_sampling(db, "sequential") for db in _scenarios()]
        _cache["seq_elapsed"] = time.perf_counter() - start
    return _cache["seq"]


def _parallel_dim(db):
    core = db.N * (db.nu + 1) * 2
    return core ** (db.n + 1)


def _parallel_runs():
    if "par" not in _cache:
        _cache["par"] = {
            idx: run_sampling(db, "parallel")
            for idx, db in enumerate(_scenarios())
            if _parallel_dim(db) <= PARALLEL_DIM_CAP
        }
    return _cache["par"]


# Hard-input families used by the replay-based checks.  The last entry
# has three machines and runs in the sequential model only; everything
# else runs in both models.
FAMILY_SPECS = [
    ("overlap-k1", INSTANCE_A, 1, 0.5, 0.5, True),
    ("overlap-k2", INSTANCE_A, 2, 0.4, 1.0, True),
    ("point-17", {"N": 17, "nu": 2, "machines": [{"elements": {"1": 2}}]}, 1, 1.0, 1.0, True),
    ("point-18", {"N": 18, "nu": 3, "machines": [{"elements": {"1": 3}}]}, 1, 1.0, 1.0, True),
    ("pair-12", {"N": 12, "nu": 2, "machines": [{"elements": {"1": 1, "2": 1}}]}, 1, 1.0, 1.0, True),
    (
        "disjoint-6",
        {"N": 6, "nu": 3, "machines": [{"elements": {"1": 1, "2": 1}}, {"elements": {"3": 1, "4": 1}}]},
        1, 0.5, 1.0, True,
    ),
    ("skew-8", {"N": 8, "nu": 4, "machines": [{"elements": {"1": 3, "2": 2, "3": 1}}]}, 1, 1.0, 2 / 3, True),
    (
        "wide-6",
        {"N": 6, "nu": 3, "machines": [{"elements": {"1": 1}}, {"elements": {"2": 1, "3": 1, "4": 1}}]},
        2, 0.75, 1.0, True,
    ),
    ("degenerate-4", {"N": 4, "nu": 4, "machines": [{"elements": {"1": 4}}]}, 1, 1.0, 1.0, True),
    (
        "quad-9",
        {"N": 9, "nu": 2, "machines": [{"elements": {"1": 2, "2": 2, "3": 2, "4": 2}}]},
        1, 1.0, 1.0, True,
    ),
    (
        "three-machines",
        {"N": 4, "nu": 3, "machines": [{"elements": {"1": 1}}, {"elements": {"1": 1}}, {"elements": {"4": 1}}]},
        3, 1 / 3, 1.0, False,
    ),
]


def _replays():
    """label -> {model -> AdversaryReport} for the whole family roster."""
    if "replays" not in _cache:
        replays = {}
        for label, doc, k, alpha, beta, in_parallel in FAMILY_SPECS:
            db = load_scenario(doc)
            params = HardInputParams(k=k, alpha=alpha, beta=beta)
            runs = {"sequential": run_adversary(db, params, model="sequential")}
            if in_parallel:
                runs["parallel"] = run_adversary(db, params, model="parallel")
            replays[label] = runs
        _cache["replays"] = replays
    return _cache["replays"]


def _all_runs():
    for label, runs in _replays().items():
        for model, report in runs.items():
            yield label, model, report


def test_01_exact_sampling_sequential():
    runs = _sequential_runs()
    max_state = max(r.final_state_error for r in runs)
    max_dist = 0.0
    for db, rep in zip(_scenarios(), runs):
        stats = db.stats
        weights = np.array(stats.totals) / stats.total
        max_dist = max(max_dist, float(np.max(np.abs(np.array(rep.distribution) - weights))))
    elapsed = _cache["seq_elapsed"]
    ok = max_state <= STATE_TOL and max_dist <= DIST_TOL and elapsed <= SEQUENTIAL_BUDGET_S
    _report(
        "01 exact sampling, sequential",
        ok,
        f"50 scenarios, max state error {max_state:.2e}, "
        f"max distribution error {max_dist:.2e}, {elapsed:.2f}s",
    )


def test_02_exact_sampling_parallel():
    runs = _parallel_runs()
    scenarios = _scenarios()
    seq_runs = _sequential_runs()
    max_gap = 0.0
    max_leak = 0.0
    for idx, par in runs.items():
        db = scenarios[idx]
        leak = bank_leakage(par.final_state, db)
        max_leak = max(max_leak, leak)
        core_dim = seq_runs[idx].final_state.layout.total_dim
        banks_dim = par.final_state.layout.total_dim // core_dim
        core_block = par.final_state.amplitudes.reshape(core_dim, banks_dim)[:, 0]
        core_state = StateVector(seq_runs[idx].final_state.layout, core_block, check=False)
        gap = distance_up_to_global_phase(core_state, seq_runs[idx].final_state)
        max_gap = max(max_gap, gap)
    ok = len(runs) >= 10 and max_gap <= STATE_TOL and max_leak <= ANCILLA_TOL
    _report(
        "02 exact sampling, parallel",
        ok,
        f"{len(runs)}/50 scenarios within the 2^20 dimension cap, "
        f"max gap to sequential {max_gap:.2e}, max ancilla leakage {max_leak:.2e}",
    )


def test_03_exact_query_counts():
    bad = 0
    for db, rep in zip(_scenarios(), _sequential_runs()):
        it = rep.schedule.iterations
        if rep.queries["sequential_total"] != 2 * db.n * (2 * it + 3):
            bad += 1
        if rep.queries["parallel_rounds"] != 0:
            bad += 1
    for idx, rep in _parallel_runs().items():
        it = rep.schedule.iterations
        if rep.queries["parallel_rounds"] != 4 * (2 * it + 3):
            bad += 1
        if rep.queries["sequential_total"] != 0:
            bad += 1
    checked = len(_scenarios()) + len(_parallel_runs())
    _report(
        "03 exact query counts",
        bad == 0,
        f"2n(2m+3) sequential and 4(2m+3) parallel verified on {checked} runs, "
        f"{bad} mismatches",
    )


def test_04_phase_matching():
    worst = 0.0
    degenerate = 0
    for rep in _sequential_runs():
        s = rep.schedule
        if s.degenerate:
            degenerate += 1
        else:
            worst = max(worst, s.residual)

    good, start, deg, _ = closing_phases(math.pi / 4, math.pi / 4)
    hand_ok = (
        not deg
        and abs(good - math.pi / 2) <= HAND_CASE_TOL
        and abs(start - math.pi / 2) <= HAND_CASE_TOL
    )
    good, start, deg, residual = closing_phases(math.pi / 6, math.pi / 2)
    hand_ok = hand_ok and deg and good == 0.0 and start == 0.0 and residual == 0.0

    ok = worst <= PHASE_TOL and hand_ok
    _report(
        "04 phase matching",
        ok,
        f"worst residual {worst:.2e} over {50 - degenerate} non-degenerate scenarios "
        f"({degenerate} degenerate); hand cases theta=pi/4 -> (pi/2, pi/2) and "
        f"theta=pi/6 -> degenerate {'ok' if hand_ok else 'FAILED'}",
    )


def test_05_family_size():
    checked = 0
    bad = 0
    for N in range(1, 13):
        for m in range(1, min(4, N) + 1):
            counts = np.zeros((1, N), dtype=np.int64)
            counts[0, :m] = 1
            counts[0, 0] = 2
            db = DistributedDatabase(N=N, n=1, nu=2, counts=counts)
            family = enumerate_family(db, HardInputParams(k=1, alpha=1.0, beta=0.5))
            checked += 1
            if family.size != math.comb(N, m):
                bad += 1
    _report(
        "05 family size",
        bad == 0,
        f"|family| = C(N, m_k) on {checked} (N, m_k) pairs with N <= 12, m_k <= 4, "
        f"{bad} mismatches",
    )


def _totals(report):
    return report.family.base.stats.total, report.family.check.M_k


def test_06_growth_bound():
    per_model = {"sequential": 0, "parallel": 0}
    worst = -math.inf
    violations = []
    for label, model, report in _all_runs():
        p = report.potential
        t = np.arange(p.k_calls + 1, dtype=float)
        margin = float(np.max(p.D - 4.0 * (p.m_k / p.N) * t**2))
        worst = max(worst, margin)
        if margin > BOUND_TOL:
            violations.append(f"{label}/{model}")
        per_model[model] += 1
    ok = not violations and per_model["sequential"] >= 10 and per_model["parallel"] >= 10
    _report(
        "06 growth bound",
        ok,
        f"D_t <= 4(m_k/N)t^2 on {per_model['sequential']} sequential and "
        f"{per_model['parallel']} parallel families, worst margin {worst:.2e}"
        + (f"; violated by {violations}" if violations else ""),
    )


def test_07_step_recurrence():
    worst_step = -math.inf
    worst_oracle = -math.inf
    runs = 0
    violations = []
    for label, model, report in _all_runs():
        p = report.potential
        roots = np.sqrt(p.D)
        step_margin = float(np.max(np.diff(roots) - 2.0 * math.sqrt(p.m_k / p.N)))
        oracle_margin = float(np.max(p.oracle_step_means - 4.0 * p.m_k / p.N))
        worst_step = max(worst_step, step_margin)
        worst_oracle = max(worst_oracle, oracle_margin)
        if step_margin > BOUND_TOL or oracle_margin > BOUND_TOL:
            violations.append(f"{label}/{model}")
        runs += 1
    _report(
        "07 step recurrence",
        not violations,
        f"sqrt-increment and oracle-difference bounds on {runs} replays, "
        f"worst margins {worst_step:.2e} / {worst_oracle:.2e}"
        + (f"; violated by {violations}" if violations else ""),
    )


def test_08_endpoint_distances():
    max_eps = 0.0
    mass_checked = 0
    violations = []
    for label, model, report in _all_runs():
        p = report.potential
        max_eps = max(max_eps, p.epsilon)
        if p.epsilon > STATE_TOL or p.E > 2.0 * p.epsilon + 1e-12:
            violations.append(f"{label}/{model} error endpoint")
        mass = report.bounds.check("endpoint_mass")
        if mass.applicable:
            mass_checked += 1
            M, M_k = _totals(report)
            if p.F < M_k / (2.0 * M) - BOUND_TOL:
                violations.append(f"{label}/{model} mass endpoint")
        triangle = (math.sqrt(p.F) - math.sqrt(p.E)) ** 2
        if p.D_final < triangle - BOUND_TOL:
            violations.append(f"{label}/{model} triangle")
    ok = not violations and mass_checked >= 2
    _report(
        "08 endpoint distances",
        ok,
        f"E <= 2*eps (eps <= 1e-9) and triangle bound on all replays; "
        f"F >= M_k/2M on {mass_checked} mass-condition replays; max eps {max_eps:.2e}"
        + (f"; violated by {violations}" if violations else ""),
    )


def test_09_lower_bound_and_truncation():
    applicable = {"sequential": 0, "parallel": 0}
    violations = []
    for label, model, report in _all_runs():
        lower = report.bounds.check("lower_bound")
        if lower.applicable:
            applicable[model] += 1
            p = report.potential
            M, M_k = _totals(report)
            if p.D_final < p.C * M_k / M - BOUND_TOL or not lower.passed:
                violations.append(f"{label}/{model}")

    # a sampler cut one iteration short, with no tuned closing step, falls
    # below the 9/16 fidelity floor and must be flagged
    db = load_scenario({"N": 4, "nu": 4, "machines": [{"elements": {"1": 4}}]})
    short = build_truncated_trace(build_schedule(db), "sequential", 1)
    truncated = run_adversary(db, HardInputParams(k=1, alpha=1.0, beta=1.0), trace=short)
    flagged = (
        truncated.potential.min_fidelity < 9 / 16
        and not truncated.bounds.fidelity_above_floor
        and not truncated.bounds.check("lower_bound").applicable
    )
    ok = (
        not violations
        and applicable["sequential"] >= 2
        and applicable["parallel"] >= 2
        and flagged
    )
    _report(
        "09 lower bound",
        ok,
        f"D >= C*M_k/M on {applicable['sequential']}+{applicable['parallel']} applicable "
        f"replays; truncated sampler fidelity "
        f"{truncated.potential.min_fidelity:.3f} < 9/16 flagged: {flagged}"
        + (f"; violated by {violations}" if violations else ""),
    )


def test_10_oracle_algebra_and_dynamic_update():
    rng = np.random.default_rng(777)
    checked = 0
    worst = 0.0
    for db in _scenarios():
        core = db.N * (db.nu + 1) * 2
        if core**db.n > 2**18:
            continue
        slots = []
        for j in db.machines():
            e, c, t = bank_slot_names(j)
            slots += [(e, db.N), (c, db.nu + 1), (t, 2)]
        layout = RegisterLayout(slots)
        for _ in range(20):
            st = random_state(rng, layout)
            via_parallel = st.copy()
            apply_parallel_oracle(via_parallel, db)
            for j in db.machines():
                e, c, t = bank_slot_names(j)
                apply_controlled_oracle(st, db, j, elem=e, count=c, ctrl=t)
            worst = max(worst, distance(via_parallel, st))
        checked += 1

    base = load_scenario(INSTANCE_A)
    updated = update_multiplicity(update_multiplicity(base, 4, 2, +1), 1, 1, -1)
    fresh = load_scenario(to_document(updated))
    rerun = run_sampling(updated)
    reference = run_sampling(fresh)
    update_ok = (
        np.array_equal(rerun.final_state.amplitudes, reference.final_state.amplitudes)
        and rerun.distribution == reference.distribution
        and rerun.queries == reference.queries
    )
    ok = worst <= ALGEBRA_TOL and update_ok and checked >= 10
    _report(
        "10 oracle algebra",
        ok,
        f"parallel = composed controlled oracles on 20 states x {checked} scenarios "
        f"(worst gap {worst:.2e}); dynamic update reproduces fresh load bit-for-bit: "
        f"{update_ok}",
    )


def test_11_fidelity_dual_route():
    rng = np.random.default_rng(4242)
    worst = 0.0
    pairs = 0
    for db in _scenarios():
        layout = sequential_layout(db)
        if layout.total_dim > 2**12:
            continue
        for _ in range(100):
            st = random_state(rng, layout)
            gap = abs(fidelity_uhlmann(st, db).value - fidelity_eigen(st, db))
            worst = max(worst, gap)
            pairs += 1
    _report(
        "11 fidelity dual route",
        worst <= FIDELITY_TOL,
        f"closed form vs eigendecomposition on {pairs} random states, "
        f"worst gap {worst:.2e}",
    )
