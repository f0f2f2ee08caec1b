"""Replay harness for the query lower bound on distributed sampling.

The argument this module mechanizes: fix one machine ``k`` and relocate
its multiset content to other parts of the universe, preserving the
multiplicity pattern.  An algorithm that queries machine ``k`` only a few
times cannot tell the relocated databases apart (its state barely moves
between members), yet sampling correctly from each member requires very
different outputs.  Comparing the drift per query with the spread of the
required outputs yields a lower bound on the number of machine-``k``
queries.

Concretely the harness takes an *oblivious* trace (the sampler emits one;
any externally supplied trace in the same format works), replays it once
against the database with machine ``k`` erased, and once per relocated
member, and accumulates

* ``D_t``: the average squared distance between the member run and the
  erased run after ``t`` machine-``k`` oracle calls,
* the endpoint quantities ``E`` (member run vs. its own ideal output) and
  ``F`` (erased run vs. the members' ideal outputs),

then checks them against the growth and endpoint bounds that drive the
lower bound.  All checks report their slack; checks whose preconditions
fail are reported as not applicable rather than as failures.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .database import DistributedDatabase
from .errors import (
    CapacityError,
    EmptyDatabaseError,
    FamilyTooLargeError,
    HardInputError,
    TraceError,
)
from .oracles import apply_parallel_oracle, apply_sequential_oracle
from .registers import RegisterLayout, StateVector
from .sampler import (
    OracleStep,
    Step,
    apply_step,
    build_schedule,
    build_trace,
    parallel_layout,
    sequential_layout,
)

__all__ = [
    "HardInputParams",
    "HardInputCheck",
    "HardInputFamily",
    "PairTrajectories",
    "PotentialTrace",
    "UhlmannFidelity",
    "BoundCheck",
    "BoundsReport",
    "AdversaryReport",
    "check_hard_input",
    "enumerate_family",
    "simulate_pair",
    "potential_Dt",
    "fidelity_uhlmann",
    "fidelity_eigen",
    "verify_bounds",
    "run_adversary",
]

#: Additive slack granted to every inequality check (float tolerance).
CHECK_ATOL = 1e-9

#: Default applicability margin: the lower-bound constant is not reported
#: when epsilon * M / M_k reaches this value (the constant would be
#: meaningless close to 1/4 anyway).
C0_MARGIN = 0.24

#: Output fidelity below which a run does not count as a working sampler,
#: so the lower bound on its query count does not apply to it.
FIDELITY_FLOOR = 9.0 / 16.0


# ---------------------------------------------------------------------------
# hard inputs and their relocation families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HardInputParams:
    """Target machine and the two hardness constants, both in (0, 1]."""

    k: int
    alpha: float
    beta: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise HardInputError(f"alpha must lie in (0, 1], got {self.alpha!r}")
        if not 0.0 < self.beta <= 1.0:
            raise HardInputError(f"beta must lie in (0, 1], got {self.beta!r}")


@dataclass(frozen=True)
class HardInputCheck:
    """Outcome of the three hard-input conditions for one database.

    ``weight_ok``: machine k holds at least an alpha fraction of all items.
    ``density_ok``: its average multiplicity is at least beta times its max.
    ``capacity_ok``: relocating its content cannot exceed the capacity,
    via ``max_{i, j != k} c_ij + max_i c_ik <= nu``.
    """

    params: HardInputParams
    M: int
    M_k: int
    m_k: int
    kappa_k: int
    other_machines_max: int
    capacity_sum: int
    weight_ok: bool
    density_ok: bool
    capacity_ok: bool

    @property
    def passed(self) -> bool:
        return self.weight_ok and self.density_ok and self.capacity_ok

    def failures(self) -> list[str]:
        out = []
        if not self.weight_ok:
            out.append(
                f"weight: M_k = {self.M_k} < alpha*M = {self.params.alpha * self.M:g}"
            )
        if not self.density_ok:
            out.append(
                f"density: M_k = {self.M_k} < beta*kappa_k*m_k = "
                f"{self.params.beta * self.kappa_k * self.m_k:g}"
            )
        if not self.capacity_ok:
            out.append(
                f"capacity: {self.other_machines_max} + {self.kappa_k} "
                f"= {self.capacity_sum} > nu"
            )
        return out


def check_hard_input(db: DistributedDatabase, params: HardInputParams) -> HardInputCheck:
    """Evaluate the hard-input conditions; diagnostic only, never raises
    on a condition failure (an out-of-range machine index still does)."""
    row = db._check_machine(params.k)
    stats = db.stats
    M = stats.total
    M_k = stats.machine_totals[row]
    m_k = stats.machine_supports[row]
    kappa_k = stats.machine_max_counts[row]
    others = np.delete(db.counts, row, axis=0)
    other_max = int(others.max()) if others.size else 0
    capacity_sum = other_max + kappa_k
    # Density uses the multiplied form so an empty machine does not divide
    # by zero; it then holds vacuously (and the weight condition fails).
    return HardInputCheck(
        params=params,
        M=M,
        M_k=M_k,
        m_k=m_k,
        kappa_k=kappa_k,
        other_machines_max=other_max,
        capacity_sum=capacity_sum,
        weight_ok=M_k >= params.alpha * M,
        density_ok=M_k >= params.beta * kappa_k * m_k,
        capacity_ok=capacity_sum <= db.nu,
    )


@dataclass(frozen=True)
class HardInputFamily:
    """All order-preserving relocations of machine k's content.

    One member per size-``m_k`` subset of the universe: the sorted
    multiplicity pattern of the base support is transplanted onto the
    subset in ascending order, every other machine row kept verbatim.
    """

    base: DistributedDatabase
    k: int
    params: HardInputParams
    check: HardInputCheck
    members: tuple[DistributedDatabase, ...]
    erased: DistributedDatabase

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def expected_size(self) -> int:
        return math.comb(self.base.N, self.check.m_k)


def enumerate_family(
    db: DistributedDatabase,
    params: HardInputParams,
    *,
    limit: int = 10_000,
) -> HardInputFamily:
    """Build the relocation family of a hard input.

    Raises :class:`HardInputError` if the conditions fail,
    :class:`FamilyTooLargeError` if ``C(N, m_k)`` exceeds ``limit``.
    """
    check = check_hard_input(db, params)
    if not check.passed:
        raise HardInputError(
            "database is not a hard input for machine "
            f"{params.k}: " + "; ".join(check.failures())
        )
    m_k = check.m_k
    count = math.comb(db.N, m_k)
    if count > limit:
        raise FamilyTooLargeError(
            f"family has C({db.N}, {m_k}) = {count} members, limit is {limit}"
        )
    row = params.k - 1
    base_row = db.counts[row]
    pattern = base_row[np.flatnonzero(base_row)]  # multiplicities in support order
    members = []
    for subset in itertools.combinations(range(db.N), m_k):
        new_counts = db.counts.copy()
        new_counts[row] = 0
        for position, multiplicity in zip(subset, pattern):
            new_counts[row, position] = multiplicity
        try:
            members.append(db.with_counts(new_counts))
        except CapacityError as exc:
            raise HardInputError(
                "a relocated member violates the capacity bound; the "
                "per-cell capacity condition is not sufficient for this "
                f"database: {exc}"
            ) from exc
    erased_counts = db.counts.copy()
    erased_counts[row] = 0
    erased = db.with_counts(erased_counts)
    return HardInputFamily(
        base=db,
        k=params.k,
        params=params,
        check=check,
        members=tuple(members),
        erased=erased,
    )


# ---------------------------------------------------------------------------
# trace replay
# ---------------------------------------------------------------------------


def _involves_machine_k(step: Step, k: int) -> bool:
    return isinstance(step, OracleStep) and (step.machine is None or step.machine == k)


def _detect_model(trace: Sequence[Step]) -> str:
    for step in trace:
        if isinstance(step, OracleStep) and step.machine is None:
            return "parallel"
    return "sequential"


def _apply_oracle_to_array(
    amplitudes: np.ndarray,
    layout: RegisterLayout,
    step: OracleStep,
    db: DistributedDatabase,
) -> np.ndarray:
    state = StateVector(layout, amplitudes, check=False)
    if step.machine is None:
        apply_parallel_oracle(state, db, dagger=step.dagger)
    else:
        apply_sequential_oracle(state, db, step.machine, dagger=step.dagger)
    return state.amplitudes


@dataclass
class PairTrajectories:
    """Replay data for one family against one trace.

    The erased trajectory is shared by construction; per-member data is
    reduced to squared distances on the fly.  ``t`` indexes machine-k
    oracle calls; snapshots are taken right after each call, before the
    following unitaries.
    """

    family: HardInputFamily
    trace: list[Step]
    model: str
    layout: RegisterLayout
    k_calls: int
    erased_pre: list[np.ndarray] = field(repr=False)
    erased_post: list[np.ndarray] = field(repr=False)
    erased_final: np.ndarray = field(repr=False)
    member_dt_sq: np.ndarray = field(repr=False)  # (members, t_k)
    oracle_diff_sq: np.ndarray = field(repr=False)  # (members, t_k)
    member_finals: list[np.ndarray] = field(repr=False)


def _replay_member(
    member: DistributedDatabase,
    trace: Sequence[Step],
    layout: RegisterLayout,
    k: int,
    erased_pre: Sequence[np.ndarray],
    erased_post: Sequence[np.ndarray],
    erased: DistributedDatabase,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Evolve one member and diff it against the erased trajectory."""
    state = StateVector.from_basis(layout, {})
    dt_sq = np.zeros(len(erased_post))
    odiff_sq = np.zeros(len(erased_post))
    t = 0
    for step in trace:
        if _involves_machine_k(step, k):
            assert isinstance(step, OracleStep)
            member_image = _apply_oracle_to_array(
                erased_pre[t].copy(), layout, step, member
            )
            erased_image = _apply_oracle_to_array(
                erased_pre[t].copy(), layout, step, erased
            )
            odiff_sq[t] = float(np.sum(np.abs(member_image - erased_image) ** 2))
            apply_step(state, step, member)
            dt_sq[t] = float(np.sum(np.abs(state.amplitudes - erased_post[t]) ** 2))
            t += 1
        else:
            apply_step(state, step, member)
    return dt_sq, odiff_sq, state.amplitudes


def simulate_pair(
    family: HardInputFamily,
    trace: Sequence[Step] | None = None,
    *,
    model: str | None = None,
    threads: int = 1,
) -> PairTrajectories:
    """Replay a trace for every member against the shared erased run.

    With no trace given, the base database's own sampling trace is used.
    The trace must be oblivious (it is: oracle positions and unitaries are
    functions of the public parameters only), so the erased trajectory is
    valid for every member simultaneously.
    """
    base = family.base
    if trace is None:
        schedule = build_schedule(base)
        trace = build_trace(schedule, model or "sequential", base.n)
    trace = list(trace)
    if model is None:
        model = _detect_model(trace)
    for step in trace:
        if isinstance(step, OracleStep) and step.machine is not None:
            if not 1 <= step.machine <= base.n:
                raise TraceError(
                    f"trace queries machine {step.machine}, database has {base.n}"
                )
    layout = sequential_layout(base) if model == "sequential" else parallel_layout(base)
    erased = family.erased
    k = family.k

    erased_pre: list[np.ndarray] = []
    erased_post: list[np.ndarray] = []
    state = StateVector.from_basis(layout, {})
    for step in trace:
        if _involves_machine_k(step, k):
            erased_pre.append(state.amplitudes.copy())
            apply_step(state, step, erased)
            erased_post.append(state.amplitudes.copy())
        else:
            apply_step(state, step, erased)
    erased_final = state.amplitudes.copy()
    t_k = len(erased_post)

    def job(member: DistributedDatabase):
        return _replay_member(member, trace, layout, k, erased_pre, erased_post, erased)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, family.members))
    else:
        results = [job(member) for member in family.members]

    member_dt_sq = np.array([r[0] for r in results]).reshape(len(results), t_k)
    oracle_diff_sq = np.array([r[1] for r in results]).reshape(len(results), t_k)
    member_finals = [r[2] for r in results]
    return PairTrajectories(
        family=family,
        trace=trace,
        model=model,
        layout=layout,
        k_calls=t_k,
        erased_pre=erased_pre,
        erased_post=erased_post,
        erased_final=erased_final,
        member_dt_sq=member_dt_sq,
        oracle_diff_sq=oracle_diff_sq,
        member_finals=member_finals,
    )


# ---------------------------------------------------------------------------
# fidelity of a run's output
# ---------------------------------------------------------------------------


@dataclass
class UhlmannFidelity:
    """Best overlap between a run's output and the ideal sample.

    The ideal output leaves the element register carrying weight
    ``c_i / M`` on element ``i`` and places no constraint on the residual
    registers, so the best-case (Uhlmann) fidelity maximizes over the
    residual directions and lands on the closed form

        F = (sum_i sqrt(c_i / M) * ||phi_i||)^2,

    where ``phi_i`` is the residual vector attached to element ``i``.
    ``xi`` holds the normalized residual directions (rows), which realize
    the maximizing purification of the ideal output.
    """

    value: float
    branch_norms: np.ndarray
    branch_overlaps: np.ndarray
    xi: np.ndarray = field(repr=False)
    layout: RegisterLayout = field(repr=False)
    slot: str = "elem"

    def purified_target(self, db: DistributedDatabase) -> np.ndarray:
        """Amplitudes of the ideal-output purification closest to the run."""
        weights = np.sqrt(
            np.asarray(db.stats.totals, dtype=np.float64) / db.stats.total
        )
        branches = weights[:, None] * self.xi
        return _branches_to_flat(branches, self.layout, self.slot)


def _state_branches(amplitudes: np.ndarray, layout: RegisterLayout, slot: str) -> np.ndarray:
    """Reshape flat amplitudes to (slot dimension, residual dimension)."""
    axis = layout.axis(slot)
    tensor = amplitudes.reshape(layout.dims)
    moved = np.moveaxis(tensor, axis, 0)
    return moved.reshape(moved.shape[0], -1)


def _branches_to_flat(branches: np.ndarray, layout: RegisterLayout, slot: str) -> np.ndarray:
    axis = layout.axis(slot)
    rest = [d for i, d in enumerate(layout.dims) if i != axis]
    tensor = branches.reshape([layout.dims[axis]] + rest)
    return np.moveaxis(tensor, 0, axis).reshape(-1)


def fidelity_uhlmann(
    state: StateVector, db: DistributedDatabase, slot: str = "elem"
) -> UhlmannFidelity:
    """Closed-form output fidelity plus the maximizing residual directions."""
    if db.stats.total == 0:
        raise EmptyDatabaseError("fidelity against an empty database is undefined")
    branches = _state_branches(state.amplitudes, state.layout, slot)
    if branches.shape[0] != db.N:
        raise TraceError(
            f"state slot {slot!r} has dimension {branches.shape[0]}, expected {db.N}"
        )
    norms = np.linalg.norm(branches, axis=1)
    weights = np.sqrt(np.asarray(db.stats.totals, dtype=np.float64) / db.stats.total)
    overlaps = weights * norms
    xi = np.zeros_like(branches)
    for i in range(db.N):
        if norms[i] > 0.0:
            xi[i] = branches[i] / norms[i]
        else:
            xi[i, 0] = 1.0  # any unit residual maximizes a zero branch
    return UhlmannFidelity(
        value=float(overlaps.sum() ** 2),
        branch_norms=norms,
        branch_overlaps=overlaps,
        xi=xi,
        layout=state.layout,
        slot=slot,
    )


def fidelity_eigen(state: StateVector, db: DistributedDatabase, slot: str = "elem") -> float:
    """Independent route to the same fidelity via density matrices.

    Builds the element register's reduced density matrix from the full
    state, dephases it in the element basis (the measurement that produces
    the sample), and evaluates the general matrix fidelity
    ``(tr sqrt(sqrt(r) s sqrt(r)))^2`` against the goal distribution using
    eigendecomposition-based square roots throughout.
    """
    if db.stats.total == 0:
        raise EmptyDatabaseError("fidelity against an empty database is undefined")
    branches = _state_branches(state.amplitudes, state.layout, slot)
    rho = branches @ branches.conj().T
    dephased = np.diag(np.real(np.diag(rho)))
    goal = np.diag(np.asarray(db.stats.totals, dtype=np.float64) / db.stats.total)

    def psd_sqrt(matrix: np.ndarray) -> np.ndarray:
        values, vectors = np.linalg.eigh(matrix)
        values = np.clip(values, 0.0, None)
        return (vectors * np.sqrt(values)) @ vectors.conj().T

    root = psd_sqrt(dephased)
    inner = psd_sqrt(root @ goal @ root)
    return float(np.real(np.trace(inner)) ** 2)


# ---------------------------------------------------------------------------
# the potential function and its bounds
# ---------------------------------------------------------------------------


@dataclass
class PotentialTrace:
    """Per-step drift statistics and endpoint quantities for one replay.

    ``D[t]`` is the family-averaged squared distance after ``t``
    machine-k calls (``D[0] = 0``); ``upper_bounds[t] = 4 (m_k/N) t^2``.
    ``E`` and ``F`` compare final states against the ideal-output
    purifications; ``epsilon = 1 - min_T sqrt(fidelity_T)`` measures how
    far the run is from sampling every member exactly.
    """

    k_calls: int
    m_k: int
    N: int
    member_count: int
    D: np.ndarray
    upper_bounds: np.ndarray
    step_increments: np.ndarray
    increment_bound: float
    oracle_step_means: np.ndarray
    oracle_step_bound: float
    member_fidelities: np.ndarray
    epsilon: float
    E: float
    F: float
    C0: float
    C: float

    @property
    def D_final(self) -> float:
        return float(self.D[-1])

    @property
    def min_fidelity(self) -> float:
        return float(self.member_fidelities.min())


def potential_Dt(pair: PairTrajectories) -> PotentialTrace:
    """Reduce replay data to the potential trace and endpoint quantities."""
    family = pair.family
    m_k = family.check.m_k
    N = family.base.N
    count = family.size
    D = np.concatenate([[0.0], pair.member_dt_sq.mean(axis=0)])
    t = np.arange(pair.k_calls + 1, dtype=np.float64)
    upper = 4.0 * (m_k / N) * t**2
    roots = np.sqrt(D)
    increments = np.diff(roots)
    oracle_means = (
        pair.oracle_diff_sq.mean(axis=0) if pair.k_calls else np.zeros(0)
    )

    fidelities = np.zeros(count)
    e_terms = np.zeros(count)
    f_terms = np.zeros(count)
    for idx, member in enumerate(family.members):
        final = StateVector(pair.layout, pair.member_finals[idx], check=False)
        fid = fidelity_uhlmann(final, member)
        fidelities[idx] = fid.value
        ideal = fid.purified_target(member)
        e_terms[idx] = float(np.sum(np.abs(pair.member_finals[idx] - ideal) ** 2))
        f_terms[idx] = float(np.sum(np.abs(pair.erased_final - ideal) ** 2))
    # fidelities can exceed 1 by float dust; the error is never negative
    epsilon = max(0.0, float(1.0 - np.sqrt(fidelities.min())))
    M = family.base.stats.total
    M_k = family.check.M_k
    C0 = epsilon * M / M_k if M_k else math.inf
    root_c0 = math.sqrt(2.0 * C0) if C0 < math.inf else math.inf
    C = max(1.0 / math.sqrt(2.0) - root_c0, 0.0) ** 2
    return PotentialTrace(
        k_calls=pair.k_calls,
        m_k=m_k,
        N=N,
        member_count=count,
        D=D,
        upper_bounds=upper,
        step_increments=increments,
        increment_bound=2.0 * math.sqrt(m_k / N),
        oracle_step_means=oracle_means,
        oracle_step_bound=4.0 * m_k / N,
        member_fidelities=fidelities,
        epsilon=epsilon,
        E=float(e_terms.mean()),
        F=float(f_terms.mean()),
        C0=C0,
        C=C,
    )


# ---------------------------------------------------------------------------
# bound verification
# ---------------------------------------------------------------------------


@dataclass
class BoundCheck:
    """One inequality: ``lhs <= rhs`` (direction noted), with its slack."""

    name: str
    applicable: bool
    passed: bool
    lhs: float
    rhs: float
    slack: float
    note: str = ""

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "applicable": self.applicable,
            "passed": self.passed,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "note": self.note,
        }


@dataclass
class BoundsReport:
    """All checks for one replay; ``passed`` covers applicable checks only."""

    checks: list[BoundCheck]
    epsilon: float
    min_fidelity: float
    fidelity_above_floor: bool

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.applicable)

    def check(self, name: str) -> BoundCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "epsilon": self.epsilon,
            "min_fidelity": self.min_fidelity,
            "fidelity_above_floor": self.fidelity_above_floor,
            "checks": [c.to_json() for c in self.checks],
        }


def _leq(name: str, lhs: float, rhs: float, *, applicable: bool = True, note: str = "") -> BoundCheck:
    ok = bool(lhs <= rhs + CHECK_ATOL)
    return BoundCheck(
        name=name,
        applicable=applicable,
        passed=ok if applicable else True,
        lhs=float(lhs),
        rhs=float(rhs),
        slack=float(rhs - lhs),
        note=note,
    )


def verify_bounds(
    potential: PotentialTrace,
    family: HardInputFamily,
    epsilon: float | None = None,
    *,
    c0_margin: float = C0_MARGIN,
) -> BoundsReport:
    """Check the replayed run against the lower-bound machinery.

    Checks (worst slack reported where a check quantifies over steps):
      growth          D_t <= 4 (m_k/N) t^2 at every step
      step_recurrence sqrt(D_{t+1}) <= sqrt(D_t) + 2 sqrt(m_k/N)
      oracle_step     avg_T ||(O_t^T - O_t^erased) psi_{t-1}||^2 <= 4 m_k/N
      endpoint_error  E <= 2 epsilon
      endpoint_mass   F >= M_k / 2M          (needs M <= beta^2 kappa_k N / 16)
      triangle        D_final >= (sqrt(F) - sqrt(E))^2
      lower_bound     D_final >= C M_k / M   (needs the strict mass condition,
                      alpha > 4 epsilon, min fidelity > 9/16, C0 < margin)
      family_size     |members| = C(N, m_k)
    """
    if epsilon is None:
        epsilon = potential.epsilon
    check = family.check
    params = family.params
    M, M_k = check.M, check.M_k
    checks: list[BoundCheck] = []

    growth_slacks = potential.upper_bounds - potential.D
    # t = 0 is trivially tight (both sides zero); report the worst real step.
    if potential.k_calls:
        worst = 1 + int(np.argmin(growth_slacks[1:]))
    else:
        worst = 0
    checks.append(
        _leq(
            "growth",
            potential.D[worst],
            potential.upper_bounds[worst],
            note=f"worst step t={worst} of {potential.k_calls}",
        )
    )

    if potential.k_calls:
        inc_slacks = potential.increment_bound - potential.step_increments
        worst = int(np.argmin(inc_slacks))
        checks.append(
            _leq(
                "step_recurrence",
                potential.step_increments[worst],
                potential.increment_bound,
                note=f"worst step t={worst}",
            )
        )
        worst = int(np.argmax(potential.oracle_step_means))
        checks.append(
            _leq(
                "oracle_step",
                potential.oracle_step_means[worst],
                potential.oracle_step_bound,
                note=f"worst step t={worst}",
            )
        )
    else:
        checks.append(_leq("step_recurrence", 0.0, potential.increment_bound, note="no calls"))
        checks.append(_leq("oracle_step", 0.0, potential.oracle_step_bound, note="no calls"))

    checks.append(_leq("endpoint_error", potential.E, 2.0 * epsilon))

    mass_threshold = params.beta**2 * check.kappa_k * family.base.N / 16.0
    mass_applicable = M <= mass_threshold
    checks.append(
        _leq(
            "endpoint_mass",
            M_k / (2.0 * M),
            potential.F if mass_applicable else math.inf,
            applicable=mass_applicable,
            note=(
                f"M = {M} vs beta^2 kappa_k N / 16 = {mass_threshold:g}"
                + ("" if mass_applicable else " (condition fails: not applicable)")
            ),
        )
    )

    triangle_rhs = max(math.sqrt(potential.F) - math.sqrt(potential.E), 0.0) ** 2
    checks.append(_leq("triangle", triangle_rhs, potential.D_final))

    fidelity_ok = potential.min_fidelity > FIDELITY_FLOOR
    strict_mass = M < mass_threshold
    alpha_ok = params.alpha > 4.0 * epsilon
    margin_ok = potential.C0 < c0_margin
    lb_applicable = strict_mass and alpha_ok and fidelity_ok and margin_ok
    reasons = []
    if not strict_mass:
        reasons.append(f"M = {M} not < {mass_threshold:g}")
    if not alpha_ok:
        reasons.append(f"alpha = {params.alpha:g} not > 4*epsilon = {4 * epsilon:g}")
    if not fidelity_ok:
        reasons.append(
            f"min fidelity {potential.min_fidelity:g} not above {FIDELITY_FLOOR:g}"
        )
    if not margin_ok:
        reasons.append(f"C0 = {potential.C0:g} in margin band (>= {c0_margin:g})")
    checks.append(
        _leq(
            "lower_bound",
            potential.C * M_k / M if lb_applicable else 0.0,
            potential.D_final,
            applicable=lb_applicable,
            note="; ".join(reasons) if reasons else f"C = {potential.C:g}",
        )
    )

    expected = family.expected_size
    checks.append(
        BoundCheck(
            name="family_size",
            applicable=True,
            passed=family.size == expected,
            lhs=float(family.size),
            rhs=float(expected),
            slack=float(expected - family.size),
            note=f"C({family.base.N}, {check.m_k})",
        )
    )

    return BoundsReport(
        checks=checks,
        epsilon=epsilon,
        min_fidelity=potential.min_fidelity,
        fidelity_above_floor=fidelity_ok,
    )


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------


@dataclass
class AdversaryReport:
    """Family, replay, potential trace, and bound checks in one bundle."""

    family: HardInputFamily
    pair: PairTrajectories
    potential: PotentialTrace
    bounds: BoundsReport
    model: str

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "k": self.family.k,
            "alpha": self.family.params.alpha,
            "beta": self.family.params.beta,
            "members": self.family.size,
            "machine_k_calls": self.potential.k_calls,
            "D_final": self.potential.D_final,
            "E": self.potential.E,
            "F": self.potential.F,
            "epsilon": self.potential.epsilon,
            "C0": self.potential.C0,
            "C": self.potential.C,
            "min_fidelity": self.potential.min_fidelity,
            "bounds": self.bounds.to_json(),
        }


def run_adversary(
    db: DistributedDatabase,
    params: HardInputParams,
    *,
    model: str = "sequential",
    trace: Sequence[Step] | None = None,
    limit: int = 10_000,
    threads: int = 1,
    c0_margin: float = C0_MARGIN,
) -> AdversaryReport:
    """Enumerate the family, replay the trace, and verify all bounds."""
    family = enumerate_family(db, params, limit=limit)
    if trace is None:
        schedule = build_schedule(db)
        trace = build_trace(schedule, model, db.n)
    pair = simulate_pair(family, trace, model=model, threads=threads)
    potential = potential_Dt(pair)
    bounds = verify_bounds(potential, family, c0_margin=c0_margin)
    return AdversaryReport(
        family=family,
        pair=pair,
        potential=potential,
        bounds=bounds,
        model=pair.model,
    )
