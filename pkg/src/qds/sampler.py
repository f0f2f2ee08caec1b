"""Coordinator-side sampling of a distributed multiset database.

The goal state carries amplitude ``sqrt(c_i / M)`` on element ``i``, where
``c_i`` is the element's total multiplicity and ``M`` the database size.
It is produced with zero error by amplitude amplification around a
*distributing operator* ``D`` that, on ``|i, 0, 0>``, splits the flag slot
into ``sqrt(c_i/nu)|0> + sqrt((nu-c_i)/nu)|1>``.  Post-selecting flag 0
yields exactly the goal distribution, and the amplification schedule below
removes the post-selection at no error.

Two implementations of ``D`` are provided:

* sequential: query machines ``1..n`` in turn to accumulate the total
  count, rotate the flag, then uncompute (``2n`` queries per ``D``);
* parallel: fan the element out to per-machine register banks, let all
  machines answer in one round, fold the partial counts together, and
  uncompute (4 parallel rounds per ``D``, regardless of ``n``).

The amplification step is ``Q(good, start) = -D S_start D* S_good`` where
``S_good`` phases the flag-0 subspace and ``S_start`` phases the prepared
uniform state.  With the initial angle ``theta = asin(sqrt(M/(nu N)))``
the schedule runs ``floor(m)`` full-pi steps, ``m = pi/(4 theta) - 1/2``,
and one final step whose two phases are solved so the rotation lands
exactly on the goal state.

Algorithms are represented as *traces*: flat lists of steps, each either
an oracle call or a named input-independent unitary.  A trace depends only
on the public parameters ``(N, n, nu, M)``, never on which elements the
machines actually hold, which is what makes replaying it against modified
databases meaningful.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.optimize

from .database import DistributedDatabase, target_state
from .errors import (
    AncillaContaminationError,
    EmptyDatabaseError,
    PhaseSolveError,
    TraceError,
)
from .oracles import (
    QueryCounter,
    apply_controlled_oracle,
    apply_parallel_oracle,
    apply_sequential_oracle,
    bank_slot_names,
)
from .registers import (
    RegisterLayout,
    StateVector,
    apply_basis_map,
    apply_conditioned_rotation,
    apply_fourier,
    apply_phase,
    branch_norms_by_elem,
    distance_up_to_global_phase,
)

__all__ = [
    "AASchedule",
    "SamplerReport",
    "OracleStep",
    "UnitaryStep",
    "sequential_layout",
    "parallel_layout",
    "build_schedule",
    "schedule_from_parameters",
    "closing_phases",
    "build_truncated_trace",
    "apply_D_sequential",
    "apply_D_parallel",
    "apply_S_chi",
    "apply_S_pi",
    "bank_leakage",
    "build_trace",
    "d_step_sequence",
    "execute_trace",
    "apply_step",
    "steps_to_json",
    "steps_from_json",
    "run_sampling",
]

#: Residual tolerance for the closing-phase matching equation.
PHASE_RESIDUAL_TOL = 1e-10

#: Below this, the closing rotation is a half turn and no phases are needed.
DEGENERATE_COT_TOL = 1e-12

#: Allowed weight outside the all-zero ancilla subspace.
ANCILLA_TOL = 1e-12


# ---------------------------------------------------------------------------
# layouts
# ---------------------------------------------------------------------------


def sequential_layout(db: DistributedDatabase) -> RegisterLayout:
    """Element, shared counter (mod nu+1), and a two-level flag."""
    return RegisterLayout([("elem", db.N), ("count", db.nu + 1), ("flag", 2)])


def parallel_layout(db: DistributedDatabase) -> RegisterLayout:
    """Sequential slots plus one (elem, count, ctrl) bank per machine."""
    slots: list[tuple[str, int]] = [("elem", db.N), ("count", db.nu + 1), ("flag", 2)]
    for j in db.machines():
        e, c, b = bank_slot_names(j)
        slots.extend([(e, db.N), (c, db.nu + 1), (b, 2)])
    return RegisterLayout(slots)


def bank_leakage(state: StateVector, db: DistributedDatabase) -> float:
    """Norm of the component with any ancilla bank away from zero.

    Summed directly over the outside amplitudes; subtracting two
    near-unit masses would drown real leakage in rounding noise.
    """
    layout = state.layout
    index: list = [slice(None)] * len(layout.dims)
    for j in db.machines():
        for name in bank_slot_names(j):
            index[layout.axis(name)] = 0
    outside = state.tensor().copy()
    outside[tuple(index)] = 0.0
    return float(np.linalg.norm(outside))


# ---------------------------------------------------------------------------
# schedule
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AASchedule:
    """Amplification schedule for one database.

    Attributes:
        theta: initial rotation angle, ``asin(sqrt(M / (nu N)))``.
        m_tilde: ideal (fractional) number of full steps.
        iterations: ``floor(m_tilde)``; number of half-turn steps.
        closing_angle: angle reached after the full steps plus the final
            application, ``(2*iterations + 1) * theta``.
        good_phase: phase applied to the flag-0 subspace in the final step.
        start_phase: phase applied to the prepared state in the final step.
        degenerate: True when the closing angle is already a quarter turn
            and the final step needs no phases at all.
        residual: achieved residual of the phase matching equation.
    """

    theta: float
    m_tilde: float
    iterations: int
    closing_angle: float
    good_phase: float
    start_phase: float
    degenerate: bool
    residual: float

    @property
    def d_applications(self) -> int:
        """D or D-adjoint applications in the full run, ``2*iterations + 3``."""
        return 2 * self.iterations + 3

    def sequential_queries(self, n: int) -> int:
        return 2 * n * self.d_applications

    def parallel_rounds(self) -> int:
        return 4 * self.d_applications


def _matching_residual(theta: float, closing: float, good: float, start: float) -> float:
    """|cot(closing) - e^{i good} sin(2 theta) / (-cos(2 theta) + i cot(start/2))|."""
    cot_l = math.cos(closing) / math.sin(closing)
    half = start / 2.0
    cot_half = math.cos(half) / math.sin(half)
    z = complex(-math.cos(2.0 * theta), cot_half)
    return abs(cmath.exp(1j * good) * math.sin(2.0 * theta) / z - cot_l)


def closing_phases(theta: float, closing: float) -> tuple[float, float, bool, float]:
    """Phases of the final amplification step for a given closing angle.

    Returns ``(good_phase, start_phase, degenerate, residual)``.  When the
    closing angle is already a quarter turn (its cotangent below
    ``DEGENERATE_COT_TOL``) the step needs no phases and ``degenerate`` is
    set.  Otherwise the phases solve the matching condition; if the closed
    form misses the residual tolerance a 2-d root finder takes over, and
    :class:`PhaseSolveError` signals defeat.
    """
    cot_l = math.cos(closing) / math.sin(closing)
    if cot_l <= DEGENERATE_COT_TOL:
        return 0.0, 0.0, True, 0.0
    sin2t = math.sin(2.0 * theta)
    cos2t = math.cos(2.0 * theta)
    tan_l = math.tan(closing)
    cot_half = math.sqrt(max(sin2t * sin2t * tan_l * tan_l - cos2t * cos2t, 0.0))
    start = 2.0 * math.atan2(1.0, cot_half)
    good = math.atan2(cot_half, -cos2t)
    residual = _matching_residual(theta, closing, good, start)
    if residual > PHASE_RESIDUAL_TOL:
        def equations(x: np.ndarray) -> list[float]:
            g, s = x
            half = s / 2.0
            z = complex(-cos2t, math.cos(half) / math.sin(half))
            value = cmath.exp(1j * g) * sin2t - cot_l * z
            return [value.real, value.imag]

        solution = scipy.optimize.root(equations, x0=[good, start], tol=1e-14)
        if solution.success:
            good, start = (float(v) for v in solution.x)
            residual = _matching_residual(theta, closing, good, start)
    if residual > PHASE_RESIDUAL_TOL:
        raise PhaseSolveError(
            f"phase matching residual {residual} exceeds {PHASE_RESIDUAL_TOL}"
        )
    return good, start, False, residual


def schedule_from_parameters(N: int, nu: int, M: int) -> AASchedule:
    """Solve the amplification schedule from the public parameters.

    The closing phases satisfy the matching condition that makes the last
    rotation land exactly on the goal state: with ``L`` the closing angle,

        cot(L) = e^{i good} sin(2 theta) / (-cos(2 theta) + i cot(start/2)).

    Taking ``good`` equal to the argument of the denominator makes the
    right side real, and the magnitude condition fixes ``cot(start/2)``.
    A two-dimensional root finder backs up the closed form in case of
    numerical trouble; failure to reach the residual tolerance raises
    :class:`PhaseSolveError`.
    """
    if M <= 0:
        raise EmptyDatabaseError("cannot schedule sampling from an empty database")
    ratio = M / (nu * N)
    if ratio > 1.0 + 1e-12:
        raise PhaseSolveError(f"M = {M} exceeds nu*N = {nu * N}")
    theta = math.asin(math.sqrt(min(ratio, 1.0)))
    m_tilde = math.pi / (4.0 * theta) - 0.5
    # The tiny nudge keeps an exactly-integer m_tilde (a half-turn landing
    # exactly on the goal) from being floored one step short by rounding.
    iterations = max(0, math.floor(m_tilde + 1e-9))
    closing = (2 * iterations + 1) * theta
    # Sanity: the closing angle sits within a final rotation of the target.
    if not (math.pi / 2 - 2 * theta - 1e-8 <= closing <= math.pi / 2 + 1e-8):
        raise PhaseSolveError(f"closing angle {closing} out of range for theta {theta}")
    good, start, degenerate, residual = closing_phases(theta, closing)
    return AASchedule(
        theta=theta,
        m_tilde=m_tilde,
        iterations=iterations,
        closing_angle=closing,
        good_phase=good,
        start_phase=start,
        degenerate=degenerate,
        residual=residual,
    )


def build_schedule(db: DistributedDatabase) -> AASchedule:
    """Amplification schedule for a database (depends only on N, nu, M)."""
    return schedule_from_parameters(db.N, db.nu, db.stats.total)


# ---------------------------------------------------------------------------
# trace steps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleStep:
    """A query: to one machine (``machine`` 1-based) or, with ``machine``
    None, one parallel round in which every machine acts on its bank."""

    machine: int | None
    dagger: bool = False


@dataclass(frozen=True)
class UnitaryStep:
    """A named input-independent unitary with numeric parameters."""

    name: str
    params: tuple[tuple[str, float], ...] = ()

    @classmethod
    def make(cls, name: str, **params: float) -> "UnitaryStep":
        return cls(name, tuple(sorted(params.items())))

    def param(self, key: str, default: float | None = None) -> float:
        for k, v in self.params:
            if k == key:
                return v
        if default is None:
            raise TraceError(f"unitary {self.name!r} missing parameter {key!r}")
        return default


Step = OracleStep | UnitaryStep

_UNITARY_NAMES = {
    "prepare",
    "flag_rotation",
    "phase_flag",
    "phase_start",
    "global_phase",
    "fan_out",
    "fan_in",
    "ctrl_flip",
    "fold",
}


def steps_to_json(steps: Sequence[Step]) -> list[dict]:
    """Serializable form of a trace (lists of one-key step objects)."""
    out: list[dict] = []
    for step in steps:
        if isinstance(step, OracleStep):
            machine = "all" if step.machine is None else step.machine
            out.append({"oracle": {"machine": machine, "dagger": step.dagger}})
        else:
            body: dict = {"name": step.name}
            body.update({k: v for k, v in step.params})
            out.append({"unitary": body})
    return out


def steps_from_json(document: Sequence[Mapping]) -> list[Step]:
    """Parse a trace document; malformed steps raise :class:`TraceError`."""
    steps: list[Step] = []
    for pos, entry in enumerate(document):
        if not isinstance(entry, Mapping) or len(entry) != 1:
            raise TraceError(f"step {pos}: expected a single-key object")
        kind, body = next(iter(entry.items()))
        if not isinstance(body, Mapping):
            raise TraceError(f"step {pos}: body must be an object")
        if kind == "oracle":
            machine = body.get("machine", "all")
            dagger = body.get("dagger", False)
            if machine == "all" or machine is None:
                parsed: int | None = None
            elif isinstance(machine, int) and not isinstance(machine, bool) and machine >= 1:
                parsed = machine
            else:
                raise TraceError(f"step {pos}: bad machine {machine!r}")
            if not isinstance(dagger, bool):
                raise TraceError(f"step {pos}: dagger must be a boolean")
            extra = set(body) - {"machine", "dagger"}
            if extra:
                raise TraceError(f"step {pos}: unknown oracle key(s) {sorted(extra)}")
            steps.append(OracleStep(parsed, dagger))
        elif kind == "unitary":
            name = body.get("name")
            if name not in _UNITARY_NAMES:
                raise TraceError(f"step {pos}: unknown unitary {name!r}")
            params = {}
            for key, value in body.items():
                if key == "name":
                    continue
                if isinstance(value, bool):
                    params[key] = float(value)
                elif isinstance(value, (int, float)) and math.isfinite(value):
                    params[key] = float(value)
                else:
                    raise TraceError(f"step {pos}: bad parameter {key}={value!r}")
            steps.append(UnitaryStep.make(name, **params))
        else:
            raise TraceError(f"step {pos}: unknown step kind {kind!r}")
    return steps


# ---------------------------------------------------------------------------
# the distributing operator and phase gates
# ---------------------------------------------------------------------------


def _flag_rotation(state: StateVector, nu: int, *, dagger: bool = False) -> StateVector:
    """Rotate the flag by arccos(sqrt(c/nu)) conditioned on the count c."""
    sign = -1.0 if dagger else 1.0

    def angle(coords: tuple[int, ...]) -> float:
        c = min(coords[0], nu)
        return sign * math.acos(math.sqrt(c / nu))

    return apply_conditioned_rotation(state, ("count",), "flag", angle)


def apply_S_chi(state: StateVector, phase: float) -> StateVector:
    """Phase the flag-0 ("good") subspace by exp(i*phase)."""
    return apply_phase(state, ("flag",), lambda c: phase if c[0] == 0 else 0.0)


def apply_S_pi(state: StateVector, phase: float) -> StateVector:
    """Phase the prepared uniform component by exp(i*phase).

    Implemented by rotating the element slot into the Fourier basis,
    phasing the (elem=0, flag=0) coordinate, and rotating back; the count
    slot and any ancilla banks are left alone.
    """
    apply_fourier(state, "elem", inverse=True)
    apply_phase(
        state,
        ("elem", "flag"),
        lambda c: phase if c == (0, 0) else 0.0,
    )
    return apply_fourier(state, "elem")


def apply_D_sequential(
    state: StateVector,
    db: DistributedDatabase,
    *,
    dagger: bool = False,
    counter: QueryCounter | None = None,
) -> StateVector:
    """Distributing operator via one round trip over the machines.

    Queries machines 1..n to accumulate the total count, rotates the flag
    (inverse rotation for the adjoint), then uncomputes the count with the
    adjoint queries in reverse order.  Costs ``2n`` sequential queries.
    """
    for j in db.machines():
        apply_sequential_oracle(state, db, j, counter=counter)
    _flag_rotation(state, db.nu, dagger=dagger)
    for j in reversed(list(db.machines())):
        apply_sequential_oracle(state, db, j, dagger=True, counter=counter)
    return state


def _fan_out(state: StateVector, db: DistributedDatabase, *, inverse: bool = False) -> StateVector:
    """Copy the element into each bank: elem_j += elem (mod N)."""
    sign = -1 if inverse else 1
    for j in db.machines():
        elem_j = bank_slot_names(j)[0]
        apply_basis_map(
            state,
            ("elem", elem_j),
            lambda c: (c[0], (c[1] + sign * c[0]) % db.N),
        )
    return state


def _ctrl_flip(state: StateVector, db: DistributedDatabase) -> StateVector:
    """Toggle every machine's control bit."""
    for j in db.machines():
        ctrl_j = bank_slot_names(j)[2]
        apply_basis_map(state, (ctrl_j,), lambda c: (1 - c[0],))
    return state


def _fold(state: StateVector, db: DistributedDatabase, *, inverse: bool = False) -> StateVector:
    """Accumulate bank counts into the shared counter: count += sum_j count_j."""
    mods = db.nu + 1
    sign = -1 if inverse else 1
    for j in db.machines():
        count_j = bank_slot_names(j)[1]
        apply_basis_map(
            state,
            ("count", count_j),
            lambda c: ((c[0] + sign * c[1]) % mods, c[1]),
        )
    return state


def _parallel_count_phase(
    state: StateVector,
    db: DistributedDatabase,
    *,
    unfold: bool,
    counter: QueryCounter | None,
) -> StateVector:
    """Add (or subtract) the total count via one fan-out/query/fold sweep.

    This is the parallel-model replacement for the sequential query chain:
    two parallel rounds bracket the fold so the banks come back clean.
    """
    _fan_out(state, db)
    _ctrl_flip(state, db)
    apply_parallel_oracle(state, db, counter=counter)
    _fold(state, db, inverse=unfold)
    apply_parallel_oracle(state, db, dagger=True, counter=counter)
    _ctrl_flip(state, db)
    _fan_out(state, db, inverse=True)
    return state


def apply_D_parallel(
    state: StateVector,
    db: DistributedDatabase,
    *,
    dagger: bool = False,
    counter: QueryCounter | None = None,
) -> StateVector:
    """Distributing operator via per-machine banks; 4 parallel rounds.

    The banks must enter clean (all zero); weight above
    ``ANCILLA_TOL`` outside that subspace raises
    :class:`AncillaContaminationError`.  They are returned clean.
    """
    leak = bank_leakage(state, db)
    if leak > ANCILLA_TOL:
        raise AncillaContaminationError(
            f"ancilla banks carry weight {leak:.3e} outside the clean subspace"
        )
    _parallel_count_phase(state, db, unfold=False, counter=counter)
    _flag_rotation(state, db.nu, dagger=dagger)
    _parallel_count_phase(state, db, unfold=True, counter=counter)
    return state


# ---------------------------------------------------------------------------
# traces
# ---------------------------------------------------------------------------


def d_step_sequence(model: str, n: int, *, dagger: bool = False) -> list[Step]:
    """Steps implementing one D (or adjoint) in the given query model."""
    rotation = UnitaryStep.make("flag_rotation", dagger=float(dagger))
    if model == "sequential":
        steps: list[Step] = [OracleStep(j) for j in range(1, n + 1)]
        steps.append(rotation)
        steps.extend(OracleStep(j, dagger=True) for j in range(n, 0, -1))
        return steps
    if model == "parallel":
        sweep_in: list[Step] = [
            UnitaryStep.make("fan_out"),
            UnitaryStep.make("ctrl_flip"),
            OracleStep(None),
            UnitaryStep.make("fold", dagger=0.0),
            OracleStep(None, dagger=True),
            UnitaryStep.make("ctrl_flip"),
            UnitaryStep.make("fan_in"),
        ]
        sweep_out: list[Step] = [
            UnitaryStep.make("fan_out"),
            UnitaryStep.make("ctrl_flip"),
            OracleStep(None),
            UnitaryStep.make("fold", dagger=1.0),
            OracleStep(None, dagger=True),
            UnitaryStep.make("ctrl_flip"),
            UnitaryStep.make("fan_in"),
        ]
        return sweep_in + [rotation] + sweep_out
    raise TraceError(f"unknown query model {model!r}")


def _q_step_sequence(
    model: str,
    n: int,
    good_phase: float,
    start_phase: float,
    *,
    degenerate: bool = False,
) -> list[Step]:
    """One amplification step -D S_start D* S_good as a flat step list.

    In the degenerate case both phases are zero and the phase gates are
    omitted; the two D applications still run (and still cost queries),
    composing to the identity up to the leading minus sign.
    """
    steps: list[Step] = []
    if not degenerate:
        steps.append(UnitaryStep.make("phase_flag", phase=good_phase))
    steps.extend(d_step_sequence(model, n, dagger=True))
    if not degenerate:
        steps.append(UnitaryStep.make("phase_start", phase=start_phase))
    steps.extend(d_step_sequence(model, n))
    steps.append(UnitaryStep.make("global_phase", phase=math.pi))
    return steps


def build_trace(schedule: AASchedule, model: str, n: int) -> list[Step]:
    """Full sampling trace: prepare, D, full steps, one tuned closing step.

    The trace depends only on the schedule and the machine count, so it is
    identical for any two databases sharing ``(N, n, nu, M)``.
    """
    steps: list[Step] = [UnitaryStep.make("prepare")]
    steps.extend(d_step_sequence(model, n))
    for _ in range(schedule.iterations):
        steps.extend(_q_step_sequence(model, n, math.pi, math.pi))
    steps.extend(
        _q_step_sequence(
            model,
            n,
            schedule.good_phase,
            schedule.start_phase,
            degenerate=schedule.degenerate,
        )
    )
    return steps


def build_truncated_trace(schedule: AASchedule, model: str, n: int) -> list[Step]:
    """A deliberately under-iterated run: one fewer full step, no closing.

    Useful as a non-sampler to probe the lower-bound harness; the output
    lands short of the goal state, so its fidelity stays away from 1.
    """
    steps: list[Step] = [UnitaryStep.make("prepare")]
    steps.extend(d_step_sequence(model, n))
    for _ in range(max(schedule.iterations - 1, 0)):
        steps.extend(_q_step_sequence(model, n, math.pi, math.pi))
    return steps


def apply_step(
    state: StateVector,
    step: Step,
    db: DistributedDatabase,
    counter: QueryCounter | None = None,
) -> StateVector:
    """Execute a single trace step against a database."""
    if isinstance(step, OracleStep):
        if step.machine is None:
            return apply_parallel_oracle(state, db, dagger=step.dagger, counter=counter)
        if not 1 <= step.machine <= db.n:
            raise TraceError(
                f"trace queries machine {step.machine}, database has {db.n}"
            )
        return apply_sequential_oracle(
            state, db, step.machine, dagger=step.dagger, counter=counter
        )
    name = step.name
    if name == "prepare":
        return apply_fourier(state, "elem")
    if name == "flag_rotation":
        return _flag_rotation(state, db.nu, dagger=bool(step.param("dagger", 0.0)))
    if name == "phase_flag":
        return apply_S_chi(state, step.param("phase"))
    if name == "phase_start":
        return apply_S_pi(state, step.param("phase"))
    if name == "global_phase":
        state.amplitudes *= cmath.exp(1j * step.param("phase"))
        return state
    if name == "fan_out":
        return _fan_out(state, db)
    if name == "fan_in":
        return _fan_out(state, db, inverse=True)
    if name == "ctrl_flip":
        return _ctrl_flip(state, db)
    if name == "fold":
        return _fold(state, db, inverse=bool(step.param("dagger", 0.0)))
    raise TraceError(f"unknown unitary {name!r}")


def execute_trace(
    state: StateVector,
    steps: Iterable[Step],
    db: DistributedDatabase,
    counter: QueryCounter | None = None,
) -> StateVector:
    for step in steps:
        apply_step(state, step, db, counter)
    return state


# ---------------------------------------------------------------------------
# the full run
# ---------------------------------------------------------------------------


@dataclass
class SamplerReport:
    """Outcome of one full sampling run.

    ``queries`` is the live tally; ``query_formula`` is the count the
    schedule predicts.  When the closing step is degenerate its two D
    applications are pure overhead, so ``queries_without_degenerate_step``
    reports what an implementation skipping them would pay; otherwise it
    equals the full count.
    """

    model: str
    schedule: AASchedule
    final_state_error: float
    queries: dict
    d_applications: int
    query_formula: dict
    queries_without_degenerate_step: int
    distribution: list[float]
    target_weights: list[float]
    max_distribution_error: float
    capacity_error_floor: float
    final_state: StateVector = field(repr=False)
    trace: list[Step] = field(repr=False)

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "schedule": {
                "theta": self.schedule.theta,
                "m_tilde": self.schedule.m_tilde,
                "iterations": self.schedule.iterations,
                "closing_angle": self.schedule.closing_angle,
                "good_phase": self.schedule.good_phase,
                "start_phase": self.schedule.start_phase,
                "degenerate": self.schedule.degenerate,
                "matching_residual": self.schedule.residual,
            },
            "final_state_error": self.final_state_error,
            "queries": self.queries,
            "d_applications": self.d_applications,
            "query_formula": self.query_formula,
            "queries_without_degenerate_step": self.queries_without_degenerate_step,
            "distribution": self.distribution,
            "target_weights": self.target_weights,
            "max_distribution_error": self.max_distribution_error,
            "capacity_error_floor": self.capacity_error_floor,
        }


def run_sampling(db: DistributedDatabase, model: str = "sequential") -> SamplerReport:
    """Prepare the goal state end to end and report errors and costs.

    Args:
        db: the database to sample from (must be non-empty).
        model: ``"sequential"`` or ``"parallel"``.

    The run starts from all-zero registers, executes the built trace, and
    compares the outcome against the goal state up to global phase.
    """
    if model not in ("sequential", "parallel"):
        raise TraceError(f"unknown query model {model!r}")
    if db.stats.total == 0:
        raise EmptyDatabaseError("cannot sample from an empty database")
    layout = sequential_layout(db) if model == "sequential" else parallel_layout(db)
    schedule = build_schedule(db)
    trace = build_trace(schedule, model, db.n)
    counter = QueryCounter(db.n)
    state = StateVector.from_basis(layout, {})
    execute_trace(state, trace, db, counter)
    goal = target_state(db, layout)
    error = distance_up_to_global_phase(state, goal)
    probabilities = branch_norms_by_elem(state) ** 2
    weights = np.asarray(db.stats.totals, dtype=np.float64) / db.stats.total
    if model == "sequential":
        formula = {
            "sequential_total": schedule.sequential_queries(db.n),
            "per_d_application": 2 * db.n,
        }
        executed = counter.total_sequential
        degenerate_overhead = 4 * db.n
    else:
        formula = {
            "parallel_rounds": schedule.parallel_rounds(),
            "parallel_as_sequential": db.n * schedule.parallel_rounds(),
            "per_d_application": 4,
        }
        executed = counter.parallel
        degenerate_overhead = 8
    without_degenerate = executed - (degenerate_overhead if schedule.degenerate else 0)
    return SamplerReport(
        model=model,
        schedule=schedule,
        final_state_error=error,
        queries=counter.snapshot(),
        d_applications=schedule.d_applications,
        query_formula=formula,
        queries_without_degenerate_step=without_degenerate,
        distribution=[float(p) for p in probabilities],
        target_weights=[float(w) for w in weights],
        max_distribution_error=float(np.max(np.abs(probabilities - weights))),
        capacity_error_floor=db.stats.total / (db.N * db.nu),
        final_state=state,
        trace=trace,
    )
