"""Counting oracles over distributed databases.

Machine ``j`` answers queries through a reversible counting map: on basis
state ``|i, s>`` it adds its multiplicity of element ``i`` to the counter
slot, modulo ``nu + 1``.  Three access modes are provided:

* plain sequential access to one machine,
* controlled access (the addition happens only when a control slot is 1),
* one parallel round in which every machine acts on its own register bank.

Each function optionally tallies into a :class:`QueryCounter`.  A plain or
controlled call costs one query to that machine; a parallel call costs one
parallel query, conventionally exchangeable for ``n`` sequential ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .database import DistributedDatabase
from .errors import ShapeError
from .registers import StateVector, permute_joint

__all__ = [
    "QueryCounter",
    "apply_sequential_oracle",
    "apply_controlled_oracle",
    "apply_parallel_oracle",
    "bank_slot_names",
]


@dataclass
class QueryCounter:
    """Tally of oracle invocations, split by machine and by access mode."""

    n: int
    sequential: list[int] = field(default_factory=list)
    parallel: int = 0

    def __post_init__(self):
        if not self.sequential:
            self.sequential = [0] * self.n
        if len(self.sequential) != self.n:
            raise ShapeError("sequential tally length must equal machine count")

    def record_sequential(self, j: int) -> None:
        self.sequential[j - 1] += 1

    def record_parallel(self) -> None:
        self.parallel += 1

    @property
    def total_sequential(self) -> int:
        return sum(self.sequential)

    @property
    def parallel_as_sequential(self) -> int:
        """Parallel rounds charged at n sequential queries each."""
        return self.n * self.parallel

    def snapshot(self) -> dict:
        return {
            "sequential_by_machine": list(self.sequential),
            "sequential_total": self.total_sequential,
            "parallel_rounds": self.parallel,
            "parallel_as_sequential": self.parallel_as_sequential,
        }


def bank_slot_names(j: int) -> tuple[str, str, str]:
    """Slot names of machine ``j``'s private register bank."""
    return (f"elem_{j}", f"count_{j}", f"ctrl_{j}")


def _check_dims(state: StateVector, db: DistributedDatabase, elem: str, count: str) -> int:
    layout = state.layout
    if layout.dim_of(elem) != db.N:
        raise ShapeError(
            f"slot {elem!r} has dimension {layout.dim_of(elem)}, expected {db.N}"
        )
    mods = db.nu + 1
    if layout.dim_of(count) != mods:
        raise ShapeError(
            f"slot {count!r} has dimension {layout.dim_of(count)}, expected nu+1 = {mods}"
        )
    return mods


def apply_sequential_oracle(
    state: StateVector,
    db: DistributedDatabase,
    j: int,
    *,
    dagger: bool = False,
    counter: QueryCounter | None = None,
    elem: str = "elem",
    count: str = "count",
) -> StateVector:
    """One query to machine ``j``: counter += multiplicity of the element.

    The adjoint subtracts instead.  Both directions reduce modulo
    ``nu + 1`` and leave every other slot untouched.
    """
    db._check_machine(j)
    mods = _check_dims(state, db, elem, count)
    row = db.counts[j - 1]
    sign = -1 if dagger else 1
    e = np.repeat(np.arange(db.N, dtype=np.int64), mods)
    s = np.tile(np.arange(mods, dtype=np.int64), db.N)
    s_new = (s + sign * row[e]) % mods
    perm = e * mods + s_new
    permute_joint(state, (elem, count), perm)
    if counter is not None:
        counter.record_sequential(j)
    return state


def apply_controlled_oracle(
    state: StateVector,
    db: DistributedDatabase,
    j: int,
    *,
    dagger: bool = False,
    counter: QueryCounter | None = None,
    elem: str = "elem",
    count: str = "count",
    ctrl: str | None = None,
) -> StateVector:
    """Controlled query to machine ``j``: the addition fires only on ctrl=1.

    By default the control slot is ``ctrl_<j>``; pass ``elem``/``count``/
    ``ctrl`` explicitly to aim the oracle at an embedded register bank.
    """
    db._check_machine(j)
    if ctrl is None:
        ctrl = f"ctrl_{j}"
    mods = _check_dims(state, db, elem, count)
    if state.layout.dim_of(ctrl) != 2:
        raise ShapeError(f"control slot {ctrl!r} must have dimension 2")
    row = db.counts[j - 1]
    sign = -1 if dagger else 1
    k = db.N * mods * 2
    e, s, b = np.unravel_index(np.arange(k), (db.N, mods, 2))
    s_new = (s + sign * row[e] * b) % mods
    perm = np.ravel_multi_index((e, s_new, b), (db.N, mods, 2))
    permute_joint(state, (elem, count, ctrl), perm)
    if counter is not None:
        counter.record_sequential(j)
    return state


def apply_parallel_oracle(
    state: StateVector,
    db: DistributedDatabase,
    *,
    dagger: bool = False,
    counter: QueryCounter | None = None,
) -> StateVector:
    """One parallel round: every machine queries its own register bank.

    Machine ``j`` acts on slots ``elem_j``/``count_j``/``ctrl_j`` exactly
    as its controlled oracle would.  The whole round costs one parallel
    query regardless of ``n``.
    """
    mods = db.nu + 1
    names: list[str] = []
    sel_dims: list[int] = []
    for j in db.machines():
        names.extend(bank_slot_names(j))
        sel_dims.extend((db.N, mods, 2))
    layout = state.layout
    for name, dim in zip(names, sel_dims):
        if layout.dim_of(name) != dim:
            raise ShapeError(
                f"slot {name!r} has dimension {layout.dim_of(name)}, expected {dim}"
            )
    k = int(np.prod(sel_dims, dtype=np.int64))
    coords = list(np.unravel_index(np.arange(k), tuple(sel_dims)))
    sign = -1 if dagger else 1
    for j in db.machines():
        base = 3 * (j - 1)
        e, s, b = coords[base], coords[base + 1], coords[base + 2]
        coords[base + 1] = (s + sign * db.counts[j - 1][e] * b) % mods
    perm = np.ravel_multi_index(tuple(coords), tuple(sel_dims))
    permute_joint(state, names, perm)
    if counter is not None:
        counter.record_parallel()
    return state
