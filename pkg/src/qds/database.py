"""Distributed multiset databases and their summary statistics.

A database is ``n`` machines, each holding a multiset over the elements
``1..N``.  Machine ``j`` holds ``count(i, j)`` copies of element ``i``.
The public API is 1-based for both elements and machines, matching the
scenario file format; the backing array is indexed ``counts[j-1, i-1]``.

``nu`` is the declared capacity: no element's total multiplicity across
machines may exceed it.  The counting oracles reduce modulo ``nu + 1``,
so the capacity also fixes the counter register dimension.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

from .errors import (
    CapacityError,
    ElementIndexError,
    EmptyDatabaseError,
    MachineIndexError,
    SchemaError,
    ShapeError,
    UpdateError,
)
from .registers import RegisterLayout, StateVector

__all__ = [
    "DatabaseStats",
    "DistributedDatabase",
    "load_scenario",
    "to_document",
    "update_multiplicity",
    "target_state",
]


@dataclass(frozen=True)
class DatabaseStats:
    """Derived quantities of a database, computed once at construction.

    Attributes:
        totals: total multiplicity of each element across machines
            (length ``N``, index ``i-1``).
        total: number of items in the whole database (sum of totals).
        machine_totals: items held by each machine (length ``n``).
        machine_supports: number of distinct elements on each machine.
        machine_max_counts: largest single multiplicity on each machine.
    """

    totals: tuple[int, ...]
    total: int
    machine_totals: tuple[int, ...]
    machine_supports: tuple[int, ...]
    machine_max_counts: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class DistributedDatabase:
    """An immutable snapshot of the distributed multiset.

    Args:
        N: size of the element universe.
        n: number of machines.
        nu: capacity bound; every element's total multiplicity must be
            at most ``nu``.
        counts: integer array of shape ``(n, N)`` with ``counts[j-1, i-1]``
            the multiplicity of element ``i`` on machine ``j``.
    """

    N: int
    n: int
    nu: int
    counts: np.ndarray
    stats: DatabaseStats = field(init=False)

    def __post_init__(self):
        for label, value in (("N", self.N), ("n", self.n), ("nu", self.nu)):
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
                raise SchemaError(f"{label} must be a positive integer, got {value!r}")
        counts = np.asarray(self.counts)
        if counts.shape != (self.n, self.N):
            raise ShapeError(
                f"counts array of shape {counts.shape} does not match "
                f"(n, N) = ({self.n}, {self.N})"
            )
        if not np.issubdtype(counts.dtype, np.integer):
            raise SchemaError("multiplicities must be integers")
        if (counts < 0).any():
            raise SchemaError("multiplicities must be non-negative")
        counts = counts.astype(np.int64, copy=True)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        totals = counts.sum(axis=0)
        if totals.max(initial=0) > self.nu:
            raise CapacityError(
                f"element {int(totals.argmax()) + 1} has total multiplicity "
                f"{int(totals.max())} exceeding capacity {self.nu}"
            )
        stats = DatabaseStats(
            totals=tuple(int(v) for v in totals),
            total=int(totals.sum()),
            machine_totals=tuple(int(v) for v in counts.sum(axis=1)),
            machine_supports=tuple(int(v) for v in (counts > 0).sum(axis=1)),
            machine_max_counts=tuple(int(v) for v in counts.max(axis=1)),
        )
        object.__setattr__(self, "stats", stats)

    # -- indexing helpers (public API is 1-based) --

    def _check_element(self, i: int) -> int:
        if not 1 <= i <= self.N:
            raise ElementIndexError(f"element index {i} outside 1..{self.N}")
        return i - 1

    def _check_machine(self, j: int) -> int:
        if not 1 <= j <= self.n:
            raise MachineIndexError(f"machine index {j} outside 1..{self.n}")
        return j - 1

    def count(self, i: int, j: int) -> int:
        """Multiplicity of element ``i`` on machine ``j``."""
        return int(self.counts[self._check_machine(j), self._check_element(i)])

    def total_count(self, i: int) -> int:
        """Total multiplicity of element ``i`` across all machines."""
        return self.stats.totals[self._check_element(i)]

    def machine_row(self, j: int) -> np.ndarray:
        """Read-only multiplicity row of machine ``j`` (length ``N``)."""
        return self.counts[self._check_machine(j)]

    def support(self, j: int) -> tuple[int, ...]:
        """Elements (ascending, 1-based) held by machine ``j``."""
        row = self.machine_row(j)
        return tuple(int(i) + 1 for i in np.flatnonzero(row))

    def machines(self) -> Iterator[int]:
        return iter(range(1, self.n + 1))

    def with_counts(self, counts: np.ndarray) -> "DistributedDatabase":
        return DistributedDatabase(N=self.N, n=self.n, nu=self.nu, counts=counts)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DistributedDatabase):
            return NotImplemented
        return (
            self.N == other.N
            and self.n == other.n
            and self.nu == other.nu
            and np.array_equal(self.counts, other.counts)
        )

    def __hash__(self) -> int:
        return hash((self.N, self.n, self.nu, self.counts.tobytes()))

    def __repr__(self) -> str:
        return (
            f"DistributedDatabase(N={self.N}, n={self.n}, nu={self.nu}, "
            f"M={self.stats.total})"
        )


_SCENARIO_KEYS = {"N", "nu", "machines"}
_MACHINE_KEYS = {"elements"}


def load_scenario(document: Mapping) -> DistributedDatabase:
    """Build a database from a parsed scenario document.

    The document shape is::

        {"N": 4, "nu": 4, "machines": [{"elements": {"1": 2, "2": 1}}, ...]}

    Element keys are 1-based and given as strings (JSON object keys).
    Unknown keys anywhere in the document are rejected.
    """
    if not isinstance(document, Mapping):
        raise SchemaError(f"scenario document must be a mapping, got {type(document).__name__}")
    unknown = set(document) - _SCENARIO_KEYS
    if unknown:
        raise SchemaError(f"unknown scenario key(s): {sorted(unknown)}")
    missing = _SCENARIO_KEYS - set(document)
    if missing:
        raise SchemaError(f"missing scenario key(s): {sorted(missing)}")
    N, nu = document["N"], document["nu"]
    for label, value in (("N", N), ("nu", nu)):
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise SchemaError(f"{label} must be a positive integer, got {value!r}")
    machines = document["machines"]
    if not isinstance(machines, (list, tuple)) or not machines:
        raise SchemaError("machines must be a non-empty list")
    counts = np.zeros((len(machines), N), dtype=np.int64)
    for row, machine in enumerate(machines):
        if not isinstance(machine, Mapping):
            raise SchemaError(f"machine entry {row + 1} must be a mapping")
        unknown = set(machine) - _MACHINE_KEYS
        if unknown:
            raise SchemaError(f"machine entry {row + 1} has unknown key(s): {sorted(unknown)}")
        elements = machine.get("elements", {})
        if not isinstance(elements, Mapping):
            raise SchemaError(f"machine entry {row + 1}: elements must be a mapping")
        for key, value in elements.items():
            try:
                i = int(key)
            except (TypeError, ValueError):
                raise SchemaError(f"machine entry {row + 1}: bad element key {key!r}")
            if not 1 <= i <= N:
                raise SchemaError(
                    f"machine entry {row + 1}: element {i} outside 1..{N}"
                )
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise SchemaError(
                    f"machine entry {row + 1}: multiplicity of element {i} "
                    f"must be a non-negative integer, got {value!r}"
                )
            counts[row, i - 1] = value
    return DistributedDatabase(N=N, n=len(machines), nu=nu, counts=counts)


def to_document(db: DistributedDatabase) -> dict:
    """Scenario document for a database (inverse of :func:`load_scenario`)."""
    machines = []
    for j in db.machines():
        row = db.machine_row(j)
        machines.append(
            {"elements": {str(i + 1): int(row[i]) for i in np.flatnonzero(row)}}
        )
    return {"N": db.N, "nu": db.nu, "machines": machines}


def update_multiplicity(db: DistributedDatabase, i: int, j: int, delta: int) -> DistributedDatabase:
    """Insert (+1) or remove (-1) one copy of element ``i`` on machine ``j``.

    Returns a new database; the original is untouched.  Removing an item
    that is not present raises :class:`UpdateError`; pushing an element's
    total past the capacity raises :class:`CapacityError`.
    """
    if delta not in (1, -1):
        raise UpdateError(f"delta must be +1 or -1, got {delta!r}")
    col = db._check_element(i)
    row = db._check_machine(j)
    new_counts = db.counts.copy()
    new_value = int(new_counts[row, col]) + delta
    if new_value < 0:
        raise UpdateError(
            f"machine {j} holds no copy of element {i} to remove"
        )
    new_counts[row, col] = new_value
    if delta > 0 and int(db.stats.totals[col]) + 1 > db.nu:
        raise CapacityError(
            f"inserting element {i} would exceed capacity {db.nu}"
        )
    return db.with_counts(new_counts)


def target_state(db: DistributedDatabase, layout: RegisterLayout, slot: str = "elem") -> StateVector:
    """The sampling target: amplitude sqrt(c_i / M) on element ``i``.

    All slots other than ``slot`` sit at coordinate 0.  The element with
    1-based index ``i`` occupies slot coordinate ``i - 1``.
    """
    stats = db.stats
    if stats.total == 0:
        raise EmptyDatabaseError("database holds no items; target state undefined")
    if layout.dim_of(slot) != db.N:
        raise ShapeError(
            f"slot {slot!r} has dimension {layout.dim_of(slot)}, expected N = {db.N}"
        )
    state = StateVector.from_basis(layout, {})
    state.amplitudes[:] = 0.0
    axis = layout.axis(slot)
    tensor = state.tensor()
    index = [0] * len(layout.dims)
    weights = np.sqrt(np.asarray(stats.totals, dtype=np.float64) / stats.total)
    for coord in range(db.N):
        index[axis] = coord
        tensor[tuple(index)] = weights[coord]
    return state
