"""Exception types shared across the package.

Every error raised by qds derives from :class:`QdsError`, so callers can
catch one base class.  Where a builtin category is the natural fit (bad
value, bad index) the subclass also inherits from it.
"""

from __future__ import annotations


class QdsError(Exception):
    """Base class for all errors raised by this package."""


class InvalidLayoutError(QdsError, ValueError):
    """A register layout is malformed or lacks a slot an operation needs."""


class InvalidUnitaryError(QdsError, ValueError):
    """A basis map is not a bijection on the selected slots."""


class InvalidTargetError(QdsError, ValueError):
    """An operation targets a slot of the wrong dimension."""


class ShapeError(QdsError, ValueError):
    """Amplitude data or operand layouts do not match."""


class SchemaError(QdsError, ValueError):
    """A scenario document violates the input schema."""


class CapacityError(QdsError, ValueError):
    """Total multiplicity of some element exceeds the declared capacity."""


class EmptyDatabaseError(QdsError, ValueError):
    """The database holds no items, so there is nothing to sample."""


class MachineIndexError(QdsError, IndexError):
    """A machine index lies outside 1..n."""


class ElementIndexError(QdsError, IndexError):
    """An element index lies outside 1..N."""


class UpdateError(QdsError, ValueError):
    """A dynamic multiplicity update is not a legal single-item change."""


class AncillaContaminationError(QdsError, RuntimeError):
    """Ancilla banks carry weight outside the clean subspace."""


class PhaseSolveError(QdsError, RuntimeError):
    """The closing-rotation phases could not be solved to tolerance."""


class HardInputError(QdsError, ValueError):
    """A database does not satisfy the requested hard-input conditions."""


class FamilyTooLargeError(QdsError, ValueError):
    """Enumerating the relocation family would exceed the configured limit."""


class TraceError(QdsError, ValueError):
    """An execution trace is malformed or inconsistent with the database."""
