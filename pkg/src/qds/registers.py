"""Dense register-level state vectors for small quantum simulations.

A :class:`RegisterLayout` names a sequence of slots, each with its own
dimension (slots are qudit registers, not qubits).  A :class:`StateVector`
stores one complex amplitude per joint basis state.  Flattening follows C
order over the listed slots, so the *last* listed slot varies fastest.

The operations in this module are the primitive moves the rest of the
package is built from: basis permutations (classical reversible maps),
rotations of a two-dimensional slot conditioned on other slots, diagonal
phases, and a discrete Fourier transform on a single slot.  Everything is
plain numpy on a single flat ``complex128`` array.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    InvalidLayoutError,
    InvalidTargetError,
    InvalidUnitaryError,
    ShapeError,
)

#: Tolerance on the state norm after any public operation.
NORM_ATOL = 1e-12


@dataclass(frozen=True)
class RegisterLayout:
    """An ordered collection of named slots with fixed dimensions.

    Args:
        slots: sequence of ``(name, dimension)`` pairs.  Names must be
            unique and dimensions must be positive integers.
    """

    slots: tuple[tuple[str, int], ...]

    def __init__(self, slots: Iterable[tuple[str, int]]):
        normalized = []
        seen = set()
        for entry in slots:
            try:
                name, dim = entry
            except (TypeError, ValueError):
                raise InvalidLayoutError(f"slot entry {entry!r} is not a (name, dim) pair")
            if not isinstance(name, str) or not name:
                raise InvalidLayoutError(f"slot name {name!r} must be a non-empty string")
            if name in seen:
                raise InvalidLayoutError(f"duplicate slot name {name!r}")
            if not isinstance(dim, (int, np.integer)) or isinstance(dim, bool) or dim < 1:
                raise InvalidLayoutError(f"slot {name!r} has invalid dimension {dim!r}")
            seen.add(name)
            normalized.append((name, int(dim)))
        if not normalized:
            raise InvalidLayoutError("layout must contain at least one slot")
        object.__setattr__(self, "slots", tuple(normalized))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.slots)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.slots)

    @property
    def total_dim(self) -> int:
        out = 1
        for _, dim in self.slots:
            out *= dim
        return out

    def axis(self, name: str) -> int:
        """Tensor axis of a slot; raises if the slot does not exist."""
        for i, (slot_name, _) in enumerate(self.slots):
            if slot_name == name:
                return i
        raise InvalidLayoutError(f"layout has no slot named {name!r}")

    def dim_of(self, name: str) -> int:
        return self.slots[self.axis(name)][1]

    def has_slot(self, name: str) -> bool:
        return any(slot_name == name for slot_name, _ in self.slots)

    def flatten(self, coords: Sequence[int]) -> int:
        """Linear index of a joint coordinate tuple (last slot fastest)."""
        if len(coords) != len(self.slots):
            raise ShapeError(
                f"expected {len(self.slots)} coordinates, got {len(coords)}"
            )
        index = 0
        for coord, (name, dim) in zip(coords, self.slots):
            if not 0 <= coord < dim:
                raise ShapeError(f"coordinate {coord} out of range for slot {name!r}")
            index = index * dim + int(coord)
        return index

    def unflatten(self, index: int) -> tuple[int, ...]:
        """Inverse of :meth:`flatten`."""
        if not 0 <= index < self.total_dim:
            raise ShapeError(f"linear index {index} out of range")
        coords = []
        for _, dim in reversed(self.slots):
            coords.append(index % dim)
            index //= dim
        return tuple(reversed(coords))


@dataclass(frozen=True)
class BasisIndex:
    """A classical basis state of a layout, addressable both ways.

    ``coords`` live slot-by-slot in layout order; ``linear`` is the flat
    position in the amplitude array.  The two views are bijective.
    """

    layout: RegisterLayout
    coords: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))
        self.layout.flatten(self.coords)  # validates ranges

    @property
    def linear(self) -> int:
        return self.layout.flatten(self.coords)

    @classmethod
    def from_linear(cls, layout: RegisterLayout, index: int) -> "BasisIndex":
        return cls(layout, layout.unflatten(index))


class StateVector:
    """A normalized pure state over a layout, stored as a flat array.

    The amplitude buffer is owned by this object and mutated in place by
    the ``apply_*`` functions, which all return the same instance so calls
    can be chained.
    """

    __slots__ = ("layout", "amplitudes")

    def __init__(self, layout: RegisterLayout, amplitudes: np.ndarray, *, check: bool = True):
        amps = np.asarray(amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.shape[0] != layout.total_dim:
            raise ShapeError(
                f"amplitude array of length {amps.size} does not match layout "
                f"dimension {layout.total_dim}"
            )
        self.layout = layout
        self.amplitudes = amps.copy()
        if check:
            nrm = self.norm()
            if abs(nrm - 1.0) > 1e-9:
                raise ShapeError(f"state vector is not normalized (norm {nrm!r})")

    @classmethod
    def from_basis(cls, layout: RegisterLayout, coords: Mapping[str, int] | Sequence[int]) -> "StateVector":
        """Computational basis state; unspecified slots default to 0."""
        if isinstance(coords, Mapping):
            unknown = set(coords) - set(layout.names)
            if unknown:
                raise InvalidLayoutError(f"unknown slot name(s) {sorted(unknown)!r}")
            full = tuple(coords.get(name, 0) for name in layout.names)
        else:
            full = tuple(coords)
        amps = np.zeros(layout.total_dim, dtype=np.complex128)
        amps[layout.flatten(full)] = 1.0
        return cls(layout, amps, check=False)

    def copy(self) -> "StateVector":
        return StateVector(self.layout, self.amplitudes, check=False)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        """View of the amplitudes shaped with one axis per slot."""
        return self.amplitudes.reshape(self.layout.dims)

    def amplitude(self, coords: Mapping[str, int] | Sequence[int]) -> complex:
        if isinstance(coords, Mapping):
            full = tuple(coords.get(name, 0) for name in self.layout.names)
        else:
            full = tuple(coords)
        return complex(self.amplitudes[self.layout.flatten(full)])

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"StateVector(slots={self.layout.slots}, dim={self.layout.total_dim})"


def _selected_axes(layout: RegisterLayout, names: Sequence[str]) -> list[int]:
    if len(set(names)) != len(names):
        raise InvalidLayoutError(f"slot names {names!r} contain duplicates")
    return [layout.axis(name) for name in names]


def _joint_view(state: StateVector, names: Sequence[str]) -> tuple[np.ndarray, tuple[int, ...]]:
    """Reshape the amplitudes to (joint-dim of selected slots, rest)."""
    axes = _selected_axes(state.layout, names)
    tensor = state.tensor()
    moved = np.moveaxis(tensor, axes, range(len(axes)))
    sel_dims = tuple(state.layout.dims[a] for a in axes)
    k = int(np.prod(sel_dims, dtype=np.int64)) if sel_dims else 1
    return moved.reshape(k, -1), sel_dims


def _write_back(state: StateVector, names: Sequence[str], block: np.ndarray) -> None:
    axes = _selected_axes(state.layout, names)
    full_dims = state.layout.dims
    sel_dims = tuple(full_dims[a] for a in axes)
    rest_dims = tuple(d for i, d in enumerate(full_dims) if i not in set(axes))
    moved = block.reshape(sel_dims + rest_dims)
    tensor = np.moveaxis(moved, range(len(axes)), axes)
    state.amplitudes[:] = tensor.reshape(-1)


def permute_joint(state: StateVector, names: Sequence[str], perm: np.ndarray) -> StateVector:
    """Apply a permutation of the joint basis of the selected slots.

    ``perm[x]`` is the destination joint index of source joint index ``x``;
    the amplitude previously at ``x`` ends up at ``perm[x]``.
    """
    block, sel_dims = _joint_view(state, names)
    k = block.shape[0]
    perm = np.asarray(perm, dtype=np.int64)
    if perm.shape != (k,):
        raise InvalidUnitaryError(f"permutation has size {perm.size}, expected {k}")
    if perm.min() < 0 or perm.max() >= k or np.bincount(perm, minlength=k).max() != 1:
        raise InvalidUnitaryError("basis map is not a bijection on the selected slots")
    out = np.empty_like(block)
    out[perm] = block
    _write_back(state, names, out)
    return state


def apply_basis_map(
    state: StateVector,
    names: Sequence[str],
    mapping: Callable[[tuple[int, ...]], Sequence[int]],
) -> StateVector:
    """Apply a classical reversible map on the selected slots.

    The callable receives one coordinate tuple (ints, in the order of
    ``names``) and must return the image tuple.  The induced permutation is
    checked for bijectivity before being applied; all other slots ride
    along unchanged.
    """
    axes = _selected_axes(state.layout, names)
    sel_dims = tuple(state.layout.dims[a] for a in axes)
    k = int(np.prod(sel_dims, dtype=np.int64))
    coords = np.unravel_index(np.arange(k), sel_dims)
    perm = np.empty(k, dtype=np.int64)
    for x in range(k):
        src = tuple(int(c[x]) for c in coords)
        dst = tuple(int(v) for v in mapping(src))
        if len(dst) != len(sel_dims):
            raise InvalidUnitaryError(
                f"map returned {len(dst)} coordinates for {len(sel_dims)} slots"
            )
        for v, d in zip(dst, sel_dims):
            if not 0 <= v < d:
                raise InvalidUnitaryError(f"map image {dst!r} leaves the slot ranges")
        perm[x] = np.ravel_multi_index(dst, sel_dims)
    return permute_joint(state, names, perm)


def apply_conditioned_rotation(
    state: StateVector,
    control_names: Sequence[str],
    target_name: str,
    angle_fn: Callable[[tuple[int, ...]], float],
) -> StateVector:
    """Rotate a two-dimensional target slot by an angle set by the controls.

    For control coordinates ``x`` with angle ``g = angle_fn(x)`` the target
    transforms as ``|0> -> cos(g)|0> + sin(g)|1>`` and
    ``|1> -> -sin(g)|0> + cos(g)|1>``.
    """
    if state.layout.dim_of(target_name) != 2:
        raise InvalidTargetError(
            f"rotation target {target_name!r} must have dimension 2, "
            f"got {state.layout.dim_of(target_name)}"
        )
    if target_name in control_names:
        raise InvalidTargetError("rotation target cannot also be a control")
    names = list(control_names) + [target_name]
    block, sel_dims = _joint_view(state, names)
    ctrl_dims = sel_dims[:-1]
    kc = int(np.prod(ctrl_dims, dtype=np.int64)) if ctrl_dims else 1
    coords = np.unravel_index(np.arange(kc), ctrl_dims) if ctrl_dims else ()
    angles = np.empty(kc, dtype=np.float64)
    for x in range(kc):
        ctuple = tuple(int(c[x]) for c in coords)
        angles[x] = float(angle_fn(ctuple))
    shaped = block.reshape(kc, 2, -1)
    cos = np.cos(angles)[:, None]
    sin = np.sin(angles)[:, None]
    a0 = shaped[:, 0, :].copy()
    a1 = shaped[:, 1, :]
    shaped[:, 0, :] = cos * a0 - sin * a1
    shaped[:, 1, :] = sin * a0 + cos * a1
    _write_back(state, names, shaped.reshape(block.shape))
    return state


def apply_phase(
    state: StateVector,
    names: Sequence[str],
    phase_fn: Callable[[tuple[int, ...]], float],
) -> StateVector:
    """Multiply each joint coordinate of the selected slots by exp(i*phase)."""
    block, sel_dims = _joint_view(state, names)
    k = block.shape[0]
    coords = np.unravel_index(np.arange(k), sel_dims)
    phases = np.empty(k, dtype=np.float64)
    for x in range(k):
        phases[x] = float(phase_fn(tuple(int(c[x]) for c in coords)))
    block *= np.exp(1j * phases)[:, None]
    _write_back(state, names, block)
    return state


def apply_fourier(state: StateVector, name: str = "elem", *, inverse: bool = False) -> StateVector:
    """Unitary discrete Fourier transform along one slot.

    The forward direction maps ``|0>`` to the uniform superposition over
    the slot, which is the preparation basis used by the sampler.
    """
    axis = state.layout.axis(name)
    tensor = state.tensor()
    if inverse:
        out = np.fft.fft(tensor, axis=axis, norm="ortho")
    else:
        out = np.fft.ifft(tensor, axis=axis, norm="ortho")
    state.amplitudes[:] = out.reshape(-1)
    return state


def prepare_uniform(layout: RegisterLayout, slot: str = "elem") -> StateVector:
    """Uniform superposition over one slot, all other slots at 0."""
    if not layout.has_slot(slot):
        raise InvalidLayoutError(f"layout has no slot named {slot!r}")
    state = StateVector.from_basis(layout, {})
    return apply_fourier(state, slot)


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b> with the usual conjugate-linear first argument."""
    if a.layout != b.layout:
        raise ShapeError("inner product requires identical layouts")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def branch_norms_by_elem(state: StateVector, slot: str = "elem") -> np.ndarray:
    """l2 norm of the residual vector attached to each value of a slot.

    Entry ``i`` is the norm of the (unnormalized) vector multiplying
    ``|i>`` of the chosen slot, so the squared entries are the measurement
    probabilities of that slot.
    """
    axis = state.layout.axis(slot)
    tensor = state.tensor()
    moved = np.moveaxis(tensor, axis, 0)
    flat = moved.reshape(moved.shape[0], -1)
    return np.linalg.norm(flat, axis=1)


def distance(a: StateVector, b: StateVector) -> float:
    if a.layout != b.layout:
        raise ShapeError("distance requires identical layouts")
    return float(np.linalg.norm(a.amplitudes - b.amplitudes))


def distance_up_to_global_phase(a: StateVector, b: StateVector) -> float:
    """Distance after rotating ``a`` to match ``b``'s global phase.

    The phase is read off at the largest-magnitude amplitude of ``b``;
    if ``a`` vanishes there the raw distance is returned.
    """
    if a.layout != b.layout:
        raise ShapeError("distance requires identical layouts")
    idx = int(np.argmax(np.abs(b.amplitudes)))
    av = a.amplitudes[idx]
    bv = b.amplitudes[idx]
    if abs(av) < 1e-300:
        return distance(a, b)
    rot = (bv / abs(bv)) * (abs(av) / av)
    return float(np.linalg.norm(a.amplitudes * rot - b.amplitudes))


def states_allclose(a: StateVector, b: StateVector, atol: float = NORM_ATOL) -> bool:
    return a.layout == b.layout and bool(
        np.allclose(a.amplitudes, b.amplitudes, rtol=0.0, atol=atol)
    )
