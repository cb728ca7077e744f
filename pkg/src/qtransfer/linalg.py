"""Dense complex linear algebra over labeled composite Hilbert spaces.

Every state and operator carries a :class:`SubsystemLayout` naming its tensor
factors. Composite indexing is row-major: the leftmost factor is the
slowest-varying index, so ``kron`` of amplitude vectors matches the layout
produced by concatenating factor lists.

All values are immutable after construction and all operations are pure
functions, so they are safe to share across threads.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InvalidStateError,
    LabelCollisionError,
    LayoutMismatchError,
    RankError,
    UnknownLabelError,
)

NORM_TOL = 1e-12
HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-12
UNITARITY_TOL = 1e-12
EIGENVALUE_CLAMP = 1e-12


@dataclass(frozen=True)
class SubsystemLayout:
    """Ordered list of labeled subsystem dimensions defining a tensor factorization."""

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        factors = tuple((str(label), int(dim)) for label, dim in self.factors)
        object.__setattr__(self, "factors", factors)
        if not factors:
            raise InvalidStateError("layout needs at least one factor")
        labels = [label for label, _ in factors]
        if len(set(labels)) != len(labels):
            raise LabelCollisionError(f"duplicate subsystem labels in {labels}")
        for label, dim in factors:
            if dim < 1:
                raise InvalidStateError(f"subsystem {label!r} has nonpositive dimension {dim}")

    @classmethod
    def of(cls, *factors: tuple[str, int]) -> "SubsystemLayout":
        return cls(tuple(factors))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.factors)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    def axis(self, label: str) -> int:
        for i, (name, _) in enumerate(self.factors):
            if name == label:
                return i
        raise UnknownLabelError(f"no subsystem {label!r} in layout {self.labels}")

    def dim_of(self, label: str) -> int:
        return self.factors[self.axis(label)][1]

    def tensor(self, other: "SubsystemLayout") -> "SubsystemLayout":
        overlap = set(self.labels) & set(other.labels)
        if overlap:
            raise LabelCollisionError(f"labels {sorted(overlap)} present on both sides")
        return SubsystemLayout(self.factors + other.factors)

    def subset(self, labels: Iterable[str]) -> "SubsystemLayout":
        """Layout of the named factors, preserving this layout's order."""
        wanted = set(labels)
        unknown = wanted - set(self.labels)
        if unknown:
            raise UnknownLabelError(f"no subsystem(s) {sorted(unknown)} in layout {self.labels}")
        kept = tuple(f for f in self.factors if f[0] in wanted)
        return SubsystemLayout(kept)

    def __repr__(self) -> str:
        inner = ", ".join(f"{label}:{dim}" for label, dim in self.factors)
        return f"SubsystemLayout[{inner}]"


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit-norm complex amplitude vector on a labeled composite space."""

    layout: SubsystemLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != self.layout.total_dim:
            raise InvalidStateError(
                f"amplitude length {amps.size} != layout dimension {self.layout.total_dim}"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidStateError(f"state norm {norm!r} deviates from 1 beyond {NORM_TOL}")
        object.__setattr__(self, "amplitudes", _freeze(amps))

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    def to_density(self) -> "DensityOperator":
        return DensityOperator(self.layout, np.outer(self.amplitudes, self.amplitudes.conj()))

    def __repr__(self) -> str:
        return f"PureState({self.layout!r})"


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, positive-semidefinite, unit-trace operator on a labeled space."""

    layout: SubsystemLayout
    matrix: np.ndarray

    def __post_init__(self):
        d = self.layout.total_dim
        mat = np.array(self.matrix, dtype=np.complex128)
        if mat.shape != (d, d):
            raise InvalidStateError(f"matrix shape {mat.shape} != ({d}, {d})")
        if np.max(np.abs(mat - mat.conj().T)) > HERMITICITY_TOL:
            raise InvalidStateError("density operator is not Hermitian within tolerance")
        tr = complex(np.trace(mat))
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"trace {tr!r} deviates from 1 beyond {TRACE_TOL}")
        if float(np.min(np.linalg.eigvalsh(mat))) < -PSD_TOL:
            raise InvalidStateError("density operator has an eigenvalue below -1e-12")
        object.__setattr__(self, "matrix", _freeze(mat))

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def __repr__(self) -> str:
        return f"DensityOperator({self.layout!r})"


@dataclass(frozen=True, eq=False)
class UnitaryOperator:
    """Unitary matrix on a labeled composite space (max-abs check of U~U = I)."""

    layout: SubsystemLayout
    matrix: np.ndarray

    def __post_init__(self):
        d = self.layout.total_dim
        mat = np.array(self.matrix, dtype=np.complex128)
        if mat.shape != (d, d):
            raise InvalidStateError(f"matrix shape {mat.shape} != ({d}, {d})")
        defect = float(np.max(np.abs(mat.conj().T @ mat - np.eye(d))))
        if defect > UNITARITY_TOL:
            raise InvalidStateError(f"unitarity defect {defect:.3e} exceeds {UNITARITY_TOL}")
        object.__setattr__(self, "matrix", _freeze(mat))

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    def __repr__(self) -> str:
        return f"UnitaryOperator({self.layout!r})"


def basis_state(layout: SubsystemLayout, index: int | Sequence[int]) -> PureState:
    """Computational basis vector, by flat index or per-factor indices."""
    if not isinstance(index, int):
        digits = tuple(index)
        if len(digits) != len(layout.dims):
            raise InvalidStateError("one index per factor required")
        flat = 0
        for digit, dim in zip(digits, layout.dims):
            if not 0 <= digit < dim:
                raise InvalidStateError(f"basis index {digit} outside [0, {dim})")
            flat = flat * dim + digit
        index = flat
    if not 0 <= index < layout.total_dim:
        raise InvalidStateError(f"basis index {index} outside [0, {layout.total_dim})")
    amps = np.zeros(layout.total_dim, dtype=np.complex128)
    amps[index] = 1.0
    return PureState(layout, amps)


def _require_same_layout(a, b) -> None:
    if a.layout != b.layout:
        raise LayoutMismatchError(f"layouts differ: {a.layout!r} vs {b.layout!r}")


def tensor(a, b):
    """Kronecker product of two states or two operators, concatenating layouts.

    The arguments must be of the same kind (two :class:`PureState`, two
    :class:`DensityOperator`, or two :class:`UnitaryOperator`) with disjoint
    label sets.
    """
    if type(a) is not type(b):
        raise TypeError(f"tensor requires matching kinds, got {type(a).__name__} and {type(b).__name__}")
    layout = a.layout.tensor(b.layout)
    if isinstance(a, PureState):
        return PureState(layout, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityOperator):
        return DensityOperator(layout, np.kron(a.matrix, b.matrix))
    if isinstance(a, UnitaryOperator):
        return UnitaryOperator(layout, np.kron(a.matrix, b.matrix))
    raise TypeError(f"unsupported operand kind {type(a).__name__}")


def _reduced_from_vector(amps: np.ndarray, dims: Sequence[int], keep_axes: Sequence[int]) -> np.ndarray:
    psi = amps.reshape(dims)
    traced = [i for i in range(len(dims)) if i not in keep_axes]
    red = np.tensordot(psi, psi.conj(), axes=(traced, traced))
    d_keep = math.prod(dims[i] for i in keep_axes)
    return red.reshape(d_keep, d_keep)


def _reduced_from_matrix(mat: np.ndarray, dims: Sequence[int], keep_axes: Sequence[int]) -> np.ndarray:
    n = len(dims)
    letters = string.ascii_letters
    if 2 * n > len(letters):
        raise InvalidStateError("too many tensor factors for partial trace")
    rows = [letters[i] for i in range(n)]
    cols = [letters[n + i] if i in keep_axes else letters[i] for i in range(n)]
    out = [letters[i] for i in keep_axes] + [letters[n + i] for i in keep_axes]
    expr = "".join(rows) + "".join(cols) + "->" + "".join(out)
    red = np.einsum(expr, mat.reshape(*dims, *dims))
    d_keep = math.prod(dims[i] for i in keep_axes)
    return red.reshape(d_keep, d_keep)


def partial_trace(state: PureState | DensityOperator, keep: Iterable[str]) -> DensityOperator:
    """Reduced density operator on the named factors (original factor order kept)."""
    keep_set = set(keep)
    if not keep_set:
        raise UnknownLabelError("keep set must be nonempty")
    layout = state.layout
    sub = layout.subset(keep_set)  # validates labels
    keep_axes = [layout.axis(label) for label in sub.labels]
    if isinstance(state, PureState):
        amps = state.amplitudes / np.linalg.norm(state.amplitudes)
        red = _reduced_from_vector(amps, layout.dims, keep_axes)
    else:
        red = _reduced_from_matrix(state.matrix, layout.dims, keep_axes)
    red = (red + red.conj().T) / 2.0
    return DensityOperator(sub, red)


def _phase_fixed(vec: np.ndarray) -> np.ndarray:
    """Rotate a global phase so the largest-magnitude component is real positive."""
    k = int(np.argmax(np.abs(vec)))
    pivot = vec[k]
    if pivot == 0:
        return vec
    return vec * (abs(pivot) / pivot)


def purify(rho: DensityOperator, ghost_label: str | None = None) -> PureState:
    """Pure state on [original factors, ghost] whose partial trace over the ghost is ``rho``.

    Convention: eigenvalues sorted descending (stable ties), each eigenvector's
    largest-magnitude component made real positive, amplitudes sqrt(p_k) real
    nonnegative, k-th eigenvector paired with the k-th ghost basis vector. The
    ghost dimension equals the full dimension of ``rho`` so every rank is covered.
    """
    vals, vecs = np.linalg.eigh(rho.matrix)
    order = np.argsort(-vals, kind="stable")
    vals = np.clip(vals[order], 0.0, None)
    vecs = vecs[:, order]
    d = rho.layout.total_dim
    if ghost_label is None:
        ghost_label = "".join(rho.layout.labels) + "'"
    ghost = SubsystemLayout(((ghost_label, d),))
    table = np.zeros((d, d), dtype=np.complex128)  # [original index, ghost index]
    for k in range(d):
        if vals[k] > 0.0:
            table[:, k] = math.sqrt(vals[k]) * _phase_fixed(vecs[:, k])
    amps = table.reshape(-1)
    amps /= np.linalg.norm(amps)
    return PureState(rho.layout.tensor(ghost), amps)


def inner(a: PureState, b: PureState) -> complex:
    """Inner product, conjugate-linear in the first argument."""
    _require_same_layout(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def hs_inner(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Hilbert-Schmidt scalar product Tr(rho sigma), real for Hermitian arguments."""
    _require_same_layout(rho, sigma)
    return float(np.trace(rho.matrix @ sigma.matrix).real)


def von_neumann_entropy(rho: DensityOperator) -> float:
    """Spectral entropy in bits, with eigenvalues below 1e-12 clamped to zero."""
    vals = np.linalg.eigvalsh(rho.matrix)
    vals = vals[vals > EIGENVALUE_CLAMP]
    if vals.size == 0:
        return 0.0
    return float(-(vals * np.log2(vals)).sum()) + 0.0


def apply_unitary(U: UnitaryOperator, state: PureState) -> PureState:
    _require_same_layout(U, state)
    return PureState(state.layout, U.matrix @ state.amplitudes)


def evolve_density(U: UnitaryOperator, rho: DensityOperator) -> DensityOperator:
    _require_same_layout(U, rho)
    mat = U.matrix @ rho.matrix @ U.matrix.conj().T
    return DensityOperator(rho.layout, (mat + mat.conj().T) / 2.0)


def trace_distance(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Half the trace norm of rho - sigma; in [0, 1]."""
    _require_same_layout(rho, sigma)
    eigs = np.linalg.eigvalsh(rho.matrix - sigma.matrix)
    return float(0.5 * np.abs(eigs).sum())


def uhlmann_fidelity(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Tr sqrt(sqrt(rho) sigma sqrt(rho)); reduces to |<a|b>| on pure inputs."""
    _require_same_layout(rho, sigma)
    vals, vecs = np.linalg.eigh(rho.matrix)
    root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T
    middle = root @ sigma.matrix @ root
    eigs = np.clip(np.linalg.eigvalsh((middle + middle.conj().T) / 2.0), 0.0, None)
    return float(np.sqrt(eigs).sum())


def exp_i_hermitian(H: np.ndarray) -> np.ndarray:
    """exp(iH) for Hermitian H via spectral decomposition; unitary to rounding."""
    w, V = np.linalg.eigh((H + H.conj().T) / 2.0)
    return (V * np.exp(1j * w)) @ V.conj().T


def random_pure(layout: SubsystemLayout, seed) -> PureState:
    """Haar-distributed pure state (normalized complex Gaussian vector)."""
    rng = np.random.default_rng(seed)
    d = layout.total_dim
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState(layout, z / np.linalg.norm(z))


def random_unitary(layout: SubsystemLayout, seed) -> UnitaryOperator:
    """Haar-distributed unitary: QR of a Ginibre matrix with phase-fixed diagonal."""
    rng = np.random.default_rng(seed)
    d = layout.total_dim
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return UnitaryOperator(layout, q * phases)


def random_density(layout: SubsystemLayout, rank: int | None, seed) -> DensityOperator:
    """Random density operator of the given rank (Wishart construction)."""
    rng = np.random.default_rng(seed)
    d = layout.total_dim
    if rank is None:
        rank = d
    if not 1 <= rank <= d:
        raise RankError(f"rank {rank} outside [1, {d}]")
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    mat = g @ g.conj().T
    mat /= np.trace(mat).real
    return DensityOperator(layout, (mat + mat.conj().T) / 2.0)
