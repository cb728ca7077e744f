"""Turns declarative transfer specifications into explicit unitaries.

A :class:`TransferSpec` lists branch maps ``in_sys (x) ready -> out_sys (x)
out_record``. Such a family extends to a unitary on system (x) apparatus
exactly when it preserves the Gram matrix of the branch vectors;
:func:`check_feasibility` measures the worst Gram deviation and
:func:`complete_to_unitary` performs a deterministic isometry completion when
the deviation is below tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    InfeasibleSpecError,
    InvalidStateError,
    LayoutMismatchError,
    NumericalRankLossError,
)
from .linalg import (
    PureState,
    SubsystemLayout,
    UnitaryOperator,
    inner,
    partial_trace,
    random_pure,
)

FEASIBILITY_TOL = 1e-10
RANK_TOL = 1e-10
_EXTEND_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Branch:
    """One transfer branch: input system state, output system state, output record."""

    in_sys: PureState
    out_sys: PureState
    out_record: PureState


@dataclass(frozen=True)
class FeasibilityReport:
    """Result of the Gram-preservation test over all branch pairs."""

    feasible: bool
    max_gram_deviation: float
    offending_pair: tuple[int, int] | None = None


@dataclass(frozen=True, eq=False)
class TransferSpec:
    """Declarative description of an information transfer channel.

    Invariants enforced at construction: at least two branches, all states on
    the declared layouts, input system states linearly independent (smallest
    Gram eigenvalue above 1e-10).
    """

    system: SubsystemLayout
    apparatus: SubsystemLayout
    ready: PureState
    branches: tuple[Branch, ...]

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        if len(self.branches) < 2:
            raise InvalidStateError("a transfer spec needs at least 2 branches")
        self.system.tensor(self.apparatus)  # validates label disjointness
        if self.ready.layout != self.apparatus:
            raise LayoutMismatchError("ready state must live on the apparatus layout")
        for i, br in enumerate(self.branches):
            if br.in_sys.layout != self.system or br.out_sys.layout != self.system:
                raise LayoutMismatchError(f"branch {i} system states not on the system layout")
            if br.out_record.layout != self.apparatus:
                raise LayoutMismatchError(f"branch {i} record not on the apparatus layout")
        gram = gram_matrix([br.in_sys for br in self.branches])
        smallest = float(np.min(np.linalg.eigvalsh(gram)))
        if smallest <= RANK_TOL:
            raise InvalidStateError(
                f"input system states are not linearly independent "
                f"(smallest Gram eigenvalue {smallest:.3e})"
            )

    @property
    def joint_layout(self) -> SubsystemLayout:
        return self.system.tensor(self.apparatus)

    @property
    def n_branches(self) -> int:
        return len(self.branches)


def gram_matrix(states: Sequence[PureState]) -> np.ndarray:
    """Matrix of pairwise inner products <state_i|state_j>."""
    n = len(states)
    gram = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            gram[i, j] = inner(states[i], states[j])
    return gram


def _branch_vectors(spec: TransferSpec) -> tuple[np.ndarray, np.ndarray]:
    """Columns: pre vectors in_i (x) ready and post vectors out_i (x) record_i."""
    pre = np.column_stack(
        [np.kron(br.in_sys.amplitudes, spec.ready.amplitudes) for br in spec.branches]
    )
    post = np.column_stack(
        [np.kron(br.out_sys.amplitudes, br.out_record.amplitudes) for br in spec.branches]
    )
    return pre, post


def check_feasibility(spec: TransferSpec, tol: float = FEASIBILITY_TOL) -> FeasibilityReport:
    """Compare the pre and post Gram matrices entrywise.

    A unitary realization exists iff the two agree; the report carries the
    largest absolute deviation and the branch pair attaining it.
    """
    pre, post = _branch_vectors(spec)
    gram_pre = pre.conj().T @ pre
    gram_post = post.conj().T @ post
    dev = np.abs(gram_pre - gram_post)
    max_dev = float(np.max(dev))
    feasible = max_dev <= tol
    pair = None
    if not feasible:
        i, j = np.unravel_index(int(np.argmax(dev)), dev.shape)
        pair = (int(i), int(j))
    return FeasibilityReport(feasible=feasible, max_gram_deviation=max_dev, offending_pair=pair)


def _mgs_pivoted(columns: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Modified Gram-Schmidt with column pivoting; ties pick the lowest index."""
    work = columns.astype(np.complex128, copy=True)
    n = work.shape[1]
    basis = []
    order = []
    remaining = list(range(n))
    for _ in range(n):
        norms = [np.linalg.norm(work[:, j]) for j in remaining]
        best = int(np.argmax(norms))  # first maximum wins
        if norms[best] < RANK_TOL:
            raise NumericalRankLossError(
                f"pivot residual {norms[best]:.3e} below rank tolerance {RANK_TOL}"
            )
        j = remaining.pop(best)
        q = work[:, j] / np.linalg.norm(work[:, j])
        basis.append(q)
        order.append(j)
        for k in remaining:
            work[:, k] -= q * np.vdot(q, work[:, k])
    return np.column_stack(basis), order


def _mgs_in_order(columns: np.ndarray, order: list[int]) -> np.ndarray:
    """Gram-Schmidt following a prescribed elimination order."""
    basis = []
    for j in order:
        vec = columns[:, j].astype(np.complex128, copy=True)
        for q in basis:
            vec -= q * np.vdot(q, vec)
        norm = np.linalg.norm(vec)
        if norm < RANK_TOL:
            raise NumericalRankLossError(
                f"output family degenerated (residual {norm:.3e}) during completion"
            )
        basis.append(vec / norm)
    return np.column_stack(basis)


def _extend_to_basis(partial: np.ndarray) -> np.ndarray:
    """Append computational basis vectors (index order, two orthogonalization passes)."""
    dim = partial.shape[0]
    cols = [partial[:, k] for k in range(partial.shape[1])]
    for j in range(dim):
        if len(cols) == dim:
            break
        vec = np.zeros(dim, dtype=np.complex128)
        vec[j] = 1.0
        for _ in range(2):
            for q in cols:
                vec -= q * np.vdot(q, vec)
        norm = np.linalg.norm(vec)
        if norm > _EXTEND_TOL:
            cols.append(vec / norm)
    if len(cols) != dim:
        raise NumericalRankLossError("failed to extend to a full orthonormal basis")
    return np.column_stack(cols)


def complete_to_unitary(spec: TransferSpec) -> UnitaryOperator:
    """Deterministic unitary sending every in_i (x) ready to out_i (x) record_i.

    The input family is orthonormalized by pivoted Gram-Schmidt, the output
    family by the same elimination order, both are extended to full bases in
    computational index order, and the unitary is the change-of-basis product.
    Identical specs yield bit-identical matrices.

    Raises :class:`InfeasibleSpecError` when the Gram matrices disagree beyond
    tolerance and :class:`NumericalRankLossError` on degenerate spans.
    """
    report = check_feasibility(spec)
    if not report.feasible:
        raise InfeasibleSpecError(report)
    pre, post = _branch_vectors(spec)
    q_in, order = _mgs_pivoted(pre)
    q_out = _mgs_in_order(post, order)
    full_in = _extend_to_basis(q_in)
    full_out = _extend_to_basis(q_out)
    return UnitaryOperator(spec.joint_layout, full_out @ full_in.conj().T)


def verify_repeatability(U: UnitaryOperator, spec: TransferSpec) -> float:
    """Worst-branch survival probability <in_i| rho_sys |in_i> after the channel."""
    joint = spec.joint_layout
    if U.layout != joint:
        raise LayoutMismatchError("unitary does not act on the spec's system (x) apparatus layout")
    worst = 1.0
    for br in spec.branches:
        amps = U.matrix @ np.kron(br.in_sys.amplitudes, spec.ready.amplitudes)
        state = PureState(joint, amps / np.linalg.norm(amps))
        rho_sys = partial_trace(state, spec.system.labels)
        v = br.in_sys.amplitudes
        fidelity = float(np.real(v.conj() @ rho_sys.matrix @ v))
        worst = min(worst, fidelity)
    return worst


def state_with_overlap(base: PureState, overlap: complex, rng: np.random.Generator) -> PureState:
    """Random unit state b with <base|b> equal to ``overlap`` (|overlap| <= 1)."""
    mag = abs(overlap)
    if mag > 1.0 + 1e-12:
        raise InvalidStateError(f"target overlap magnitude {mag} exceeds 1")
    d = base.dim
    if d == 1:
        raise InvalidStateError("need dimension >= 2 to set an overlap")
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    z -= base.amplitudes * np.vdot(base.amplitudes, z)
    norm = np.linalg.norm(z)
    if norm < 1e-12:  # astronomically unlikely; retry deterministically
        z = np.roll(base.amplitudes, 1) * 1j
        z -= base.amplitudes * np.vdot(base.amplitudes, z)
        norm = np.linalg.norm(z)
    perp = z / norm
    amps = overlap * base.amplitudes + math.sqrt(max(0.0, 1.0 - mag * mag)) * perp
    return PureState(base.layout, amps / np.linalg.norm(amps))


def random_repeatable_spec(
    d_sys: int,
    d_app: int,
    overlap: complex,
    record_overlap: complex,
    rng: np.random.Generator,
    system_label: str = "S",
    apparatus_label: str = "A",
) -> TransferSpec:
    """Two-branch spec with out_sys = in_sys, prescribed system and record overlaps.

    ``record_overlap = 1`` produces identical records (feasible for any system
    overlap); any record overlap with ``|1 - record_overlap|`` large compared to
    the feasibility tolerance is infeasible whenever the system overlap is not
    negligible.
    """
    sys_layout = SubsystemLayout(((system_label, d_sys),))
    app_layout = SubsystemLayout(((apparatus_label, d_app),))
    v = random_pure(sys_layout, rng)
    w = state_with_overlap(v, overlap, rng)
    ready = random_pure(app_layout, rng)
    record_v = random_pure(app_layout, rng)
    if record_overlap == 1:
        record_w = record_v
    else:
        record_w = state_with_overlap(record_v, record_overlap, rng)
    return TransferSpec(
        system=sys_layout,
        apparatus=app_layout,
        ready=ready,
        branches=(
            Branch(in_sys=v, out_sys=v, out_record=record_v),
            Branch(in_sys=w, out_sys=w, out_record=record_w),
        ),
    )
