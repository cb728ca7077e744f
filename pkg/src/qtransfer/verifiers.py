"""Residual evaluators and classifiers for the outcome-orthogonality dichotomy.

These functions grade claimed or realized transfers numerically:

* :func:`norm_residual` measures the norm mismatch between a superposed input
  and its branched image, which vanishes exactly when the transfer is
  norm-preserving for every relative phase.
* :func:`classify_dichotomy` sorts a claimed transfer into ``NoRecord``
  (records identical), ``OrthogonalOutcomes`` (input overlap zero), or
  ``Violation`` (no unitary realization exists).
* :func:`purified_residual` runs the same test with a mixed apparatus, made
  pure on an enlarged space with a ghost partner factor.
* :func:`mixed_invariant_gap` evaluates the Hilbert-Schmidt form of the
  argument, which needs no purification at all.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import LayoutMismatchError, NotRepeatableError, SpectrumMismatchError
from .linalg import (
    DensityOperator,
    PureState,
    SubsystemLayout,
    UnitaryOperator,
    inner,
    partial_trace,
    purify,
)

VERDICT_TOL = 1e-10
SPECTRUM_TOL = 1e-8
REPEATABILITY_TOL = 1e-8


class DichotomyTag(enum.Enum):
    NO_RECORD = "NoRecord"
    ORTHOGONAL_OUTCOMES = "OrthogonalOutcomes"
    VIOLATION = "Violation"


@dataclass(frozen=True)
class DichotomyVerdict:
    tag: DichotomyTag
    residual: float

    def to_line(self) -> str:
        return f"{self.tag.value} residual={self.residual!r}"


def _check_pair_layouts(v: PureState, w: PureState, av: PureState, aw: PureState) -> None:
    if v.layout != w.layout:
        raise LayoutMismatchError("system states live on different layouts")
    if av.layout != aw.layout:
        raise LayoutMismatchError("record states live on different layouts")
    v.layout.tensor(av.layout)  # validates disjoint labels


def norm_residual(
    alpha: complex,
    beta: complex,
    v: PureState,
    w: PureState,
    av: PureState,
    aw: PureState,
) -> float:
    """| ||alpha v + beta w||^2 - ||alpha v (x) av + beta w (x) aw||^2 |.

    Built from the explicit pre and post vectors, not from the closed form, so
    it is usable as an independent oracle for the closed form.
    """
    _check_pair_layouts(v, w, av, aw)
    pre = alpha * v.amplitudes + beta * w.amplitudes
    post = alpha * np.kron(v.amplitudes, av.amplitudes) + beta * np.kron(
        w.amplitudes, aw.amplitudes
    )
    pre_sq = float(np.vdot(pre, pre).real)
    post_sq = float(np.vdot(post, post).real)
    return abs(pre_sq - post_sq)


def classify_dichotomy(
    v: PureState,
    w: PureState,
    av: PureState,
    aw: PureState,
    tol: float = VERDICT_TOL,
) -> DichotomyVerdict:
    """Grade a claimed transfer v -> (v, av), w -> (w, aw).

    ``Violation`` when |<v|w>(1 - <av|aw>)| exceeds tolerance (no unitary can
    do this), otherwise ``OrthogonalOutcomes`` when the input overlap is zero
    within tolerance, otherwise ``NoRecord``.
    """
    _check_pair_layouts(v, w, av, aw)
    sys_overlap = inner(v, w)
    rec_overlap = inner(av, aw)
    residual = abs(sys_overlap * (1.0 - rec_overlap))
    if residual > tol:
        tag = DichotomyTag.VIOLATION
    elif abs(sys_overlap) <= tol:
        tag = DichotomyTag.ORTHOGONAL_OUTCOMES
    else:
        tag = DichotomyTag.NO_RECORD
    return DichotomyVerdict(tag=tag, residual=residual)


def _extend_by_ghost(U: UnitaryOperator, ghost: SubsystemLayout) -> UnitaryOperator:
    return UnitaryOperator(
        U.layout.tensor(ghost),
        np.kron(U.matrix, np.eye(ghost.total_dim, dtype=np.complex128)),
    )


def _survival(U: UnitaryOperator, sys_state: PureState, rho0: DensityOperator) -> float:
    joint = sys_state.layout.tensor(rho0.layout)
    pre = np.kron(np.outer(sys_state.amplitudes, sys_state.amplitudes.conj()), rho0.matrix)
    post = U.matrix @ pre @ U.matrix.conj().T
    rho_full = DensityOperator(joint, (post + post.conj().T) / 2.0)
    rho_sys = partial_trace(rho_full, sys_state.layout.labels)
    vec = sys_state.amplitudes
    return float(np.real(vec.conj() @ rho_sys.matrix @ vec))


def purified_branch_records(
    rho0: DensityOperator,
    U: UnitaryOperator,
    v: PureState,
    w: PureState,
) -> tuple[PureState, PureState]:
    """Ghost-extended record states reached from the two preserved branches.

    The apparatus starts in ``rho0``, purified with a ghost factor on which the
    channel acts trivially. Raises :class:`NotRepeatableError` unless ``U``
    preserves both system states within 1e-8 in survival probability.
    """
    if v.layout != w.layout:
        raise LayoutMismatchError("system states live on different layouts")
    if U.layout != v.layout.tensor(rho0.layout):
        raise LayoutMismatchError("unitary must act on system (x) apparatus")
    for state in (v, w):
        survival = _survival(U, state, rho0)
        if survival < 1.0 - REPEATABILITY_TOL:
            raise NotRepeatableError(
                f"channel disturbs a candidate outcome state (survival {survival!r})"
            )
    pure_ready = purify(rho0)
    ghost = pure_ready.layout.subset(pure_ready.layout.labels[len(rho0.layout.labels):])
    U_ext = _extend_by_ghost(U, ghost)
    d_sys = v.dim
    records = []
    for state in (v, w):
        amps = U_ext.matrix @ np.kron(state.amplitudes, pure_ready.amplitudes)
        table = amps.reshape(d_sys, -1)
        rec = state.amplitudes.conj() @ table  # contraction with the preserved branch
        rec = rec / np.linalg.norm(rec)
        records.append(PureState(pure_ready.layout, rec))
    return records[0], records[1]


def purified_residual(
    rho0: DensityOperator,
    U: UnitaryOperator,
    v: PureState,
    w: PureState,
) -> float:
    """|<v|w> (1 - <Av|Aw>)| with ghost-extended records from a mixed apparatus."""
    rec_v, rec_w = purified_branch_records(rho0, U, v, w)
    return abs(inner(v, w) * (1.0 - inner(rec_v, rec_w)))


def mixed_invariant_gap(
    rho0: DensityOperator,
    rho_v: DensityOperator,
    rho_w: DensityOperator,
) -> tuple[float, float]:
    """Both sides of the Hilbert-Schmidt identity for isospectral records.

    Returns ``(lhs, rhs)`` with ``lhs = Tr rho0^2 - Tr rho_v rho_w`` and
    ``rhs = Tr (rho_v - rho_w)^2 / 2``. For genuinely isospectral inputs the
    two agree, and both vanish iff the two record states coincide. Inputs
    whose spectra deviate from rho0's beyond 1e-8 raise
    :class:`SpectrumMismatchError`.
    """
    base = np.sort(np.linalg.eigvalsh(rho0.matrix))
    for name, rho in (("rho_v", rho_v), ("rho_w", rho_w)):
        if rho.layout != rho0.layout:
            raise LayoutMismatchError(f"{name} lives on a different layout than rho0")
        spectrum = np.sort(np.linalg.eigvalsh(rho.matrix))
        gap = float(np.max(np.abs(spectrum - base)))
        if gap > SPECTRUM_TOL:
            raise SpectrumMismatchError(
                f"{name} is not isospectral with rho0 (max eigenvalue gap {gap:.3e})"
            )
    lhs = float(
        (np.trace(rho0.matrix @ rho0.matrix) - np.trace(rho_v.matrix @ rho_w.matrix)).real
    )
    diff = rho_v.matrix - rho_w.matrix
    rhs = float(0.5 * np.trace(diff @ diff).real)
    return lhs, rhs
