"""Redundancy observables on branching global states.

Fragment mutual information, the partial-information curve, redundancy,
quantum discord, and the comparison between the reduced-state eigenbasis and
a designated pointer basis. All entropies are in bits.

These metrics read reduced density operators as probability carriers, which
is a standard (and here deliberate) interpretive step on top of the purely
unitary machinery in the rest of the package.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateSchmidtError,
    DegenerateSystemError,
    InvalidStateError,
    LayoutMismatchError,
    UnknownLabelError,
    UnsupportedDimensionError,
)
from .linalg import (
    DensityOperator,
    PureState,
    inner,
    partial_trace,
    von_neumann_entropy,
)

MONOTONE_TOL = 1e-9
DEGENERACY_TOL = 1e-9
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class FragmentSpec:
    """Environment labels forming one intercepted fragment."""

    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(set(self.labels)) != len(self.labels):
            raise InvalidStateError(f"duplicate labels in fragment {self.labels}")


def _fragment_labels(fragment) -> tuple[str, ...]:
    if isinstance(fragment, FragmentSpec):
        return fragment.labels
    return FragmentSpec(tuple(fragment)).labels


@dataclass(frozen=True)
class PipPoint:
    fragment_size: int
    mean_bits: float
    min_bits: float
    max_bits: float
    samples: int


@dataclass(frozen=True)
class PartialInfoCurve:
    """Mean/min/max fragment mutual information per fragment size.

    Means must be nondecreasing in fragment size within 1e-9, which holds for
    exhaustively averaged curves and for permutation-symmetric states.
    """

    points: tuple[PipPoint, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        for a, b in zip(self.points, self.points[1:]):
            if b.mean_bits < a.mean_bits - MONOTONE_TOL:
                raise InvalidStateError(
                    f"mean mutual information decreases from size {a.fragment_size} "
                    f"({a.mean_bits}) to {b.fragment_size} ({b.mean_bits})"
                )

    def mean_at(self, size: int) -> float:
        for p in self.points:
            if p.fragment_size == size:
                return p.mean_bits
        raise UnknownLabelError(f"no curve point for fragment size {size}")


def mutual_information(
    state: PureState,
    fragment: FragmentSpec | Iterable[str],
    system_label: str = "S",
) -> float:
    """I(S:F) = H(S) + H(F) - H(SF) for a pure global state, in bits.

    The empty fragment gives 0 by convention. Since the global state is pure,
    H(SF) is computed as the entropy of the complementary fragment, which is
    the cheaper side.
    """
    labels = _fragment_labels(fragment)
    env = [l for l in state.layout.labels if l != system_label]
    if system_label not in state.layout.labels:
        raise UnknownLabelError(f"no system {system_label!r} in {state.layout.labels}")
    unknown = set(labels) - set(env)
    if unknown:
        raise UnknownLabelError(f"fragment labels {sorted(unknown)} not in environment {env}")
    if not labels:
        return 0.0
    h_s = von_neumann_entropy(partial_trace(state, [system_label]))
    h_f = von_neumann_entropy(partial_trace(state, labels))
    complement = [l for l in env if l not in labels]
    if complement:
        h_sf = von_neumann_entropy(partial_trace(state, complement))
    else:
        h_sf = 0.0  # fragment exhausts the environment of a pure global state
    return h_s + h_f - h_sf


def _distinct_fragments(
    env: Sequence[str], size: int, cap: int, rng: np.random.Generator
) -> list[tuple[str, ...]]:
    total = math.comb(len(env), size)
    if total <= cap:
        return [tuple(c) for c in itertools.combinations(env, size)]
    chosen: list[tuple[str, ...]] = []
    seen = set()
    while len(chosen) < cap:
        pick = tuple(sorted(rng.choice(len(env), size=size, replace=False).tolist()))
        if pick not in seen:
            seen.add(pick)
            chosen.append(tuple(env[i] for i in pick))
    return chosen


def partial_info_curve(
    state: PureState,
    samples_per_size: int,
    seed,
    system_label: str = "S",
) -> PartialInfoCurve:
    """Average I(S:F) over distinct fragments of each size 0..n.

    Exhaustive whenever the number of size-m fragments is at most
    ``samples_per_size``, otherwise that many distinct fragments are sampled
    uniformly (deterministic under the seed).
    """
    if samples_per_size < 1:
        raise InvalidStateError("samples_per_size must be >= 1")
    env = [l for l in state.layout.labels if l != system_label]
    if not env:
        raise UnknownLabelError("state has no environment subsystems")
    rng = np.random.default_rng(seed)
    h_s = von_neumann_entropy(partial_trace(state, [system_label]))
    points = []
    for size in range(len(env) + 1):
        if size == 0:
            points.append(PipPoint(0, 0.0, 0.0, 0.0, 1))
            continue
        values = [
            mutual_information(state, frag, system_label=system_label)
            for frag in _distinct_fragments(env, size, samples_per_size, rng)
        ]
        arr = np.asarray(values)
        if float(arr.max()) > 2.0 * h_s + MONOTONE_TOL:
            raise InvalidStateError("mutual information exceeded 2 H(S) beyond tolerance")
        points.append(
            PipPoint(size, float(arr.mean()), float(arr.min()), float(arr.max()), len(values))
        )
    return PartialInfoCurve(tuple(points))


def redundancy(
    state: PureState,
    delta: float,
    samples_per_size: int | None = None,
    seed=0,
    system_label: str = "S",
) -> float:
    """R_delta = n / m_delta, with m_delta the smallest fragment size whose
    average mutual information reaches (1 - delta) H(S); 0 when none does.

    Exhaustive fragment averaging unless ``samples_per_size`` caps it.
    """
    if not 0.0 < delta < 1.0:
        raise InvalidStateError(f"delta {delta} outside (0, 1)")
    h_s = von_neumann_entropy(partial_trace(state, [system_label]))
    if h_s <= DEGENERACY_TOL:
        raise DegenerateSystemError(f"system entropy {h_s!r} too small for redundancy")
    env = [l for l in state.layout.labels if l != system_label]
    n = len(env)
    cap = samples_per_size if samples_per_size is not None else max(math.comb(n, n // 2), 1)
    curve = partial_info_curve(state, samples_per_size=cap, seed=seed, system_label=system_label)
    threshold = (1.0 - delta) * h_s
    for point in curve.points:
        if point.fragment_size >= 1 and point.mean_bits >= threshold:
            return n / point.fragment_size
    return 0.0


def _measurement_pair(theta: float, phi: float) -> tuple[np.ndarray, np.ndarray]:
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    e = complex(math.cos(phi), math.sin(phi))
    m0 = np.array([c, e * s], dtype=np.complex128)
    m1 = np.array([-np.conj(e) * s, c], dtype=np.complex128)
    return m0, m1


def _entropy_bits(mat: np.ndarray) -> float:
    vals = np.linalg.eigvalsh(mat)
    vals = vals[vals > 1e-12]
    if vals.size == 0:
        return 0.0
    return float(-(vals * np.log2(vals)).sum()) + 0.0


def quantum_discord(
    rho: DensityOperator,
    measured: str,
    grid: int = 64,
    refine_rounds: int = 12,
) -> float:
    """I(S:A) minus the best projectively extractable correlation J, in bits.

    The measured subsystem must be a qubit. J is maximized over projective
    measurements parametrized by Bloch angles: a ``grid x grid`` scan over
    (polar, azimuth) followed by rounds of alternating golden-section
    refinement around the best cell, stopping early once improvement stalls.
    """
    axis = rho.layout.axis(measured)
    if rho.layout.dims[axis] != 2:
        raise UnsupportedDimensionError(
            f"measured subsystem {measured!r} has dimension {rho.layout.dims[axis]}, need 2"
        )
    sys_labels = [l for l in rho.layout.labels if l != measured]
    if not sys_labels:
        raise UnknownLabelError("nothing left to correlate with the measured subsystem")
    rho_s = partial_trace(rho, sys_labels)
    rho_a = partial_trace(rho, [measured])
    total_info = (
        von_neumann_entropy(rho_s) + von_neumann_entropy(rho_a) - von_neumann_entropy(rho)
    )
    h_s = von_neumann_entropy(rho_s)

    dims = rho.layout.dims
    pre = math.prod(dims[:axis])
    post = math.prod(dims[axis + 1:])
    t = rho.matrix.reshape(pre, 2, post, pre, 2, post)
    d_sys = pre * post

    def classical_j(theta: float, phi: float) -> float:
        value = h_s
        for m in _measurement_pair(theta, phi):
            cond = np.einsum("a,iakjbl,b->ikjl", m.conj(), t, m).reshape(d_sys, d_sys)
            p = float(np.trace(cond).real)
            if p > 1e-12:
                value -= p * _entropy_bits((cond + cond.conj().T) / (2.0 * p))
        return value

    thetas = np.linspace(0.0, math.pi, grid)
    phis = np.linspace(0.0, 2.0 * math.pi, grid, endpoint=False)
    best_j = -math.inf
    best_theta = best_phi = 0.0
    for theta in thetas:
        for phi in phis:
            j = classical_j(theta, phi)
            if j > best_j:
                best_j, best_theta, best_phi = j, float(theta), float(phi)

    def golden_max(fun, lo: float, hi: float) -> tuple[float, float]:
        a, b = lo, hi
        x1 = b - GOLDEN * (b - a)
        x2 = a + GOLDEN * (b - a)
        f1, f2 = fun(x1), fun(x2)
        for _ in range(40):
            if f1 < f2:
                a, x1, f1 = x1, x2, f2
                x2 = a + GOLDEN * (b - a)
                f2 = fun(x2)
            else:
                b, x2, f2 = x2, x1, f1
                x1 = b - GOLDEN * (b - a)
                f1 = fun(x1)
        x = (a + b) / 2.0
        return x, fun(x)

    span_theta = math.pi / (grid - 1)
    span_phi = 2.0 * math.pi / grid
    theta, phi, j_best = best_theta, best_phi, best_j
    for _ in range(refine_rounds):
        theta, _ = golden_max(
            lambda x: classical_j(min(max(x, 0.0), math.pi), phi),
            theta - span_theta,
            theta + span_theta,
        )
        theta = min(max(theta, 0.0), math.pi)
        phi, j_new = golden_max(lambda x: classical_j(theta, x), phi - span_phi, phi + span_phi)
        if j_new <= j_best + 1e-13:
            j_best = max(j_best, j_new)
            break
        j_best = j_new
    return total_info - j_best


def schmidt_pointer_gap(
    state: PureState,
    pointer_states: tuple[PureState, PureState],
    records: tuple[PureState, PureState] | None = None,
    system_label: str = "S",
):
    """Angle between the reduced-state eigenbasis and the designated pointer basis.

    The system must be a qubit with a nondegenerate reduced spectrum
    (:class:`DegenerateSchmidtError` otherwise). Returns the angle in radians;
    when the branch record pair is supplied, returns ``(angle, |<e_v|e_w>|)``.
    The angle vanishes exactly when the eigenbasis coincides with the pointer
    basis, which happens once the records are perfectly distinguishing.
    """
    p0, p1 = pointer_states
    rho_s = partial_trace(state, [system_label])
    if rho_s.dim != 2:
        raise UnsupportedDimensionError("pointer-basis comparison is defined for a qubit system")
    if p0.layout != rho_s.layout or p1.layout != rho_s.layout:
        raise LayoutMismatchError("pointer states must live on the system layout")
    if abs(inner(p0, p1)) > 1e-10:
        raise InvalidStateError("pointer states must be orthonormal")
    vals, vecs = np.linalg.eigh(rho_s.matrix)
    if abs(vals[1] - vals[0]) <= DEGENERACY_TOL:
        raise DegenerateSchmidtError(
            f"reduced spectrum {vals.tolist()} is degenerate; eigenbasis ill-defined"
        )
    principal = vecs[:, 1]
    c = max(
        abs(complex(np.vdot(principal, p0.amplitudes))),
        abs(complex(np.vdot(principal, p1.amplitudes))),
    )
    angle = math.acos(min(1.0, c))
    if records is None:
        return angle
    rec_v, rec_w = records
    return angle, abs(inner(rec_v, rec_w))
