"""Ascent over the unitary group on system (x) apparatus.

The objective rewards distinguishability of the two apparatus records (trace
distance of the reduced branch states) and penalizes disturbance of the two
system states. The penalty enters at amplitude scale,
``sqrt(1 - s_v) + sqrt(1 - s_w)`` with ``s`` the branch survival
probabilities, so that a large penalty weight pins the search to repeatable
channels tightly enough for the vanishing-record limit to be visible at
finite weights. The reported ``disturbance`` stays on the probability scale,
``2 - s_v - s_w``.

Unitaries are parametrized as exp(iH) with H Hermitian (d^2 real parameters);
gradients are central finite differences; the ascent is adaptive first order
(momentum plus per-parameter step scaling) with random restarts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidStateError, LayoutMismatchError
from .linalg import (
    PureState,
    SubsystemLayout,
    UnitaryOperator,
    basis_state,
    exp_i_hermitian,
)

GRAD_TOL = 1e-6
FD_STEP = 1e-5


@dataclass(frozen=True, eq=False)
class FrontierProblem:
    """One point of the information-disturbance tradeoff to optimize.

    ``lam`` is the repeatability penalty weight; ``distinguishability_weight``
    scales the reward term. ``ready`` defaults to the first basis vector of
    the apparatus.
    """

    v: PureState
    w: PureState
    apparatus_dim: int
    lam: float
    ready: PureState | None = None
    distinguishability_weight: float = 1.0
    seed: int = 0
    max_iters: int = 400
    restarts: int = 5
    step_size: float = 0.05
    grad_tol: float = GRAD_TOL
    fd_step: float = FD_STEP
    apparatus_label: str = "A"

    def __post_init__(self):
        if self.v.layout != self.w.layout:
            raise LayoutMismatchError("v and w must live on the same system layout")
        if self.lam < 0.0:
            raise InvalidStateError("penalty weight must be nonnegative")
        if self.apparatus_dim < 2:
            raise InvalidStateError("apparatus dimension must be at least 2")
        if self.max_iters < 1 or self.restarts < 1:
            raise InvalidStateError("iteration and restart budgets must be positive")
        if self.ready is not None and self.ready.layout != self.apparatus_layout:
            raise LayoutMismatchError("ready state must live on the apparatus layout")

    @property
    def apparatus_layout(self) -> SubsystemLayout:
        return SubsystemLayout(((self.apparatus_label, self.apparatus_dim),))

    @property
    def joint_layout(self) -> SubsystemLayout:
        return self.v.layout.tensor(self.apparatus_layout)

    def ready_state(self) -> PureState:
        if self.ready is not None:
            return self.ready
        return basis_state(self.apparatus_layout, 0)


@dataclass(frozen=True)
class FrontierPoint:
    """Evaluated channel: record distinguishability vs branch disturbance."""

    lam: float
    distinguishability: float
    disturbance: float
    objective: float
    iterations: int
    converged: bool

    def __post_init__(self):
        if not -1e-9 <= self.distinguishability <= 1.0 + 1e-9:
            raise InvalidStateError(f"distinguishability {self.distinguishability} outside [0, 1]")
        if not -1e-9 <= self.disturbance <= 2.0 + 1e-9:
            raise InvalidStateError(f"disturbance {self.disturbance} outside [0, 2]")


class _Context:
    """Raw-array working set for the hot evaluation path."""

    def __init__(self, problem: FrontierProblem):
        ready = problem.ready_state()
        self.d_sys = problem.v.dim
        self.d_app = problem.apparatus_dim
        self.dim = self.d_sys * self.d_app
        self.x_v = np.kron(problem.v.amplitudes, ready.amplitudes)
        self.x_w = np.kron(problem.w.amplitudes, ready.amplitudes)
        self.v = problem.v.amplitudes
        self.w = problem.w.amplitudes
        self.lam = problem.lam
        self.weight = problem.distinguishability_weight


def _metrics(u_mat: np.ndarray, ctx: _Context) -> tuple[float, float, float]:
    """(distinguishability, disturbance, objective) for one channel matrix."""
    m_v = (u_mat @ ctx.x_v).reshape(ctx.d_sys, ctx.d_app)
    m_w = (u_mat @ ctx.x_w).reshape(ctx.d_sys, ctx.d_app)
    rho_av = m_v.T @ m_v.conj()
    rho_aw = m_w.T @ m_w.conj()
    dist = 0.5 * float(np.abs(np.linalg.eigvalsh(rho_av - rho_aw)).sum())
    s_v = float(np.linalg.norm(ctx.v.conj() @ m_v) ** 2)
    s_w = float(np.linalg.norm(ctx.w.conj() @ m_w) ** 2)
    disturbance = min(2.0, max(0.0, 2.0 - s_v - s_w))
    penalty = math.sqrt(max(0.0, 1.0 - s_v)) + math.sqrt(max(0.0, 1.0 - s_w))
    objective = ctx.weight * dist - ctx.lam * penalty
    return min(1.0, max(0.0, dist)), disturbance, objective


def params_to_generator(params: np.ndarray, dim: int) -> np.ndarray:
    """Hermitian H from d^2 reals: diagonal first, then (re, im) per upper entry."""
    params = np.asarray(params, dtype=float)
    if params.size != dim * dim:
        raise InvalidStateError(f"need {dim * dim} parameters, got {params.size}")
    h = np.zeros((dim, dim), dtype=np.complex128)
    iu = np.triu_indices(dim, 1)
    upper = params[dim::2] + 1j * params[dim + 1::2]
    h[iu] = upper
    h += h.conj().T
    h[np.diag_indices(dim)] = params[:dim]
    return h


def generator_to_unitary(params: np.ndarray, dim: int) -> np.ndarray:
    return exp_i_hermitian(params_to_generator(params, dim))


def evaluate(U: UnitaryOperator, problem: FrontierProblem) -> FrontierPoint:
    """Measure one channel against the problem (no optimization)."""
    if U.layout != problem.joint_layout:
        raise LayoutMismatchError(
            f"unitary layout {U.layout!r} != problem layout {problem.joint_layout!r}"
        )
    ctx = _Context(problem)
    dist, disturbance, objective = _metrics(U.matrix, ctx)
    return FrontierPoint(
        lam=problem.lam,
        distinguishability=dist,
        disturbance=disturbance,
        objective=objective,
        iterations=0,
        converged=True,
    )


def _objective_of(params: np.ndarray, ctx: _Context) -> float:
    return _metrics(exp_i_hermitian(params_to_generator(params, ctx.dim)), ctx)[2]


def finite_difference_gradient(
    params: np.ndarray, ctx_objective, step: float
) -> np.ndarray:
    grad = np.empty(params.size)
    probe = params.astype(float, copy=True)
    for i in range(params.size):
        base = probe[i]
        probe[i] = base + step
        up = ctx_objective(probe)
        probe[i] = base - step
        down = ctx_objective(probe)
        probe[i] = base
        grad[i] = (up - down) / (2.0 * step)
    return grad


def _ascend(
    x0: np.ndarray, ctx: _Context, problem: FrontierProblem
) -> tuple[np.ndarray, int, bool]:
    """Adam-style ascent with a staged step-size decay.

    Returns the best-objective iterate seen (the path may oscillate around a
    constrained optimum under a heavy penalty), the iterations used, and
    whether the gradient max-norm dropped below tolerance.
    """
    x = x0.astype(float, copy=True)
    m = np.zeros_like(x)
    s = np.zeros_like(x)
    beta1, beta2, eps = 0.9, 0.999, 1e-9
    fun = lambda p: _objective_of(p, ctx)
    best_value = fun(x)
    best_x = x.copy()
    converged = False
    iters = 0
    for t in range(1, problem.max_iters + 1):
        iters = t
        grad = finite_difference_gradient(x, fun, problem.fd_step)
        if float(np.max(np.abs(grad))) < problem.grad_tol:
            converged = True
            break
        frac = t / problem.max_iters
        lr = problem.step_size * (1.0 if frac < 0.6 else 0.2 if frac < 0.85 else 0.04)
        m = beta1 * m + (1.0 - beta1) * grad
        s = beta2 * s + (1.0 - beta2) * grad * grad
        m_hat = m / (1.0 - beta1**t)
        s_hat = s / (1.0 - beta2**t)
        x += lr * m_hat / (np.sqrt(s_hat) + eps)
        value = fun(x)
        if value > best_value:
            best_value = value
            best_x = x.copy()
    return best_x, iters, converged


def optimize(problem: FrontierProblem) -> tuple[UnitaryOperator, FrontierPoint]:
    """Best channel over the restart family; deterministic under the seed.

    Restart 0 starts from the identity channel; the rest start from random
    Hermitian generators. Exhausting the iteration budget is reported through
    ``converged=False``, never as an error.
    """
    ctx = _Context(problem)
    n_params = ctx.dim * ctx.dim
    children = np.random.SeedSequence(problem.seed).spawn(problem.restarts)
    best: tuple[float, np.ndarray, int, bool] | None = None
    for r in range(problem.restarts):
        rng = np.random.default_rng(children[r])
        x0 = np.zeros(n_params) if r == 0 else rng.normal(0.0, 0.5, n_params)
        x, iters, converged = _ascend(x0, ctx, problem)
        value = _objective_of(x, ctx)
        if best is None or value > best[0]:
            best = (value, x, iters, converged)
    assert best is not None
    _, x, iters, converged = best
    u_mat = exp_i_hermitian(params_to_generator(x, ctx.dim))
    dist, disturbance, objective = _metrics(u_mat, ctx)
    point = FrontierPoint(
        lam=problem.lam,
        distinguishability=dist,
        disturbance=disturbance,
        objective=objective,
        iterations=iters,
        converged=converged,
    )
    return UnitaryOperator(problem.joint_layout, u_mat), point


@dataclass(frozen=True)
class FrontierRow:
    overlap: float
    point: FrontierPoint


def frontier_scan(
    overlaps: Sequence[float],
    lambdas: Sequence[float],
    seed: int,
    apparatus_dim: int = 4,
    max_iters: int = 400,
    restarts: int = 5,
    system_label: str = "S",
) -> list[FrontierRow]:
    """One optimized point per (overlap, lambda) pair, rows in scan order.

    For overlap c the system pair is |0> and c|0> + sqrt(1-c^2)|1>. Row seeds
    are derived from the scan seed by row index, so results do not depend on
    evaluation order.
    """
    for c in overlaps:
        if not 0.0 <= c < 1.0:
            raise InvalidStateError(f"overlap {c} outside [0, 1)")
    sys_layout = SubsystemLayout(((system_label, 2),))
    v = basis_state(sys_layout, 0)
    row_seeds = np.random.SeedSequence(seed).generate_state(
        max(1, len(overlaps) * len(lambdas)), dtype=np.uint64
    )
    rows = []
    idx = 0
    for c in overlaps:
        w = PureState(sys_layout, np.array([c, math.sqrt(1.0 - c * c)], dtype=np.complex128))
        for lam in lambdas:
            problem = FrontierProblem(
                v=v,
                w=w,
                apparatus_dim=apparatus_dim,
                lam=float(lam),
                seed=int(row_seeds[idx]),
                max_iters=max_iters,
                restarts=restarts,
            )
            _, point = optimize(problem)
            rows.append(FrontierRow(overlap=float(c), point=point))
            idx += 1
    return rows
