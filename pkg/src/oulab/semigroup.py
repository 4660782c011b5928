"""Heat semigroup U(t), drift group S(t) and the Ornstein-Uhlenbeck semigroup T(t).

T(t) f = S(t)(g_t * f) with (S(t) f)(x) = f(e^{tB} x) and the Gaussian
g_t acting as the Fourier multiplier exp(-<Q_t xi, xi>).  The multiplier
is applied first, then the flow; the flow is evaluated by summing the
trigonometric interpolant at the off-grid points e^{tB} x_j.  Pulled-back
points that leave the box are set to zero (the state is assumed decayed
there, and the guards check it).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np

from . import _kernels
from .errors import InvalidInputError
from .field import DEFAULT_DECAY_THRESHOLD, GridSpec, GridState, apply_multiplier, l2_norm
from .linops import CovarianceMatrix, DriftMatrix, _as_drift, covariance, matrix_exponential

__all__ = [
    "SemigroupStep",
    "make_step",
    "heat_apply",
    "drift_apply",
    "drift_adjoint_apply",
    "ou_apply",
    "ou_adjoint_apply",
    "ou_norm",
    "trajectory",
]


@dataclass(frozen=True, eq=False)
class SemigroupStep:
    """Everything needed to apply T(t) for one (B, t): Q_t and e^{tB}.

    Reusable across states on the same grid; per-grid multipliers and
    target points are cached.
    """

    drift: DriftMatrix
    t: float
    qt: CovarianceMatrix
    flow: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def multiplier(self, spec: GridSpec) -> np.ndarray:
        key = ("mult", spec)
        if key not in self._cache:
            xi = spec.frequency_mesh()
            q = self.qt.q
            form = sum(q[i, j] * xi[i] * xi[j] for i in range(spec.n) for j in range(spec.n))
            self._cache[key] = np.exp(-form)
        return self._cache[key]

    @property
    def flow_is_identity(self) -> bool:
        return bool(np.array_equal(self.flow, np.eye(self.drift.n)))


def make_step(B, t: float, tol: float = 1e-10, method: str = "quadrature") -> SemigroupStep:
    B = _as_drift(B)
    if not (np.isfinite(t) and t >= 0):
        raise InvalidInputError(f"semigroup time must be >= 0, got {t!r}")
    qt = covariance(B, t, tol=tol, method=method)
    return SemigroupStep(B, float(t), qt, matrix_exponential(B, t))


def heat_apply(state: GridState, t: float) -> GridState:
    """U(t) f: the spectrum times exp(-|xi|^2 t)."""
    if not (np.isfinite(t) and t >= 0):
        raise InvalidInputError(f"heat semigroup needs t >= 0, got {t!r}")
    if t == 0.0:
        return state
    return apply_multiplier(state, np.exp(-t * state.spec.xi_squared()))


def _targets(spec: GridSpec, flow: np.ndarray, cache: dict = None):
    key = ("targets", spec)
    if cache is not None and key in cache:
        return cache[key]
    x = spec.points_array()
    y = x @ flow.T
    L = spec.half_width
    inside = np.all((y >= -L) & (y < L), axis=1)
    shifted = y - spec.axis()[0]
    if cache is not None:
        cache[key] = (shifted, inside)
    return shifted, inside


def _check_drift(B: DriftMatrix, spec: GridSpec):
    if B.n != spec.n:
        raise InvalidInputError(f"drift is {B.n}x{B.n} but the grid is {spec.n}-D")


def _flow_forward(state: GridState, flow: np.ndarray, threshold: float, cache=None) -> GridState:
    spec = state.spec
    state.check_decay(threshold, "drift input")
    y, inside = _targets(spec, flow, cache)
    a = np.fft.fftn(state.values) / spec.size
    vals = _kernels.evaluate(a, y, spec.frequencies())
    vals[~inside] = 0.0
    out = GridState(spec, vals)
    out.check_decay(threshold, "drift output")
    return out


def _flow_transpose(state: GridState, flow: np.ndarray, threshold: float, cache=None) -> GridState:
    # Exact algebraic transpose of _flow_forward.  Only the input is guarded:
    # spreading onto off-grid points aliases into slowly decaying Dirichlet
    # tails, which is part of the transpose itself, not a truncation error.
    spec = state.spec
    state.check_decay(threshold, "adjoint drift input")
    y, inside = _targets(spec, flow, cache)
    w = np.where(inside, state.values.ravel(), 0.0)
    b = _kernels.spread(w, y, spec.frequencies(), spec.n)
    return GridState(spec, np.fft.fftn(b).real / spec.size)


def drift_apply(state: GridState, B, t: float,
                threshold: float = DEFAULT_DECAY_THRESHOLD) -> GridState:
    """S(t) f = f(e^{tB} .) by exact trigonometric evaluation off the grid."""
    B = _as_drift(B)
    _check_drift(B, state.spec)
    flow = matrix_exponential(B, t)
    if np.array_equal(flow, np.eye(B.n)):
        return state
    return _flow_forward(state, flow, threshold)


def drift_adjoint_apply(state: GridState, B, t: float,
                        threshold: float = DEFAULT_DECAY_THRESHOLD) -> GridState:
    """Discrete transpose of ``drift_apply`` in the h^N-weighted inner product."""
    B = _as_drift(B)
    _check_drift(B, state.spec)
    flow = matrix_exponential(B, t)
    if np.array_equal(flow, np.eye(B.n)):
        return state
    return _flow_transpose(state, flow, threshold)


def ou_apply(state: GridState, step: SemigroupStep,
             threshold: float = DEFAULT_DECAY_THRESHOLD) -> GridState:
    """T(t) f = S(t)(g_t * f)."""
    _check_drift(step.drift, state.spec)
    if step.t == 0.0:
        return state
    smoothed = apply_multiplier(state, step.multiplier(state.spec))
    if step.flow_is_identity:
        return smoothed
    return _flow_forward(smoothed, step.flow, threshold, step._cache)


def ou_adjoint_apply(state: GridState, step: SemigroupStep,
                     threshold: float = DEFAULT_DECAY_THRESHOLD) -> GridState:
    """T(t)^* g: transpose flow, then the (self-adjoint) Gaussian multiplier."""
    _check_drift(step.drift, state.spec)
    if step.t == 0.0:
        return state
    if not step.flow_is_identity:
        state = _flow_transpose(state, step.flow, threshold, step._cache)
    return apply_multiplier(state, step.multiplier(state.spec))


def ou_norm(state: GridState, step: SemigroupStep) -> float:
    """||T(t) f|| from the factorization: exp(-t tr(B)/2) ||g_t * f||.

    Uses the exact norm identity of the drift group instead of evaluating
    the flow, so it carries no interpolation or box-escape error.
    """
    smoothed = apply_multiplier(state, step.multiplier(state.spec))
    return float(np.exp(-0.5 * step.t * step.drift.trace) * l2_norm(smoothed))


def trajectory(u0: GridState, B, theta: float, k: int, tol: float = 1e-10,
               threshold: float = DEFAULT_DECAY_THRESHOLD) -> List[GridState]:
    """u(t_i) = T(t_i) u0 at t_i = i theta / k, each evaluated directly from u0."""
    B = _as_drift(B)
    if not (np.isfinite(theta) and theta > 0):
        raise InvalidInputError(f"theta must be positive, got {theta!r}")
    if k < 1:
        raise InvalidInputError(f"need k >= 1 time steps, got {k!r}")
    times = theta * np.arange(k + 1) / k
    return [ou_apply(u0, make_step(B, t, tol), threshold) for t in times]
