"""Small dense linear algebra for the drift matrix B.

Covers the flow e^{tB}, the covariance matrices

    Q_t = int_0^t e^{sB} e^{sB^T} ds,

and the constants c1 <= <Q_t xi, xi>/t <= c2 (unit xi, t in [0, theta])
behind the logarithmic convexity estimate of the OU semigroup.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad_vec, solve_ivp
from scipy.linalg import expm

from .errors import ConvergenceError, InvalidInputError

__all__ = [
    "DriftMatrix",
    "CovarianceMatrix",
    "ConvexityConstants",
    "QtBoundReport",
    "matrix_exponential",
    "covariance",
    "covariance_series",
    "sphere_directions",
    "convexity_constants",
    "verify_qt_lower_bound",
]


@dataclass(frozen=True, eq=False)
class DriftMatrix:
    """The real N x N drift matrix B of du/dt = Lap u + Bx . grad u."""

    entries: np.ndarray
    trace: float = field(init=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float, copy=True)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InvalidInputError(f"drift matrix must be square N x N, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidInputError("drift matrix entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "trace", float(np.trace(a)))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def T(self) -> np.ndarray:
        return self.entries.T

    @classmethod
    def zero(cls, n: int) -> "DriftMatrix":
        return cls(np.zeros((n, n)))

    def is_zero(self) -> bool:
        return not np.any(self.entries)

    def is_skew(self) -> bool:
        return bool(np.array_equal(self.entries, -self.entries.T))

    def same_as(self, other: "DriftMatrix") -> bool:
        return self.n == other.n and bool(np.array_equal(self.entries, other.entries))

    def __eq__(self, other):
        return isinstance(other, DriftMatrix) and self.same_as(other)

    def __hash__(self):
        return hash(self.entries.tobytes())

    def __repr__(self):
        return f"DriftMatrix({self.entries.tolist()!r})"


def _as_drift(B) -> DriftMatrix:
    return B if isinstance(B, DriftMatrix) else DriftMatrix(B)


def matrix_exponential(B, t: float) -> np.ndarray:
    """Return e^{tB}. Negative t is allowed (the drift flow is a group)."""
    B = _as_drift(B)
    if not np.isfinite(t):
        raise InvalidInputError(f"time must be finite, got {t!r}")
    if t == 0.0 or B.is_zero():
        return np.eye(B.n)
    return expm(t * B.entries)


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Q_t for a fixed drift. Symmetric, positive definite for t > 0, zero at t = 0."""

    t: float
    q: np.ndarray
    error_estimate: float = 0.0

    def __post_init__(self):
        q = np.array(self.q, dtype=float, copy=True)
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    def quadratic_form(self, xi) -> np.ndarray:
        """<Q_t xi, xi> for one direction (shape (N,)) or a batch (shape (..., N))."""
        xi = np.asarray(xi, dtype=float)
        return np.einsum("...i,ij,...j->...", xi, self.q, xi)

    def is_symmetric(self, rtol: float = 1e-12) -> bool:
        scale = max(np.abs(self.q).max(), np.finfo(float).tiny)
        return bool(np.abs(self.q - self.q.T).max() <= rtol * scale)

    def is_positive_definite(self) -> bool:
        return bool(np.linalg.eigvalsh(self.q).min() > 0.0)


def _vanloan(B: np.ndarray, t: float) -> np.ndarray:
    # expm([[B, I], [0, -B^T]] t) has upper-right block G with G e^{tB^T} = Q_t
    n = B.shape[0]
    blk = np.zeros((2 * n, 2 * n))
    blk[:n, :n] = B
    blk[:n, n:] = np.eye(n)
    blk[n:, n:] = -B.T
    big = expm(t * blk)
    return big[:n, n:] @ big[:n, :n].T


def _covariance_quadrature(B: np.ndarray, t: float, tol: float, limit: int):
    def integrand(s):
        e = expm(s * B)
        return e @ e.T

    q, err = quad_vec(integrand, 0.0, t, epsabs=tol / 10.0, epsrel=1e-14, limit=limit)
    return q, float(err)


def _covariance_ode(B: np.ndarray, t: float, tol: float):
    # Lyapunov ODE Q' = I + BQ + QB^T, Q(0) = 0; error from a 10x looser companion run
    n = B.shape[0]
    eye = np.eye(n)

    def rhs(_s, y):
        q = y.reshape(n, n)
        return (eye + B @ q + q @ B.T).ravel()

    def run(atol):
        sol = solve_ivp(rhs, (0.0, t), np.zeros(n * n), method="DOP853",
                        rtol=1e-13, atol=atol)
        if not sol.success:  # pragma: no cover
            raise ConvergenceError(f"Lyapunov ODE integration failed: {sol.message}")
        return sol.y[:, -1].reshape(n, n)

    fine = run(tol * 1e-4)
    coarse = run(tol * 1e-3)
    return fine, float(np.abs(fine - coarse).max())


def covariance(B, t: float, tol: float = 1e-10, method: str = "quadrature",
               limit: int = 2000) -> CovarianceMatrix:
    """Compute Q_t to absolute accuracy ``tol`` per entry.

    Parameters
    ----------
    B : DriftMatrix or array_like
    t : float
        Nonnegative time.
    tol : float
        Absolute per-entry tolerance.
    method : {"quadrature", "ode", "vanloan"}
        ``quadrature`` integrates e^{sB}e^{sB^T} adaptively; ``ode`` integrates
        the Lyapunov equation Q' = I + BQ + QB^T; ``vanloan`` reads Q_t off a
        block matrix exponential (no error estimate, exact up to rounding).

    Raises
    ------
    InvalidInputError
        For t < 0, tol <= 0 or an unknown method.
    ConvergenceError
        When the error estimate of the chosen path exceeds ``tol``.
    """
    B = _as_drift(B)
    if not np.isfinite(t) or t < 0:
        raise InvalidInputError(f"covariance needs t >= 0, got {t!r}")
    if not tol > 0:
        raise InvalidInputError(f"tolerance must be positive, got {tol!r}")
    n = B.n
    if t == 0.0:
        return CovarianceMatrix(0.0, np.zeros((n, n)))
    if method == "quadrature":
        q, err = _covariance_quadrature(B.entries, t, tol, limit)
    elif method == "ode":
        q, err = _covariance_ode(B.entries, t, tol)
    elif method == "vanloan":
        q, err = _vanloan(B.entries, t), 0.0
    else:
        raise InvalidInputError(f"unknown covariance method {method!r}")
    if err > tol:
        raise ConvergenceError(
            f"covariance ({method}) reached error estimate {err:.3e} > tol {tol:.3e}",
            estimate=err)
    q = 0.5 * (q + q.T)
    return CovarianceMatrix(float(t), q, err)


def covariance_series(B, times: Sequence[float]) -> np.ndarray:
    """Q_t for many times at once, shape (len(times), N, N), via the block exponential."""
    B = _as_drift(B)
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or not np.all(np.isfinite(times)):
        raise InvalidInputError("covariance_series needs finite t >= 0")
    out = np.empty((times.size, B.n, B.n))
    for i, t in enumerate(times):
        if t == 0.0:
            out[i] = 0.0
        else:
            q = _vanloan(B.entries, t)
            out[i] = 0.5 * (q + q.T)
    return out


def sphere_directions(n: int, count: int) -> np.ndarray:
    """Deterministic unit vectors on S^{n-1}, shape (m, n).

    n = 1 gives {-1, +1}; n = 2 a uniform angular grid; n = 3 a Fibonacci
    sphere; larger n uses an unscrambled Sobol sequence pushed through the
    normal quantile, plus the coordinate axes.
    """
    if n < 1 or count < 1:
        raise InvalidInputError("sphere_directions needs n >= 1 and count >= 1")
    if n == 1:
        return np.array([[-1.0], [1.0]])
    if n == 2:
        ang = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if n == 3:
        k = np.arange(count) + 0.5
        z = 1.0 - 2.0 * k / count
        r = np.sqrt(1.0 - z * z)
        phi = np.pi * (3.0 - np.sqrt(5.0)) * k
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    from scipy.stats import norm, qmc

    # the first two unscrambled Sobol points (0 and the all-1/2 point) map to the origin
    m = int(np.ceil(np.log2(count + 2)))
    pts = qmc.Sobol(d=n, scramble=False).random_base2(m)[2:count + 2]
    g = norm.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
    g = np.vstack([np.eye(n), -np.eye(n), g])
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass(frozen=True)
class ConvexityConstants:
    """c1, c2, c = c1/c2 and kappa for one (B, theta).

    ``w(t) = c t / theta`` is the interpolation exponent of the estimate
    ||T(t) f|| <= kappa ||f||^{1-w(t)} ||T(theta) f||^{w(t)}.
    Construction does not enforce the invariants so that tampered copies
    can be fed to the verifiers; ``check()`` does.
    """

    theta: float
    c1: float
    c2: float
    c: float
    kappa: float
    drift: DriftMatrix
    argmin_t: float = 0.0
    argmax_t: float = 0.0

    w_description = "w(t) = c*t/theta"

    def w(self, t):
        return self.c * np.asarray(t, dtype=float) / self.theta

    def check(self) -> None:
        if not (0.0 < self.c1 <= self.c2):
            raise InvalidInputError(f"need 0 < c1 <= c2, got c1={self.c1}, c2={self.c2}")
        if not (0.0 < self.c <= 1.0):
            raise InvalidInputError(f"c must lie in (0, 1], got {self.c}")
        if not self.kappa >= 1.0:
            raise InvalidInputError(f"kappa must be >= 1, got {self.kappa}")

    def as_dict(self) -> dict:
        return {
            "theta": self.theta, "c1": self.c1, "c2": self.c2, "c": self.c,
            "kappa": self.kappa, "argmin_t": self.argmin_t, "argmax_t": self.argmax_t,
            "drift": self.drift.entries.tolist(), "w": self.w_description,
        }


def _beta_extremes(B: np.ndarray, times: np.ndarray):
    """min/max over unit xi of <Q_t xi, xi>/t at each t (Rayleigh quotient extremes)."""
    qs = covariance_series(B, times)
    lo = np.empty(times.size)
    hi = np.empty(times.size)
    for i, t in enumerate(times):
        if t == 0.0:
            lo[i] = hi[i] = 1.0
        else:
            ev = np.linalg.eigvalsh(qs[i]) / t
            lo[i], hi[i] = ev[0], ev[-1]
    return lo, hi


def _refine(B, theta, t_star, value, sense, rtol, points=33, max_levels=60):
    # nested windows around the extremal time; directions resolved exactly by eigvalsh
    half = theta / 8.0
    for _ in range(max_levels):
        ts = np.linspace(max(0.0, t_star - half), min(theta, t_star + half), points)
        lo, hi = _beta_extremes(B, ts)
        vals = lo if sense == "min" else hi
        j = int(np.argmin(vals) if sense == "min" else np.argmax(vals))
        new = min(value, vals[j]) if sense == "min" else max(value, vals[j])
        improved = (vals[j] < value) if sense == "min" else (vals[j] > value)
        if improved:
            t_star = float(ts[j])
        change = abs(new - value) / max(abs(new), np.finfo(float).tiny)
        value = new
        half /= 4.0
        if change < rtol and half < theta * 1e-6:
            break
    return value, t_star


def convexity_constants(B, theta: float, n_times: int = 256, n_directions: int = 64,
                        rtol: float = 1e-6) -> ConvexityConstants:
    """Sample beta(t, xi) = <Q_t xi, xi>/t on [0, theta] x S^{N-1} and refine its extremes.

    beta(0, xi) = |xi|^2 = 1 is the continuous extension at t = 0.  For a
    skew-symmetric (or zero) B, Q_t = t I, so beta is identically 1 and the
    constants c1 = c2 = c = 1 are returned exactly without sampling.
    """
    B = _as_drift(B)
    if not (np.isfinite(theta) and theta > 0):
        raise InvalidInputError(f"theta must be positive, got {theta!r}")
    if n_times < 64 or n_directions < 64:
        raise InvalidInputError("need at least 64 time samples and 64 direction samples")
    if B.is_skew():
        return ConvexityConstants(float(theta), 1.0, 1.0, 1.0, 1.0, B, 0.0, 0.0)
    times = theta * np.arange(n_times + 1) / n_times
    dirs = sphere_directions(B.n, n_directions)
    qs = covariance_series(B, times)
    beta = np.einsum("di,tij,dj->td", dirs, qs, dirs)
    beta[0] = 1.0
    beta[1:] /= times[1:, None]
    imin = np.unravel_index(np.argmin(beta), beta.shape)
    imax = np.unravel_index(np.argmax(beta), beta.shape)
    c1, tmin = _refine(B.entries, theta, float(times[imin[0]]), float(beta[imin]), "min", rtol)
    c2, tmax = _refine(B.entries, theta, float(times[imax[0]]), float(beta[imax]), "max", rtol)
    c = min(c1 / c2, 1.0)
    kappa = float(np.exp(0.5 * abs(B.trace) * (1.0 - c) * theta))
    out = ConvexityConstants(float(theta), float(c1), float(c2), float(c), kappa, B, tmin, tmax)
    out.check()
    return out


@dataclass(frozen=True)
class QtBoundReport:
    """Outcome of checking <Q_t xi,xi> >= c t/theta <Q_theta xi,xi> on samples."""

    passed: bool
    min_slack: float
    min_normalized_slack: float
    witness_t: float
    witness_xi: tuple
    samples: int

    def as_dict(self) -> dict:
        return {
            "passed": self.passed, "min_slack": self.min_slack,
            "min_normalized_slack": self.min_normalized_slack,
            "witness_t": self.witness_t, "witness_xi": list(self.witness_xi),
            "samples": self.samples,
        }


def verify_qt_lower_bound(B, theta: float, constants: ConvexityConstants,
                          n_times: int = 1000, n_directions: int = 100,
                          atol: float = 1e-9) -> QtBoundReport:
    """Evaluate the slack <Q_t xi,xi> - c (t/theta) <Q_theta xi,xi> over samples.

    Passing means every slack is >= -atol * max(1, <Q_theta xi, xi>).
    """
    B = _as_drift(B)
    if not constants.drift.same_as(B) or constants.theta != theta:
        raise InvalidInputError("constants were computed for a different (B, theta)")
    times = theta * np.arange(n_times + 1) / n_times
    dirs = sphere_directions(B.n, n_directions)
    qs = covariance_series(B, times)
    forms = np.einsum("di,tij,dj->td", dirs, qs, dirs)
    final = forms[-1]
    slack = forms - constants.c * (times / theta)[:, None] * final[None, :]
    normalized = slack / np.maximum(1.0, final)[None, :]
    i, d = np.unravel_index(np.argmin(normalized), normalized.shape)
    return QtBoundReport(
        passed=bool(normalized[i, d] >= -atol),
        min_slack=float(slack.min()),
        min_normalized_slack=float(normalized[i, d]),
        witness_t=float(times[i]),
        witness_xi=tuple(float(x) for x in dirs[d]),
        samples=int(slack.size),
    )
