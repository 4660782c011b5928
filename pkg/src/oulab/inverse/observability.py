"""Masked observations of OU trajectories and empirical observability ratios."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DegenerateCaseError, InvalidInputError
from ..field import DEFAULT_DECAY_THRESHOLD, GridState, apply_generator, l2_norm
from ..geometry import ThickSet, mask as grid_mask, masked_l2_norm
from ..linops import _as_drift
from ..semigroup import make_step, ou_apply
from .types import ObservationRecord, trapezoid_weights


def observe(u0: GridState, B, omega: ThickSet, theta: float, k: int, tol: float = 1e-10,
            threshold: float = DEFAULT_DECAY_THRESHOLD) -> ObservationRecord:
    """Sample u(t_i) = T(t_i) u0 at t_i = i theta/k and restrict to omega.

    Time integrals use the composite trapezoid rule.  The time derivative is
    u_t = A u(t), evaluated with the generator rather than by differencing.
    """
    B = _as_drift(B)
    if not (np.isfinite(theta) and theta > 0):
        raise InvalidInputError(f"theta must be positive, got {theta!r}")
    if k < 1:
        raise InvalidInputError(f"need k >= 1, got {k!r}")
    spec = u0.spec
    m = grid_mask(omega, spec)
    times = theta * np.arange(k + 1) / k
    w = trapezoid_weights(times)
    states, norms, dnorms = [], np.empty(k + 1), np.empty(k + 1)
    final = 0.0
    for i, t in enumerate(times):
        u = ou_apply(u0, make_step(B, t, tol), threshold)
        states.append(GridState(spec, u.values * m))
        norms[i] = masked_l2_norm(u, m)
        dnorms[i] = masked_l2_norm(apply_generator(u, B, threshold), m)
        if i == k:
            final = l2_norm(u)
    l2 = float(np.sqrt(np.sum(w * norms ** 2)))
    h1 = float(np.sqrt(l2 ** 2 + np.sum(w * dnorms ** 2)))
    return ObservationRecord(float(theta), times, tuple(states), m, norms, l2, final,
                             dnorms, h1, B)


@dataclass(frozen=True)
class ObservabilityReport:
    ratios: np.ndarray
    max_ratio: float
    cap: float
    below_cap: bool

    @property
    def empirical_constant(self) -> float:
        """Largest observed ||u(theta)|| / ||u||_{L^2(0,theta;L^2(omega))}: a lower bound for the true constant."""
        return self.max_ratio

    def as_dict(self) -> dict:
        return {"ratios": [float(r) for r in self.ratios], "max_ratio": self.max_ratio,
                "empirical_constant": self.max_ratio, "cap": self.cap,
                "below_cap": self.below_cap}


def observability_ratio(ensemble: Sequence[GridState], B, omega: ThickSet, theta: float,
                        k: int, cap: float = 1e3, tol: float = 1e-10) -> ObservabilityReport:
    """rho = ||u(theta)|| / sqrt(int_0^theta ||u(t)||^2_{L^2(omega)} dt) for each member."""
    ratios = []
    for idx, u0 in enumerate(ensemble):
        rec = observe(u0, B, omega, theta, k, tol)
        scale = l2_norm(u0)
        if rec.l2_time_norm <= 1e-300 or rec.l2_time_norm <= 1e-14 * scale:
            raise DegenerateCaseError(
                f"member {idx}: observation norm {rec.l2_time_norm:.3e} is zero; "
                "omega is empty or not seen at this resolution")
        ratios.append(rec.final_l2_norm / rec.l2_time_norm)
    ratios = np.array(ratios)
    if not np.all(np.isfinite(ratios)):  # pragma: no cover
        raise DegenerateCaseError("non-finite observability ratio")
    mx = float(ratios.max())
    return ObservabilityReport(ratios, mx, float(cap), bool(mx <= cap))
