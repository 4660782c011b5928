"""Records and parameter sets shared by the inverse-problem routines."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..errors import InvalidInputError
from ..field import GridState, graph_norm, sobolev_norm
from ..linops import DriftMatrix


def trapezoid_weights(times: np.ndarray) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    w = np.zeros(times.size)
    dt = np.diff(times)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    return w


@dataclass(frozen=True, eq=False)
class ObservationRecord:
    """The masked trajectory u restricted to (0, theta) x omega.

    ``times`` are the k + 1 equispaced samples i theta / k including t = 0
    (the trapezoid rule needs both ends).  ``derivative_norms`` hold
    ||A u(t_i)||_{L^2(omega)}; they are ``None`` for records whose data were
    perturbed, since u_t is then unavailable and ``h1_time_norm`` is None too.
    """

    theta: float
    times: np.ndarray
    masked_states: Tuple[GridState, ...]
    mask: np.ndarray
    masked_norms: np.ndarray
    l2_time_norm: float
    final_l2_norm: float
    derivative_norms: Optional[np.ndarray] = None
    h1_time_norm: Optional[float] = None
    drift: Optional[DriftMatrix] = None

    @property
    def weights(self) -> np.ndarray:
        return trapezoid_weights(self.times)

    @property
    def spec(self):
        return self.masked_states[0].spec

    def with_data(self, states) -> "ObservationRecord":
        """A copy carrying new observed values (mask re-applied, H^1 data dropped)."""
        states = tuple(GridState(s.spec, s.values * self.mask) for s in states)
        norms = np.array([np.sqrt(s.spec.cell_volume * np.sum(s.values ** 2)) for s in states])
        l2 = float(np.sqrt(np.sum(self.weights * norms ** 2)))
        return ObservationRecord(self.theta, self.times, states, self.mask, norms, l2,
                                 self.final_l2_norm, None, None, self.drift)


@dataclass(frozen=True)
class AdmissibleClass:
    """I_R (graph-norm ball) or I_{eps,R} (H^{2 eps} ball)."""

    kind: str
    R: float
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("graph_norm_ball", "sobolev_ball"):
            raise InvalidInputError(f"unknown admissible class {self.kind!r}")
        if not self.R > 0:
            raise InvalidInputError(f"R must be positive, got {self.R!r}")
        if self.kind == "sobolev_ball" and not (self.epsilon is not None and 0 < self.epsilon < 1):
            raise InvalidInputError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")

    def norm(self, u0: GridState, B=None, homogeneous: bool = False) -> float:
        if self.kind == "graph_norm_ball":
            if B is None:
                raise InvalidInputError("graph-norm membership needs the drift matrix")
            return graph_norm(u0, B)
        return sobolev_norm(u0, 2.0 * self.epsilon, homogeneous=homogeneous)

    def contains(self, u0: GridState, B=None, homogeneous: bool = False) -> bool:
        return self.norm(u0, B, homogeneous) <= self.R


@dataclass(frozen=True)
class StabilityParams:
    """Constants of the two logarithmic stability bounds.

    C, C1 belong to the H^1-observation bound; K, p, s (and epsilon, used
    only to validate p) to the heat-equation bound.
    """

    C: float = 1.0
    C1: float = 1.0
    K: float = 1.0
    p: Optional[float] = None
    s: Optional[float] = None
    epsilon: Optional[float] = None

    def __post_init__(self):
        for name in ("C", "C1", "K"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.p is not None:
            if not self.p > 1:
                raise InvalidInputError(f"p must exceed 1, got {self.p!r}")
            if self.epsilon is not None:
                if not 0 < self.epsilon < 1:
                    raise InvalidInputError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
                if not self.p < 1.0 / (1.0 - self.epsilon):
                    raise InvalidInputError(
                        f"p must lie in (1, 1/(1-eps)) = (1, {1 / (1 - self.epsilon):.6g}), got {self.p!r}")
        if self.s is not None:
            if self.p is None:
                raise InvalidInputError("s needs p")
            if not 0 < self.s < 1 - 1 / self.p:
                raise InvalidInputError(f"s must lie in (0, 1 - 1/p) = (0, {1 - 1 / self.p:.6g}), got {self.s!r}")
            if not (1 - self.s) * self.p > 1:  # pragma: no cover - implied by the range above
                raise InvalidInputError("(1 - s) p must exceed 1")


@dataclass
class StabilityCurve:
    """Rows (obs_norm, true_norm, recon_error, bound) sorted by obs_norm, plus fit data."""

    rows: np.ndarray
    noise: np.ndarray
    reps: np.ndarray
    fit: dict = field(default_factory=dict)

    HEADER = "obs_norm,true_norm,recon_error,bound"

    def __post_init__(self):
        order = np.argsort(self.rows[:, 0], kind="stable")
        self.rows = self.rows[order]
        self.noise = np.asarray(self.noise)[order]
        self.reps = np.asarray(self.reps)[order]
        if not (np.all(np.isfinite(self.rows)) and np.all(self.rows >= 0)):
            raise InvalidInputError("stability curve entries must be finite and nonnegative")

    def to_csv(self) -> str:
        lines = [self.HEADER]
        for r in self.rows:
            lines.append(",".join(f"{v:.17g}" for v in r))
        return "\n".join(lines) + "\n"
