"""Closed-form stability bounds and the scalar inequalities used to derive them."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import InvalidInputError, OutOfRegimeError
from ..field import GridState, sobolev_norm, transform
from .types import StabilityParams


def stability_bound_h1(obs_h1: float, params: StabilityParams) -> float:
    """-C / log(C1 * obs_h1), meaningful only while C1 * obs_h1 < 1."""
    if not (obs_h1 > 0 and math.isfinite(obs_h1)):
        raise InvalidInputError(f"observation norm must be positive, got {obs_h1!r}")
    arg = params.C1 * obs_h1
    if arg >= 1.0:
        raise OutOfRegimeError(f"C1 * obs = {arg:.6g} >= 1: the bound is vacuous here")
    return -params.C / math.log(arg)


@dataclass(frozen=True)
class HelperInequality:
    lhs: float
    rhs: float
    slack: float


def helper_inequality_check(tau: float) -> HelperInequality:
    """(tau - 1)/log tau + tau <= -(1 + e^{-2})/log tau on 0 < tau < 1.

    Equality holds exactly at tau = e^{-2}.
    """
    if not 0.0 < tau < 1.0:
        raise InvalidInputError(f"tau must lie in (0, 1), got {tau!r}")
    lg = math.log(tau)
    lhs = (tau - 1.0) / lg + tau
    rhs = -(1.0 + math.exp(-2.0)) / lg
    return HelperInequality(lhs, rhs, rhs - lhs)


def _ratio_term(x: float, p: float) -> float:
    # (x^p - 1)/log x, continuous at x = 1 with value p
    lg = math.log(x)
    if lg == 0.0:
        return p
    return math.expm1(p * lg) / lg


def stability_bound_heat(obs_l2: float, params: StabilityParams, check: bool = True) -> float:
    """K ((obs^p - 1)/log obs)^{s/p}.

    At obs = 1 the removable singularity takes its limit value K p^{s/p}.
    For obs < 1 the result is checked against the simplified form
    K (-log obs)^{-s/p}, which must dominate it.
    """
    if params.p is None or params.s is None:
        raise InvalidInputError("the heat bound needs p and s")
    if not (obs_l2 > 0 and math.isfinite(obs_l2)):
        raise InvalidInputError(f"observation norm must be positive, got {obs_l2!r}")
    p, s, K = params.p, params.s, params.K
    value = K * _ratio_term(obs_l2, p) ** (s / p)
    if check and obs_l2 < 1.0:
        simple = stability_bound_heat_simplified(obs_l2, params)
        if value > simple * (1.0 + 1e-12):  # pragma: no cover - would be a math error
            raise AssertionError(f"primary bound {value} exceeds simplified {simple}")
    return value


def stability_bound_heat_simplified(obs_l2: float, params: StabilityParams) -> float:
    """K (-log obs)^{-s/p} for 0 < obs < 1."""
    if not 0.0 < obs_l2 < 1.0:
        raise OutOfRegimeError(f"simplified heat bound needs 0 < obs < 1, got {obs_l2!r}")
    return params.K * (-math.log(obs_l2)) ** (-params.s / params.p)


@dataclass(frozen=True)
class SmoothingReport:
    times: np.ndarray
    ratios: np.ndarray
    bound: float
    passed: bool
    inhomogeneous_ratios: np.ndarray

    def as_dict(self) -> dict:
        return {"times": self.times.tolist(), "ratios": self.ratios.tolist(), "bound": self.bound,
                "passed": self.passed, "inhomogeneous_ratios": self.inhomogeneous_ratios.tolist()}


def smoothing_bound(epsilon: float) -> float:
    """sup over lambda >= 0 of (t lambda)^{1-eps} e^{-t lambda} = ((1-eps)/e)^{1-eps}."""
    return ((1.0 - epsilon) / math.e) ** (1.0 - epsilon)


def smoothing_estimate_check(u0: GridState, epsilon: float, times: Sequence[float],
                             atol: float = 1e-6) -> SmoothingReport:
    """Heat case: ||Lap U(t) u0|| t^{1-eps} / ||u0||_{homogeneous H^{2 eps}} against its sharp bound.

    The inhomogeneous ratios (dividing by the (1+|xi|^2)-weighted norm)
    are reported alongside; they are never larger.
    """
    if not 0.0 < epsilon < 1.0:
        raise InvalidInputError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0):
        raise InvalidInputError("smoothing times must be strictly positive")
    c2 = np.abs(transform(u0).coefficients) ** 2
    xi2 = u0.spec.xi_squared()
    hom = sobolev_norm(u0, 2.0 * epsilon, homogeneous=True)
    inhom = sobolev_norm(u0, 2.0 * epsilon)
    if hom == 0.0:
        raise InvalidInputError("u0 has zero homogeneous Sobolev norm (constant state)")
    ut = np.array([math.sqrt(np.sum(xi2 ** 2 * np.exp(-2.0 * t * xi2) * c2)) for t in times])
    scaled = ut * times ** (1.0 - epsilon)
    ratios = scaled / hom
    bound = smoothing_bound(epsilon)
    return SmoothingReport(times, ratios, bound, bool(np.all(ratios <= bound + atol)), scaled / inhom)
