"""Inverse initial-data problem: convexity and observability checks, stability bounds, reconstruction."""
from .bounds import (
    HelperInequality,
    SmoothingReport,
    helper_inequality_check,
    smoothing_bound,
    smoothing_estimate_check,
    stability_bound_h1,
    stability_bound_heat,
    stability_bound_heat_simplified,
)
from .convexity import ConvexityReport, log_convexity_verify
from .observability import ObservabilityReport, observability_ratio, observe
from .reconstruction import (
    Reconstruction,
    add_noise,
    default_alpha,
    fit_log_envelope,
    gradient,
    noise_inversions,
    objective,
    reconstruct,
    reconstruct_detailed,
    stability_sweep,
)
from .types import AdmissibleClass, ObservationRecord, StabilityCurve, StabilityParams, trapezoid_weights

__all__ = [
    "AdmissibleClass", "ConvexityReport", "HelperInequality", "ObservabilityReport",
    "ObservationRecord", "Reconstruction", "SmoothingReport", "StabilityCurve", "StabilityParams",
    "add_noise", "default_alpha", "fit_log_envelope", "gradient", "helper_inequality_check",
    "log_convexity_verify", "noise_inversions", "objective", "observability_ratio", "observe",
    "reconstruct", "reconstruct_detailed", "smoothing_bound", "smoothing_estimate_check",
    "stability_bound_h1", "stability_bound_heat", "stability_bound_heat_simplified",
    "stability_sweep", "trapezoid_weights",
]
