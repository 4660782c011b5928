"""Test data on grids: Gaussians, mixtures, band-limited states, lattice modes.

The standard ensemble used by the observability and convexity harnesses is
``standard_ensemble(spec, size, seed)``.  Member 0 is the centered Gaussian
exp(-|x|^2/4); members 1, 4, 7, ... are single shifted Gaussians; members
2, 5, 8, ... are mixtures of two or three shifted Gaussians; members 3, 6,
9, ... are random band-limited states (random cosines with |xi| <= 2 under
the envelope exp(-|x|^2/8)).  Centers lie in [-2, 2]^N, Gaussian width
parameters s (profile exp(-|x-c|^2/(4 s))) in [0.5, 1.5], amplitudes in
[-1, 1] bounded away from zero.  Everything is drawn from
``numpy.random.default_rng(seed)``, so the list is reproducible.
"""
from __future__ import annotations

from typing import List, Sequence

import numpy as np

from .field import GridSpec, GridState

__all__ = [
    "gaussian",
    "gaussian_mixture",
    "band_limited",
    "lattice_mode",
    "standard_ensemble",
    "mixture_ensemble",
]


def gaussian(spec: GridSpec, center=None, width: float = 1.0, amplitude: float = 1.0) -> GridState:
    """amplitude * exp(-|x - center|^2 / (4 width))."""
    c = np.zeros(spec.n) if center is None else np.broadcast_to(np.asarray(center, float), (spec.n,))
    r2 = sum((m - ci) ** 2 for m, ci in zip(spec.mesh(), c))
    return GridState(spec, amplitude * np.exp(-r2 / (4.0 * width)))


def gaussian_mixture(spec: GridSpec, centers: Sequence, widths: Sequence[float],
                     amplitudes: Sequence[float]) -> GridState:
    vals = np.zeros(spec.shape)
    for c, w, a in zip(centers, widths, amplitudes):
        vals += gaussian(spec, c, w, a).values
    return GridState(spec, vals)


def band_limited(spec: GridSpec, rng: np.random.Generator, terms: int = 4,
                 kmax: float = 2.0, envelope: float = 2.0) -> GridState:
    """Random sum of cosines with |xi| <= kmax under exp(-|x|^2/(4 envelope))."""
    x = spec.mesh()
    vals = np.zeros(spec.shape)
    for _ in range(terms):
        direction = rng.normal(size=spec.n)
        direction /= np.linalg.norm(direction)
        xi = direction * rng.uniform(0.0, kmax)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        vals += rng.uniform(-1.0, 1.0) * np.cos(sum(k * m for k, m in zip(xi, x)) + phase)
    r2 = sum(m * m for m in x)
    return GridState(spec, vals * np.exp(-r2 / (4.0 * envelope)))


def lattice_mode(spec: GridSpec, index: Sequence[int]) -> GridState:
    """cos(xi0 . x) with xi0 = (pi/L) * index, scaled to unit discrete L^2 norm."""
    index = np.asarray(index, dtype=float).reshape(spec.n)
    xi0 = spec.dxi * index
    vals = np.cos(sum(k * m for k, m in zip(xi0, spec.mesh())))
    norm = np.sqrt(spec.cell_volume * np.sum(vals ** 2))
    return GridState(spec, vals / norm)


def _amplitude(rng):
    a = rng.uniform(0.2, 1.0)
    return a if rng.random() < 0.5 else -a


def _random_mixture(spec, rng, components, spread=2.0):
    centers = [rng.uniform(-spread, spread, spec.n) for _ in range(components)]
    widths = rng.uniform(0.5, 1.5, components)
    amps = [_amplitude(rng) for _ in range(components)]
    return gaussian_mixture(spec, centers, widths, amps)


def standard_ensemble(spec: GridSpec, size: int = 12, seed: int = 20240601) -> List[GridState]:
    rng = np.random.default_rng(seed)
    out = [gaussian(spec)]
    while len(out) < size:
        kind = len(out) % 3
        if kind == 1:
            out.append(_random_mixture(spec, rng, 1))
        elif kind == 2:
            out.append(_random_mixture(spec, rng, int(rng.integers(2, 4))))
        else:
            out.append(band_limited(spec, rng))
    return out[:size]


def mixture_ensemble(spec: GridSpec, size: int = 100, seed: int = 7,
                     spread: float = 2.0) -> List[GridState]:
    """Mixtures of one to three shifted Gaussians (the convexity ensemble)."""
    rng = np.random.default_rng(seed)
    return [_random_mixture(spec, rng, int(rng.integers(1, 4)), spread) for _ in range(size)]
