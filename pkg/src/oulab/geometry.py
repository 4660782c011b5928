"""Observation regions omega: thick sets, the ball condition, grid masks.

Three representations are supported.  ``full`` is all of R^N.  ``boxes``
is a finite union of half-open axis-aligned boxes, optionally repeated
along a ``period`` lattice.  ``indicator`` is an explicit 0/1 grid.
Measures for the first two are computed in exact rational arithmetic;
the indicator path is a cell-count quadrature.

Text format (one directive per line, ``#`` starts a comment)::

    full                         # omega = R^N
    periodic p1 [p2 ...]         # repeat the boxes below on this lattice
    box x1min x1max [x2min x2max ...]
    thickness gamma a1 [a2 ...]  # claimed (gamma, a) parameters
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidInputError
from .field import GridSpec, GridState

__all__ = [
    "ThickSet",
    "ThicknessReport",
    "GeometricReport",
    "thickness_check",
    "geometric_condition_check",
    "mask",
    "masked_l2_norm",
    "parse_thickset",
    "load_thickset",
    "format_thickset",
]

Box = Tuple[Tuple[float, float], ...]


@dataclass(frozen=True)
class ThickSet:
    """An observation region with claimed thickness parameters (gamma, a)."""

    n: int
    kind: str
    boxes: Tuple = ()
    period: Optional[Tuple[float, ...]] = None
    indicator: Optional[np.ndarray] = None
    grid: Optional[GridSpec] = None
    gamma: float = 1.0
    a: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.kind not in ("full", "boxes", "indicator"):
            raise InvalidInputError(f"unknown ThickSet kind {self.kind!r}")
        if not (0.0 < self.gamma <= 1.0):
            raise InvalidInputError(f"gamma must lie in (0, 1], got {self.gamma!r}")
        a = tuple(float(v) for v in (self.a if self.a is not None else (1.0,) * self.n))
        if len(a) != self.n or any(not (v > 0 and math.isfinite(v)) for v in a):
            raise InvalidInputError(f"a must be {self.n} positive side lengths, got {self.a!r}")
        object.__setattr__(self, "a", a)
        boxes = tuple(tuple((float(lo), float(hi)) for lo, hi in b) for b in self.boxes)
        for b in boxes:
            if len(b) != self.n or any(not lo < hi for lo, hi in b):
                raise InvalidInputError(f"malformed box {b!r} for dimension {self.n}")
        object.__setattr__(self, "boxes", boxes)
        if self.period is not None:
            p = tuple(float(v) for v in self.period)
            if len(p) != self.n or any(v <= 0 for v in p):
                raise InvalidInputError(f"period must be {self.n} positive numbers, got {self.period!r}")
            object.__setattr__(self, "period", p)
        if self.kind == "indicator":
            if self.grid is None or self.indicator is None:
                raise InvalidInputError("indicator sets need both grid and indicator")
            ind = np.asarray(self.indicator, dtype=bool).reshape(self.grid.shape)
            ind.setflags(write=False)
            object.__setattr__(self, "indicator", ind)

    @classmethod
    def full(cls, n: int, gamma: float = 1.0, a=None) -> "ThickSet":
        return cls(n, "full", gamma=gamma, a=a)

    @classmethod
    def union(cls, boxes: Sequence[Box], gamma: float = 1.0, a=None, n: int = None) -> "ThickSet":
        boxes = list(boxes)
        if n is None:
            if not boxes:
                raise InvalidInputError("empty union needs an explicit dimension n")
            n = len(boxes[0])
        return cls(n, "boxes", boxes=tuple(boxes), gamma=gamma, a=a)

    @classmethod
    def periodic(cls, boxes: Sequence[Box], period, gamma: float = 1.0, a=None) -> "ThickSet":
        period = tuple(np.atleast_1d(np.asarray(period, dtype=float)))
        return cls(len(period), "boxes", boxes=tuple(boxes), period=period, gamma=gamma, a=a)

    @classmethod
    def from_indicator(cls, spec: GridSpec, indicator, gamma: float = 1.0, a=None) -> "ThickSet":
        return cls(spec.n, "indicator", indicator=np.asarray(indicator), grid=spec, gamma=gamma, a=a)

    def shifted(self, offset) -> "ThickSet":
        """Translate the set by ``offset`` (boxes representations only)."""
        if self.kind != "boxes":
            raise InvalidInputError("only box representations can be shifted")
        off = np.atleast_1d(np.asarray(offset, dtype=float))
        boxes = tuple(tuple((lo + o, hi + o) for (lo, hi), o in zip(b, off)) for b in self.boxes)
        return ThickSet(self.n, "boxes", boxes=boxes, period=self.period, gamma=self.gamma, a=self.a)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Membership of points with shape (P, N)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "full":
            return np.ones(pts.shape[0], dtype=bool)
        if self.kind == "indicator":
            spec = self.grid
            idx = np.floor((pts + spec.half_width) / spec.h).astype(int)
            ok = np.all((idx >= 0) & (idx < spec.points), axis=1)
            out = np.zeros(pts.shape[0], dtype=bool)
            out[ok] = self.indicator[tuple(idx[ok].T)]
            return out
        if self.period is not None:
            pts = np.mod(pts, np.asarray(self.period))
            # boxes may extend outside the base cell; test neighbouring copies too
            out = np.zeros(pts.shape[0], dtype=bool)
            for shift in itertools.product((-1, 0, 1), repeat=self.n):
                q = pts + np.asarray(shift) * np.asarray(self.period)
                out |= self._in_boxes(q)
            return out
        return self._in_boxes(pts)

    def _in_boxes(self, pts):
        out = np.zeros(pts.shape[0], dtype=bool)
        for b in self.boxes:
            inside = np.ones(pts.shape[0], dtype=bool)
            for i, (lo, hi) in enumerate(b):
                inside &= (pts[:, i] >= lo) & (pts[:, i] < hi)
            out |= inside
        return out


# ----------------------------------------------------------------------------
# exact measures for box unions


def _frac_boxes(boxes) -> list:
    return [tuple((Fraction(lo), Fraction(hi)) for lo, hi in b) for b in boxes]


def _union_measure_in(cube, boxes) -> Fraction:
    """Exact |(union of boxes) cap cube| by coordinate compression."""
    clipped = []
    for b in boxes:
        c = []
        for (lo, hi), (clo, chi) in zip(b, cube):
            lo2, hi2 = max(lo, clo), min(hi, chi)
            if lo2 >= hi2:
                break
            c.append((lo2, hi2))
        else:
            clipped.append(tuple(c))
    if not clipped:
        return Fraction(0)
    if len(clipped) == 1:
        vol = Fraction(1)
        for lo, hi in clipped[0]:
            vol *= hi - lo
        return vol
    n = len(cube)
    cuts = [sorted({v for b in clipped for v in b[i]}) for i in range(n)]
    total = Fraction(0)
    for cell in itertools.product(*[range(len(c) - 1) for c in cuts]):
        lo = [cuts[i][cell[i]] for i in range(n)]
        hi = [cuts[i][cell[i] + 1] for i in range(n)]
        for b in clipped:
            if all(b[i][0] <= lo[i] and hi[i] <= b[i][1] for i in range(n)):
                vol = Fraction(1)
                for i in range(n):
                    vol *= hi[i] - lo[i]
                total += vol
                break
    return total


def _periodic_copies(boxes, period, cube) -> list:
    # every lattice copy of every box that can meet the cube
    out = []
    for b in boxes:
        ranges = []
        for (lo, hi), p, (clo, chi) in zip(b, period, cube):
            kmin = math.floor((clo - hi) / p)
            kmax = math.ceil((chi - lo) / p)
            ranges.append(range(kmin, kmax + 1))
        for ks in itertools.product(*ranges):
            out.append(tuple((lo + k * p, hi + k * p) for (lo, hi), k, p in zip(b, ks, period)))
    return out


@dataclass(frozen=True)
class ThicknessReport:
    passed: bool
    min_ratio: float
    witness: tuple
    gamma: float
    tolerance: float
    margin: float
    exact: bool
    translations: int

    def as_dict(self) -> dict:
        return {
            "passed": self.passed, "min_ratio": self.min_ratio, "witness": list(self.witness),
            "gamma": self.gamma, "tolerance": self.tolerance, "margin": self.margin,
            "exact": self.exact, "translations": self.translations,
        }


def _window_bounds(window, n):
    w = np.asarray(window, dtype=float).reshape(-1, 2) if window is not None else None
    if w is None or w.shape[0] != n or np.any(w[:, 0] >= w[:, 1]):
        raise InvalidInputError(f"window must be {n} (lo, hi) pairs with lo < hi, got {window!r}")
    return w


def thickness_check(omega: ThickSet, window, resolution: int = 64) -> ThicknessReport:
    """Minimum over translations x of |omega cap (x + C)| / prod(a), C = prod [0, a_j].

    Translations run over the window (so that x + C stays inside it) with
    spacing min(a)/resolution.  For periodic box patterns one period of
    translations is enough and is used instead.  Box representations are
    exact (tolerance 0); indicator sets allow 2/resolution of quadrature slack.
    """
    n = omega.n
    if resolution < 64:
        raise InvalidInputError("resolution must be at least 64 samples per cube side")
    w = _window_bounds(window, n)
    a = np.asarray(omega.a)
    if np.any(w[:, 1] - w[:, 0] < a):
        raise InvalidInputError("window is smaller than the test cube")
    step = Fraction(min(omega.a)) / resolution

    if omega.kind == "full":
        return ThicknessReport(True, 1.0, tuple(w[:, 0]), omega.gamma, 0.0, 1.0 - omega.gamma, True, 1)

    if omega.kind == "indicator":
        if omega.grid.n != n:
            raise InvalidInputError("indicator grid dimension does not match the set")
        return _thickness_indicator(omega, w, float(step), resolution)

    if omega.period is not None:
        starts = [[Fraction(0) + i * step for i in range(max(1, math.ceil(Fraction(p) / step)))]
                  for p in omega.period]
    else:
        starts = []
        for (lo, hi), ai in zip(w, omega.a):
            lo, last = Fraction(lo), Fraction(hi) - Fraction(ai)
            cnt = int((last - lo) / step)
            axis = [lo + i * step for i in range(cnt + 1)]
            if axis[-1] != last:
                axis.append(last)
            starts.append(axis)
    base = _frac_boxes(omega.boxes)
    period = [Fraction(p) for p in omega.period] if omega.period is not None else None
    vol_c = Fraction(1)
    for ai in omega.a:
        vol_c *= Fraction(ai)
    best, witness, count = None, None, 0
    for x in itertools.product(*starts):
        cube = tuple((xi, xi + Fraction(ai)) for xi, ai in zip(x, omega.a))
        boxes = _periodic_copies(base, period, cube) if period is not None else base
        r = _union_measure_in(cube, boxes) / vol_c
        count += 1
        if best is None or r < best:
            best, witness = r, x
    gamma = Fraction(omega.gamma)
    return ThicknessReport(
        passed=best >= gamma, min_ratio=float(best), witness=tuple(float(v) for v in witness),
        gamma=omega.gamma, tolerance=0.0, margin=float(best - gamma), exact=True,
        translations=count)


def _thickness_indicator(omega, w, step, resolution):
    spec = omega.grid
    ind = omega.indicator.astype(float)
    axis = spec.axis()
    h = spec.h
    # cumulative sums make each cube count O(2^N)
    csum = ind
    for ax in range(spec.n):
        csum = np.cumsum(csum, axis=ax)
    csum = np.pad(csum, [(1, 0)] * spec.n)
    starts = [np.arange(lo, hi - ai + 1e-12, step) for (lo, hi), ai in zip(w, omega.a)]
    vol_c = float(np.prod(omega.a))
    best, witness, count = np.inf, None, 0
    for x in itertools.product(*starts):
        lo_idx, hi_idx = [], []
        for xi, ai in zip(x, omega.a):
            lo_idx.append(int(np.clip(np.searchsorted(axis, xi, side="left"), 0, spec.points)))
            hi_idx.append(int(np.clip(np.searchsorted(axis, xi + ai, side="right"), 0, spec.points)))
        tot = 0.0
        for corner in itertools.product((0, 1), repeat=spec.n):
            idx = tuple(hi_idx[i] if c else lo_idx[i] for i, c in enumerate(corner))
            sign = (-1) ** (spec.n - sum(corner))
            tot += sign * csum[idx]
        r = tot * h ** spec.n / vol_c
        count += 1
        if r < best:
            best, witness = r, x
    tol = 2.0 / resolution
    return ThicknessReport(bool(best >= omega.gamma - tol), float(best), tuple(float(v) for v in witness),
                           omega.gamma, tol, float(best - omega.gamma), False, count)


# ----------------------------------------------------------------------------
# the ball condition: every y has a center y' within delta with B(y', r) in omega


@dataclass(frozen=True)
class GeometricReport:
    passed: bool
    worst_point: tuple
    worst_distance: float
    delta: float
    r: float
    samples: int

    def as_dict(self) -> dict:
        return {
            "passed": self.passed, "worst_point": list(self.worst_point),
            "worst_distance": self.worst_distance, "delta": self.delta, "r": self.r,
            "samples": self.samples,
        }


def _merged_intervals(boxes):
    iv = sorted((b[0][0], b[0][1]) for b in boxes)
    merged = []
    for lo, hi in iv:
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return merged


def _center_boxes(omega: ThickSet, r: float, window) -> list:
    """Boxes of admissible ball centers (r-shrunk boxes of omega) near the window."""
    if omega.n == 1:
        base = [((lo, hi),) for lo, hi in (
            _merged_intervals(omega.boxes) if omega.period is None else [])]
        if omega.period is not None:
            p = omega.period[0]
            lo_w, hi_w = window[0]
            copies = []
            for (lo, hi), in omega.boxes:
                k0 = math.floor((lo_w - hi) / p) - 1
                k1 = math.ceil((hi_w - lo) / p) + 1
                copies += [((lo + k * p, hi + k * p),) for k in range(k0, k1 + 1)]
            base = [((lo, hi),) for lo, hi in _merged_intervals(copies)]
    else:
        if omega.period is not None:
            cube = tuple((Fraction(lo), Fraction(hi)) for lo, hi in window)
            base = [tuple((float(lo), float(hi)) for lo, hi in b)
                    for b in _periodic_copies(_frac_boxes(omega.boxes),
                                              [Fraction(p) for p in omega.period], cube)]
        else:
            base = list(omega.boxes)
    out = []
    for b in base:
        shrunk = tuple((lo + r, hi - r) for lo, hi in b)
        if all(lo <= hi for lo, hi in shrunk):
            out.append(shrunk)
    return out


def geometric_condition_check(omega: ThickSet, delta: float, r: float, window,
                              resolution: int = 256) -> GeometricReport:
    """Test: for all y in the window, some y' with |y - y'| < delta has B(y', r) inside omega.

    Box unions use the closed-form set of admissible centers (r-shrunk
    boxes; 1-D pieces are merged first, so the 1-D case is exact).
    Indicator sets search grid cells within delta and test ball
    containment cell by cell.
    """
    if not (delta > 0 and r > 0):
        raise InvalidInputError("delta and r must be positive")
    n = omega.n
    w = _window_bounds(window, n)
    ys = [np.linspace(lo, hi, resolution + 1) for lo, hi in w]
    pts = np.stack([m.ravel() for m in np.meshgrid(*ys, indexing="ij")], axis=1)
    if omega.kind == "full":
        return GeometricReport(True, tuple(pts[0]), 0.0, delta, r, pts.shape[0])
    if omega.kind == "indicator":
        dist = _indicator_center_distance(omega, r, pts, delta)
    else:
        # pad the window so centers just outside it are seen
        pad = delta + r
        padded = [(lo - pad, hi + pad) for lo, hi in w]
        centers = _center_boxes(omega, r, padded)
        if not centers:
            dist = np.full(pts.shape[0], np.inf)
        else:
            dist = np.full(pts.shape[0], np.inf)
            for c in centers:
                lo = np.array([v[0] for v in c])
                hi = np.array([v[1] for v in c])
                gap = np.maximum(np.maximum(lo - pts, pts - hi), 0.0)
                dist = np.minimum(dist, np.sqrt(np.sum(gap ** 2, axis=1)))
    i = int(np.argmax(dist))
    return GeometricReport(bool(dist[i] < delta), tuple(float(v) for v in pts[i]),
                           float(dist[i]), float(delta), float(r), int(pts.shape[0]))


def _indicator_center_distance(omega, r, pts, delta):
    from scipy.ndimage import binary_erosion
    from scipy.spatial import cKDTree

    spec = omega.grid
    rad = int(np.ceil(r / spec.h))
    offs = np.arange(-rad, rad + 1)
    ball = sum(np.meshgrid(*([offs * spec.h] * spec.n), indexing="ij")[i] ** 2
               for i in range(spec.n)) < r ** 2
    ok = binary_erosion(omega.indicator, structure=ball, border_value=0)
    cand = spec.points_array()[ok.ravel()]
    if cand.size == 0:
        return np.full(pts.shape[0], np.inf)
    d, _ = cKDTree(cand).query(pts)
    return d


# ----------------------------------------------------------------------------
# grid masks


def mask(omega: ThickSet, spec: GridSpec) -> np.ndarray:
    """0/1 float weights: a cell belongs to omega when its center does."""
    if omega.n != spec.n:
        raise InvalidInputError(f"set is {omega.n}-D but the grid is {spec.n}-D")
    if omega.kind == "full":
        return np.ones(spec.shape)
    return omega.contains(spec.points_array()).reshape(spec.shape).astype(float)


def masked_l2_norm(state: GridState, weights: np.ndarray) -> float:
    """sqrt(h^N sum over masked cells of v^2)."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != state.values.shape:
        raise InvalidInputError(f"mask shape {weights.shape} does not match state {state.values.shape}")
    return float(np.sqrt(state.spec.cell_volume * np.sum(weights * state.values ** 2)))


# ----------------------------------------------------------------------------
# text format


def parse_thickset(text: str, n: int = None, source: str = "<thickset>") -> ThickSet:
    boxes, period, full, gamma, a = [], None, False, 1.0, None
    dim = n
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word, *rest = line.split()
        try:
            nums = [float(v) for v in rest]
        except ValueError:
            raise InvalidInputError(f"{source}:{lineno}: non-numeric value in {line!r}") from None
        if word == "full":
            full = True
        elif word == "periodic":
            if not nums:
                raise InvalidInputError(f"{source}:{lineno}: periodic needs a period vector")
            period = tuple(nums)
        elif word == "box":
            if len(nums) % 2 or not nums:
                raise InvalidInputError(f"{source}:{lineno}: box needs min/max pairs")
            boxes.append(tuple(zip(nums[0::2], nums[1::2])))
        elif word == "thickness":
            if len(nums) < 2:
                raise InvalidInputError(f"{source}:{lineno}: thickness needs gamma and a")
            gamma, a = nums[0], tuple(nums[1:])
        else:
            raise InvalidInputError(f"{source}:{lineno}: unknown directive {word!r}")
        dims = {len(b) for b in boxes} | ({len(period)} if period else set()) | ({len(a)} if a else set())
        if dim is not None:
            dims.add(dim)
        if len(dims) > 1:
            raise InvalidInputError(f"{source}:{lineno}: inconsistent dimensions {sorted(dims)}")
        if dims:
            dim = dims.pop()
    if dim is None:
        raise InvalidInputError(f"{source}: cannot infer the dimension")
    if full:
        return ThickSet.full(dim, gamma=gamma, a=a)
    return ThickSet(dim, "boxes", boxes=tuple(boxes), period=period, gamma=gamma, a=a)


def load_thickset(path, n: int = None) -> ThickSet:
    return parse_thickset(Path(path).read_text(), n=n, source=str(path))


def format_thickset(omega: ThickSet) -> str:
    lines = []
    if omega.kind == "indicator":
        raise InvalidInputError("indicator sets have no text representation")
    if omega.kind == "full":
        lines.append("full")
    if omega.period is not None:
        lines.append("periodic " + " ".join(repr(p) for p in omega.period))
    for b in omega.boxes:
        lines.append("box " + " ".join(f"{lo!r} {hi!r}" for lo, hi in b))
    lines.append("thickness " + " ".join(repr(v) for v in (omega.gamma,) + tuple(omega.a)))
    return "\n".join(lines) + "\n"
