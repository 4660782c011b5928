"""Grid functions standing in for L^2(R^N).

R^N is truncated to the periodized box [-L, L)^N sampled at cell centers
x_j = -L + (j + 1/2) h, h = 2L/M.  Spectral coefficients use the unitary
convention

    c_k = (h^N / M^N)^{1/2} sum_j v_j exp(-i xi_k . x_j),
    xi_k in (pi/L) {-M/2, ..., M/2 - 1}^N,

so that sum_k |c_k|^2 = h^N sum_j v_j^2 (Parseval with no extra factor).
Dividing ``c_k`` by (pi/L)^{N/2} gives samples of the continuous unitary
Fourier transform (2 pi)^{-N/2} int f(x) exp(-i xi.x) dx.  Under this
convention the heat kernel h_t acts as the multiplier exp(-|xi|^2 t).
Coefficient arrays are stored in numpy FFT order.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DomainTruncationError, InvalidInputError
from .linops import DriftMatrix, _as_drift

__all__ = [
    "DEFAULT_DECAY_THRESHOLD",
    "GridSpec",
    "GridState",
    "SpectralState",
    "transform",
    "inverse_transform",
    "l2_norm",
    "sobolev_norm",
    "apply_multiplier",
    "apply_generator",
    "graph_norm",
    "save_state",
    "load_state",
]

DEFAULT_DECAY_THRESHOLD = 1e-6
SHELL_FRACTION = 0.1


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell-centered grid on [-L, L)^N with M points per axis."""

    n: int
    half_width: float
    points: int

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and 1 <= self.n <= 3):
            raise InvalidInputError(f"grid dimension must be 1, 2 or 3, got {self.n!r}")
        if not (np.isfinite(self.half_width) and self.half_width > 0):
            raise InvalidInputError(f"half_width must be positive, got {self.half_width!r}")
        if not isinstance(self.points, (int, np.integer)) or self.points < 16 or self.points % 2:
            raise InvalidInputError(f"points per axis must be even and >= 16, got {self.points!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "half_width", float(self.half_width))
        object.__setattr__(self, "points", int(self.points))

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.points

    @property
    def shape(self) -> tuple:
        return (self.points,) * self.n

    @property
    def size(self) -> int:
        return self.points ** self.n

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    @property
    def dxi(self) -> float:
        return np.pi / self.half_width

    @property
    def nyquist(self) -> float:
        return np.pi / self.h

    def axis(self) -> np.ndarray:
        return -self.half_width + (np.arange(self.points) + 0.5) * self.h

    def mesh(self) -> list:
        ax = self.axis()
        return np.meshgrid(*([ax] * self.n), indexing="ij")

    def points_array(self) -> np.ndarray:
        """Cell centers as an (M^N, N) array in row-major order."""
        return np.stack([m.ravel() for m in self.mesh()], axis=1)

    def frequencies(self) -> np.ndarray:
        """Axis frequencies xi_k = (pi/L) m_k in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.h)

    def frequency_mesh(self) -> list:
        f = self.frequencies()
        return np.meshgrid(*([f] * self.n), indexing="ij")

    def xi_squared(self) -> np.ndarray:
        return sum(k * k for k in self.frequency_mesh())

    def shell_mask(self) -> np.ndarray:
        """Cells in the outermost 10% of the box (max_i |x_i| > 0.9 L)."""
        r = np.max(np.abs(np.stack(self.mesh())), axis=0)
        return r > (1.0 - SHELL_FRACTION) * self.half_width


@dataclass(frozen=True, eq=False)
class GridState:
    """Real samples of an L^2(R^N) function on a GridSpec."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.size != self.spec.size:
            raise InvalidInputError(f"expected {self.spec.size} values, got {v.size}")
        v = v.reshape(self.spec.shape)
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("grid state values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, spec: GridSpec, fn) -> "GridState":
        return cls(spec, fn(*spec.mesh()))

    @classmethod
    def zeros(cls, spec: GridSpec) -> "GridState":
        return cls(spec, np.zeros(spec.shape))

    def l2_norm(self) -> float:
        return l2_norm(self)

    def inner(self, other: "GridState") -> float:
        self._same_grid(other)
        return float(self.spec.cell_volume * np.sum(self.values * other.values))

    def shell_fraction(self) -> float:
        total = float(np.sum(self.values ** 2))
        if total == 0.0:
            return 0.0
        return float(np.sum(self.values[self.spec.shell_mask()] ** 2)) / total

    def check_decay(self, threshold: float = DEFAULT_DECAY_THRESHOLD, what: str = "state") -> None:
        frac = self.shell_fraction()
        if frac > threshold:
            raise DomainTruncationError(
                f"{what} has {frac:.3e} of its squared mass in the outer shell "
                f"(threshold {threshold:.1e}); enlarge the box", fraction=frac)

    def _same_grid(self, other):
        if not isinstance(other, GridState) or other.spec != self.spec:
            raise InvalidInputError("grid states live on different grids")

    def __add__(self, other):
        self._same_grid(other)
        return GridState(self.spec, self.values + other.values)

    def __sub__(self, other):
        self._same_grid(other)
        return GridState(self.spec, self.values - other.values)

    def __mul__(self, alpha):
        return GridState(self.spec, float(alpha) * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return GridState(self.spec, -self.values)


@dataclass(frozen=True, eq=False)
class SpectralState:
    """Unitary-normalized Fourier coefficients (FFT order)."""

    spec: GridSpec
    coefficients: np.ndarray

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coefficients) ** 2)))

    def continuous_samples(self) -> np.ndarray:
        """Approximate samples of the continuous unitary transform at the lattice."""
        return self.coefficients / self.spec.dxi ** (self.spec.n / 2.0)


def _phase(spec: GridSpec) -> np.ndarray:
    x0 = spec.axis()[0]
    return np.exp(-1j * x0 * sum(spec.frequency_mesh()))


def _scale(spec: GridSpec) -> float:
    return np.sqrt(spec.cell_volume / spec.size)


def transform(state: GridState) -> SpectralState:
    spec = state.spec
    c = _scale(spec) * _phase(spec) * np.fft.fftn(state.values)
    return SpectralState(spec, c)


def inverse_transform(spectral: SpectralState) -> GridState:
    spec = spectral.spec
    raw = np.fft.ifftn(spectral.coefficients / _phase(spec)) / _scale(spec)
    return GridState(spec, raw.real)


def l2_norm(state: GridState) -> float:
    """Discrete L^2 norm sqrt(h^N sum v^2)."""
    return float(np.sqrt(state.spec.cell_volume * np.sum(state.values ** 2)))


def sobolev_norm(state: GridState, order: float, homogeneous: bool = False) -> float:
    """Fourier-multiplier norm with weight (1 + |xi|^2)^order, or |xi|^{2 order} if homogeneous."""
    if not (np.isfinite(order) and order >= 0):
        raise InvalidInputError(f"Sobolev order must be >= 0, got {order!r}")
    c2 = np.abs(transform(state).coefficients) ** 2
    xi2 = state.spec.xi_squared()
    if homogeneous:
        weight = xi2 ** order if order > 0 else np.ones_like(xi2)
    else:
        weight = (1.0 + xi2) ** order
    return float(np.sqrt(np.sum(weight * c2)))


def _symmetrize(m: np.ndarray) -> np.ndarray:
    # m(k) -> (m(k) + m(-k mod M))/2 keeps the operator real and symmetric at Nyquist
    rev = np.roll(np.flip(m), 1, axis=tuple(range(m.ndim)))
    return 0.5 * (m + rev)


def apply_multiplier(state: GridState, multiplier: np.ndarray) -> GridState:
    """Apply a real, even Fourier multiplier given on the lattice (FFT order)."""
    out = np.fft.ifftn(_symmetrize(multiplier) * np.fft.fftn(state.values)).real
    return GridState(state.spec, out)


def _gradient(values: np.ndarray, spec: GridSpec) -> list:
    f = np.fft.fftn(values)
    grads = []
    for k in spec.frequency_mesh():
        k = k.copy()
        k[np.isclose(np.abs(k), spec.nyquist)] = 0.0
        grads.append(np.fft.ifftn(1j * k * f).real)
    return grads


def apply_generator(state: GridState, B, threshold: float = DEFAULT_DECAY_THRESHOLD) -> GridState:
    """A u = Lap u + (Bx) . grad u, both derivatives taken spectrally.

    The drift coefficient uses the unperiodized cell-center coordinate, so a
    nonzero B requires the state to pass the boundary-decay guard.
    """
    B = _as_drift(B)
    spec = state.spec
    if B.n != spec.n:
        raise InvalidInputError(f"drift is {B.n}x{B.n} but the grid is {spec.n}-D")
    lap = np.fft.ifftn(-spec.xi_squared() * np.fft.fftn(state.values)).real
    if B.is_zero():
        return GridState(spec, lap)
    state.check_decay(threshold, "generator input")
    x = spec.mesh()
    grads = _gradient(state.values, spec)
    drift = np.zeros(spec.shape)
    for i in range(spec.n):
        bx = sum(B.entries[i, j] * x[j] for j in range(spec.n))
        drift += bx * grads[i]
    return GridState(spec, lap + drift)


def graph_norm(state: GridState, B, threshold: float = DEFAULT_DECAY_THRESHOLD) -> float:
    """sqrt(||u||^2 + ||A u||^2)."""
    au = apply_generator(state, B, threshold)
    return float(np.hypot(l2_norm(state), l2_norm(au)))


_MAGIC = "OUGS1"


def save_state(path, state: GridState) -> None:
    """Write the OUGS1 format: ASCII header ``OUGS1 N M L`` + little-endian float64 row-major."""
    spec = state.spec
    header = f"{_MAGIC} {spec.n} {spec.points} {spec.half_width!r}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(state.values, dtype="<f8").tobytes())


def load_state(path) -> GridState:
    data = Path(path).read_bytes()
    nl = data.find(b"\n")
    if nl < 0:
        raise InvalidInputError(f"{path}: missing OUGS1 header line")
    parts = data[:nl].decode("ascii", errors="replace").split()
    if len(parts) != 4 or parts[0] != _MAGIC:
        raise InvalidInputError(f"{path}: header must be 'OUGS1 N M L', got {data[:nl]!r}")
    try:
        spec = GridSpec(int(parts[1]), float(parts[3]), int(parts[2]))
    except ValueError as exc:
        raise InvalidInputError(f"{path}: bad header field ({exc})") from None
    body = data[nl + 1:]
    if len(body) != 8 * spec.size:
        raise InvalidInputError(f"{path}: expected {8 * spec.size} payload bytes, got {len(body)}")
    return GridState(spec, np.frombuffer(body, dtype="<f8"))
