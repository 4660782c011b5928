import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import gaussian_l2_norm, gaussian_profile
from oulab.ensembles import gaussian, lattice_mode
from oulab.errors import DomainTruncationError, InvalidInputError
from oulab.field import (
    GridSpec,
    GridState,
    apply_generator,
    graph_norm,
    inverse_transform,
    l2_norm,
    load_state,
    save_state,
    sobolev_norm,
    transform,
)


def random_state(spec, seed, decayed=True):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(spec.shape)
    if decayed:
        v *= np.exp(-sum(m ** 2 for m in spec.mesh()) / 8.0)
    return GridState(spec, v)


# --- GridSpec / GridState ----------------------------------------------------

def test_grid_geometry():
    s = GridSpec(1, 16.0, 1024)
    assert s.h == 2 * 16.0 / 1024
    ax = s.axis()
    assert ax[0] == -16.0 + 0.5 * s.h and ax[-1] == 16.0 - 0.5 * s.h
    assert np.allclose(np.sort(s.frequencies()), (np.pi / 16.0) * np.arange(-512, 512))


@pytest.mark.parametrize("args", [(0, 1.0, 16), (4, 1.0, 16), (1, 0.0, 16), (1, 1.0, 15), (1, 1.0, 8)])
def test_grid_spec_validation(args):
    with pytest.raises(InvalidInputError):
        GridSpec(*args)


def test_grid_state_is_immutable_and_finite(spec1):
    u = GridState.zeros(spec1)
    with pytest.raises(ValueError):
        u.values[0] = 1.0
    with pytest.raises(InvalidInputError):
        GridState(spec1, np.full(spec1.size, np.nan))
    with pytest.raises(InvalidInputError):
        GridState(spec1, np.zeros(spec1.size + 1))


def test_decay_guard(spec1):
    wide = GridState(spec1, np.ones(spec1.shape))
    assert wide.shell_fraction() > 0.09
    with pytest.raises(DomainTruncationError) as info:
        wide.check_decay()
    assert info.value.fraction == pytest.approx(wide.shell_fraction())
    gaussian(spec1).check_decay()


# --- transform ---------------------------------------------------------------

def test_transform_constant_is_dc(spec1):
    c = transform(GridState(spec1, np.ones(spec1.shape))).coefficients
    assert abs(c[0]) > 0
    assert np.abs(c[1:]).max() <= 1e-12 * abs(c[0])


@pytest.mark.parametrize("n", [1, 2])
def test_transform_gaussian_matches_continuous(n):
    spec = GridSpec(n, 16.0, 256 if n == 1 else 64)
    samples = transform(gaussian(spec)).continuous_samples()
    # unitary transform of exp(-|x|^2/4) is 2^{n/2} exp(-|xi|^2)
    exact = 2.0 ** (n / 2) * np.exp(-spec.xi_squared())
    keep = exact >= 1e-12
    assert np.abs(samples.imag[keep]).max() <= 1e-12
    assert np.all(samples.real[keep] > 0)
    # 1e-6 relative wherever float64 round-off (about 1e-16 of the peak) allows it
    strong = exact >= 1e-9
    assert np.abs(samples[strong] / exact[strong] - 1).max() <= 1e-6
    err = np.abs(samples[keep] - exact[keep])
    assert np.all(err <= 1e-6 * exact[keep] + 1e-15 * exact.max())


@pytest.mark.xfail(strict=True, reason="float64 FFT round-off is absolute, ~1e-16 of the peak")
@pytest.mark.parametrize("n", [1, 2])
def test_transform_gaussian_relative_down_to_1e12(n):
    spec = GridSpec(n, 16.0, 256 if n == 1 else 64)
    samples = transform(gaussian(spec)).continuous_samples()
    exact = 2.0 ** (n / 2) * np.exp(-spec.xi_squared())
    keep = exact >= 1e-12
    assert np.abs(samples[keep] / exact[keep] - 1).max() <= 1e-6


@given(st.integers(0, 10 ** 6), st.sampled_from([1, 2]))
def test_round_trip_and_parseval(seed, n):
    spec = GridSpec(n, 8.0, 32)
    u = random_state(spec, seed, decayed=False)
    s = transform(u)
    back = inverse_transform(s)
    assert np.abs(back.values - u.values).max() <= 1e-12 * np.abs(u.values).max()
    assert abs(s.l2_norm() - l2_norm(u)) <= 1e-10 * l2_norm(u)


# --- norms -------------------------------------------------------------------

def test_l2_norm_examples():
    assert l2_norm(GridState.zeros(GridSpec(1, 1.0, 16))) == 0.0
    box = GridSpec(1, 1.0, 64)
    assert l2_norm(GridState(box, np.ones(64))) == pytest.approx(math.sqrt(2), rel=1e-14)
    g = gaussian(GridSpec(1, 12.0, 512))
    assert l2_norm(g) == pytest.approx((2 * math.pi) ** 0.25, rel=1e-12)
    assert abs(l2_norm(g) - 1.583233) < 5e-7


@given(st.integers(0, 10 ** 6), st.floats(-1e3, 1e3).filter(lambda a: a == 0 or abs(a) > 1e-100))
def test_norm_scaling(seed, alpha):
    u = random_state(GridSpec(1, 8.0, 32), seed)
    assert l2_norm(alpha * u) == pytest.approx(abs(alpha) * l2_norm(u), rel=1e-14)


def test_sobolev_order_zero_is_l2(spec1):
    u = random_state(spec1, 3)
    assert sobolev_norm(u, 0.0) == pytest.approx(l2_norm(u), rel=1e-10)
    assert sobolev_norm(u, 0.0, homogeneous=True) == pytest.approx(l2_norm(u), rel=1e-10)


def test_sobolev_single_mode(spec1):
    mode = lattice_mode(spec1, [5])
    xi0 = 5 * np.pi / 16.0
    assert sobolev_norm(mode, 1.0) == pytest.approx(math.sqrt(1 + xi0 ** 2), rel=1e-12)
    assert sobolev_norm(mode, 1.0, homogeneous=True) == pytest.approx(xi0, rel=1e-12)


def test_sobolev_gaussian_against_spectral_integral(spec1_fine):
    # int (1 + xi^2) |2^{1/2} exp(-xi^2)|^2 dxi by mpmath quadrature
    exact = math.sqrt(float(mpmath.quad(lambda x: (1 + x ** 2) * 2 * mpmath.exp(-2 * x ** 2),
                                        [-mpmath.inf, mpmath.inf])))
    assert sobolev_norm(gaussian(spec1_fine), 1.0) == pytest.approx(exact, rel=1e-10)


def test_sobolev_rejects_negative_order(spec1):
    with pytest.raises(InvalidInputError):
        sobolev_norm(gaussian(spec1), -0.5)


# --- generator ---------------------------------------------------------------

def test_laplacian_of_gaussian(spec1_fine):
    x = spec1_fine.axis()
    out = apply_generator(gaussian(spec1_fine), [[0.0]]).values
    assert np.abs(out - (x ** 2 / 4 - 0.5) * gaussian_profile(x)).max() <= 1e-8


def test_laplacian_eigenmode(spec1):
    mode = lattice_mode(spec1, [7])
    xi0 = 7 * np.pi / 16.0
    out = apply_generator(mode, [[0.0]]).values
    assert np.abs(out + xi0 ** 2 * mode.values).max() <= 1e-10 * xi0 ** 2


def test_generator_with_drift(spec1_fine):
    x = spec1_fine.axis()
    u = gaussian_profile(x)
    want = (x ** 2 / 4 - 0.5) * u + x * (-x / 2) * u
    out = apply_generator(gaussian(spec1_fine), [[1.0]]).values
    assert np.abs(out - want).max() <= 1e-8


def test_generator_2d_drift_matches_symbolic():
    spec = GridSpec(2, 12.0, 96)
    X, Y = spec.mesh()
    B = np.array([[1.0, 1.0], [0.0, -1.0]])
    u = gaussian_profile((X, Y))
    ux, uy = -X / 2 * u, -Y / 2 * u
    lap = ((X ** 2 + Y ** 2) / 4 - 1.0) * u
    want = lap + (B[0, 0] * X + B[0, 1] * Y) * ux + (B[1, 0] * X + B[1, 1] * Y) * uy
    out = apply_generator(GridState(spec, u), B).values
    assert np.abs(out - want).max() <= 1e-8


def test_generator_guard_for_wide_state(spec1):
    wide = GridState(spec1, np.ones(spec1.shape))
    with pytest.raises(DomainTruncationError):
        apply_generator(wide, [[1.0]])
    # B = 0 is exact on the torus: no guard
    apply_generator(wide, [[0.0]])


def test_generator_dimension_mismatch(spec1):
    with pytest.raises(InvalidInputError):
        apply_generator(gaussian(spec1), np.eye(2))


def test_laplacian_against_finite_differences():
    # spectral vs second-order differences: the gap shrinks like h^2
    errs = []
    for M in (128, 256):
        spec = GridSpec(1, 12.0, M)
        u = gaussian(spec, width=0.5)
        v = u.values
        fd = (np.roll(v, -1) - 2 * v + np.roll(v, 1)) / spec.h ** 2
        errs.append(np.abs(apply_generator(u, [[0.0]]).values - fd).max())
    assert 3.5 < errs[0] / errs[1] < 4.5


# --- graph norm ----------------------------------------------------------------

def test_graph_norm_examples(spec1, spec1_fine):
    assert graph_norm(GridState.zeros(spec1), [[0.0]]) == 0.0
    mode = lattice_mode(spec1, [3])
    xi0 = 3 * np.pi / 16.0
    assert graph_norm(mode, [[0.0]]) == pytest.approx(math.sqrt(1 + xi0 ** 4), rel=1e-12)
    # Au = (-x^2/4 - 1/2) u for B = [1]; integrate the squares with mpmath
    au2 = float(mpmath.quad(lambda x: ((-x ** 2 / 4 - 0.5) * mpmath.exp(-x ** 2 / 4)) ** 2,
                            [-mpmath.inf, mpmath.inf]))
    exact = math.sqrt(gaussian_l2_norm(1.0) ** 2 + au2)
    assert graph_norm(gaussian(spec1_fine), [[1.0]]) == pytest.approx(exact, rel=1e-10)


# --- OUGS1 -----------------------------------------------------------------------

def test_state_file_round_trip(tmp_path, spec2):
    u = random_state(spec2, 11)
    path = tmp_path / "u.ougs"
    save_state(path, u)
    raw = path.read_bytes()
    assert raw.startswith(b"OUGS1 2 64 12.0\n")
    assert len(raw) == len(b"OUGS1 2 64 12.0\n") + 8 * 64 * 64
    v = load_state(path)
    assert v.spec == spec2 and np.array_equal(v.values, u.values)


@pytest.mark.parametrize("payload", [b"garbage", b"OUGS2 1 16 1.0\n" + bytes(128),
                                     b"OUGS1 1 16 1.0\n" + bytes(127), b"OUGS1 1 15 1.0\n" + bytes(120)])
def test_state_file_rejects_malformed(tmp_path, payload):
    path = tmp_path / "bad.ougs"
    path.write_bytes(payload)
    with pytest.raises(InvalidInputError):
        load_state(path)
