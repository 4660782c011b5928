import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import gaussian_profile, heat_gaussian, ou_gaussian_1d
from oulab.ensembles import gaussian, lattice_mode, standard_ensemble
from oulab.errors import DomainTruncationError, InvalidInputError
from oulab.field import GridSpec, GridState, l2_norm
from oulab.semigroup import (
    drift_adjoint_apply,
    drift_apply,
    heat_apply,
    make_step,
    ou_adjoint_apply,
    ou_apply,
    ou_norm,
    trajectory,
)

ROT = [[0.0, 1.0], [-1.0, 0.0]]
SHEAR = [[1.0, 1.0], [0.0, -1.0]]


def inner_product(f, g):
    return f.spec.cell_volume * float(np.sum(f.values * g.values))


def decayed_random(spec, seed, scale=1.5):
    rng = np.random.default_rng(seed)
    env = np.exp(-sum(m ** 2 for m in spec.mesh()) / (4 * scale))
    smooth = gaussian(spec, width=0.05).values
    noise = rng.standard_normal(spec.shape)
    # smooth the noise a little so it is well resolved by the grid
    spec_noise = np.real(np.fft.ifftn(np.fft.fftn(noise) * np.abs(np.fft.fftn(np.fft.ifftshift(smooth)))))
    return GridState(spec, spec_noise * env)


# --- heat ----------------------------------------------------------------------

def test_heat_identity_at_zero(spec1):
    u = gaussian(spec1)
    assert np.array_equal(heat_apply(u, 0.0).values, u.values)


def test_heat_gaussian_closed_form(spec1_fine):
    x = spec1_fine.axis()
    out = heat_apply(gaussian(spec1_fine), 1.0).values
    assert np.abs(out - heat_gaussian(x, 1.0, 1.0)).max() <= 1e-8
    # the cell-centered grid has no node at 0: undo the factor at x = h/2
    peak = out.max() / math.exp(-(spec1_fine.h / 2) ** 2 / 8)
    assert abs(peak - 0.707107) < 5e-7


def test_heat_gaussian_closed_form_2d(spec2):
    X, Y = spec2.mesh()
    out = heat_apply(gaussian(spec2), 0.7).values
    assert np.abs(out - heat_gaussian((X, Y), 1.0, 0.7, n=2)).max() <= 1e-8


def test_heat_mode_decay(spec1):
    mode = lattice_mode(spec1, [4])
    xi0 = 4 * np.pi / 16.0
    out = heat_apply(mode, 0.8).values
    assert np.abs(out - math.exp(-xi0 ** 2 * 0.8) * mode.values).max() <= 1e-13


def test_heat_rejects_negative_time(spec1):
    with pytest.raises(InvalidInputError):
        heat_apply(gaussian(spec1), -0.1)


@given(st.integers(0, 10 ** 6), st.floats(0.0, 5.0))
def test_heat_contraction(seed, t):
    spec = GridSpec(1, 8.0, 64)
    u = GridState(spec, np.random.default_rng(seed).standard_normal(64))
    assert l2_norm(heat_apply(u, t)) <= l2_norm(u) * (1 + 1e-14)


# --- drift group -------------------------------------------------------------------

def test_drift_identity_at_zero(spec1):
    u = gaussian(spec1)
    assert drift_apply(u, [[1.0]], 0.0) is u


@pytest.mark.parametrize("t", [0.25, 0.5, -0.3])
def test_drift_scalar_gaussian(spec1_fine, t):
    x = spec1_fine.axis()
    out = drift_apply(gaussian(spec1_fine), [[1.0]], t)
    assert np.abs(out.values - np.exp(-math.exp(2 * t) * x ** 2 / 4)).max() <= 1e-8
    ratio = l2_norm(out) / l2_norm(gaussian(spec1_fine))
    assert ratio == pytest.approx(math.exp(-t / 2), rel=1e-6)


def test_drift_rotation_quarter_turn(spec2):
    X, Y = spec2.mesh()
    f = GridState(spec2, np.exp(-(X - 1) ** 2 / 4 - Y ** 2 / 2))
    out = drift_apply(f, ROT, math.pi / 2)
    # e^{tB} maps (x, y) to (y, -x) at t = pi/2
    assert np.abs(out.values - np.exp(-(Y - 1) ** 2 / 4 - X ** 2 / 2)).max() <= 1e-9
    assert l2_norm(out) == pytest.approx(l2_norm(f), rel=1e-8)


@pytest.mark.parametrize("B,t", [(SHEAR, 0.4), (np.diag([1.0, -2.0]), 0.3), (ROT, 1.1)])
def test_drift_norm_identity_2d(B, t):
    spec = GridSpec(2, 12.0, 128)
    u = gaussian(spec, center=[0.5, -0.3], width=0.8)
    ratio = l2_norm(drift_apply(u, B, t)) / l2_norm(u)
    assert ratio == pytest.approx(math.exp(-t * np.trace(B) / 2), rel=1e-6)


def test_drift_guard_rejects_undecayed_input(spec1):
    with pytest.raises(DomainTruncationError):
        drift_apply(gaussian(spec1, width=40.0), [[1.0]], 0.2)


def test_drift_guard_catches_escaping_mass(spec1):
    # contraction of the argument spreads the profile past the box edge
    with pytest.raises(DomainTruncationError):
        drift_apply(gaussian(spec1, width=3.0), [[-1.0]], 1.5)


def test_drift_adjoint_inner_product(spec2):
    f, g = decayed_random(spec2, 1), decayed_random(spec2, 2)
    lhs = inner_product(drift_apply(f, SHEAR, 0.3), g)
    rhs = inner_product(f, drift_adjoint_apply(g, SHEAR, 0.3))
    assert abs(lhs - rhs) <= 1e-9 * l2_norm(f) * l2_norm(g)


# --- Ornstein-Uhlenbeck ----------------------------------------------------------

def test_ou_identity_at_zero(spec1):
    u = gaussian(spec1)
    step = make_step([[1.0]], 0.0)
    assert ou_apply(u, step) is u
    assert ou_adjoint_apply(u, step) is u


@pytest.mark.parametrize("t", [0.1, 1.0, 2.5])
def test_ou_zero_drift_is_heat(spec2, t):
    u = gaussian(spec2, center=[1.0, -0.5])
    a = ou_apply(u, make_step(np.zeros((2, 2)), t)).values
    b = heat_apply(u, t).values
    assert np.abs(a - b).max() <= 1e-10


def test_ou_rotation_keeps_heat_norm(spec2):
    u = gaussian(spec2, center=[1.0, 0.0], width=0.7)
    out = ou_apply(u, make_step(ROT, 0.6))
    assert l2_norm(out) == pytest.approx(l2_norm(heat_apply(u, 0.6)), rel=1e-8)


def test_ou_scalar_gaussian_closed_form(spec1_fine):
    x = spec1_fine.axis()
    step = make_step([[1.0]], 0.5)
    assert step.qt.q[0, 0] == pytest.approx((math.e - 1) / 2, rel=1e-12)
    out = ou_apply(gaussian(spec1_fine), step).values
    assert np.abs(out - ou_gaussian_1d(x, 1.0, 0.5)).max() <= 1e-7


@pytest.mark.parametrize("b,t", [(-1.0, 0.7), (0.5, 1.2)])
def test_ou_scalar_gaussian_family(spec1_fine, b, t):
    x = spec1_fine.axis()
    out = ou_apply(gaussian(spec1_fine), make_step([[b]], t)).values
    assert np.abs(out - ou_gaussian_1d(x, b, t)).max() <= 1e-7


@pytest.mark.parametrize("B", [[[1.0]], [[-1.0]], [[0.0]]])
def test_ou_norm_bound_on_ensemble(B):
    # a wide box: B = [-1] stretches profiles by e^t
    for u in standard_ensemble(GridSpec(1, 32.0, 1024), 12):
        for t in (0.2, 0.5, 1.0):
            out = ou_apply(u, make_step(B, t))
            assert l2_norm(out) <= math.exp(-t * B[0][0] / 2) * l2_norm(u) * (1 + 1e-6)


def test_ou_norm_from_factorization(spec1_fine):
    u = gaussian(spec1_fine, center=0.5)
    step = make_step([[1.0]], 0.8)
    assert ou_norm(u, step) == pytest.approx(l2_norm(ou_apply(u, step)), rel=1e-6)


def test_make_step_validation():
    with pytest.raises(InvalidInputError):
        make_step([[1.0]], -1.0)
    with pytest.raises(InvalidInputError):
        make_step([[1.0]], float("nan"))


def test_step_dimension_mismatch(spec1):
    with pytest.raises(InvalidInputError):
        ou_apply(gaussian(spec1), make_step(SHEAR, 0.1))


def test_step_reusable_across_states(spec1_fine):
    step = make_step([[1.0]], 0.4)
    a = ou_apply(gaussian(spec1_fine), step).values
    ou_apply(gaussian(spec1_fine, center=1.0), step)
    assert np.array_equal(a, ou_apply(gaussian(spec1_fine), step).values)


# --- adjoint -------------------------------------------------------------------------

def test_adjoint_zero_drift_is_self_adjoint(spec2):
    u = decayed_random(spec2, 5)
    step = make_step(np.zeros((2, 2)), 0.4)
    assert np.abs(ou_adjoint_apply(u, step).values - ou_apply(u, step).values).max() <= 1e-14


def test_adjoint_scalar_drift_identity(spec1_fine):
    f, g = decayed_random(spec1_fine, 7), decayed_random(spec1_fine, 8)
    step = make_step([[1.0]], 0.3)
    lhs = inner_product(ou_apply(f, step), g)
    rhs = inner_product(f, ou_adjoint_apply(g, step))
    assert abs(lhs - rhs) <= 1e-9 * abs(lhs)


@settings(max_examples=10)
@given(st.integers(0, 10 ** 6), st.sampled_from([SHEAR, ROT, [[0.3, -0.8], [0.5, -0.2]]]),
       st.floats(0.05, 0.6))
def test_adjoint_identity_property(seed, B, t):
    spec = GridSpec(2, 12.0, 48)
    f, g = decayed_random(spec, seed, 1.0), decayed_random(spec, seed + 1, 1.0)
    step = make_step(B, t)
    lhs = inner_product(ou_apply(f, step), g)
    rhs = inner_product(f, ou_adjoint_apply(g, step))
    assert abs(lhs - rhs) <= 1e-9 * l2_norm(f) * l2_norm(g)


# --- trajectory ------------------------------------------------------------------------

def test_trajectory_single_step(spec1_fine):
    u0 = gaussian(spec1_fine)
    traj = trajectory(u0, [[1.0]], 0.5, 1)
    assert len(traj) == 2 and traj[0] is u0
    assert np.array_equal(traj[1].values, ou_apply(u0, make_step([[1.0]], 0.5)).values)


def test_trajectory_zero_drift_variance_growth(spec1_fine):
    x = spec1_fine.axis()
    traj = trajectory(gaussian(spec1_fine), [[0.0]], 2.0, 8)
    for i, u in enumerate(traj):
        assert np.abs(u.values - heat_gaussian(x, 1.0, i * 0.25)).max() <= 1e-8


@pytest.mark.parametrize("B,spec", [([[1.0]], GridSpec(1, 16.0, 1024)), (SHEAR, GridSpec(2, 12.0, 128))])
def test_semigroup_law(B, spec):
    u0 = gaussian(spec, center=[0.4] * spec.n, width=0.9)
    once = ou_apply(u0, make_step(B, 0.5))
    twice = ou_apply(ou_apply(u0, make_step(B, 0.2)), make_step(B, 0.3))
    assert np.abs(once.values - twice.values).max() <= 1e-7 * np.abs(once.values).max()


def test_trajectory_validation(spec1):
    with pytest.raises(InvalidInputError):
        trajectory(gaussian(spec1), [[1.0]], 0.0, 4)
    with pytest.raises(InvalidInputError):
        trajectory(gaussian(spec1), [[1.0]], 1.0, 0)


def test_gaussian_profile_oracle_self_check():
    # the oracle's substitution form equals the direct formula
    x = np.linspace(-3, 3, 7)
    assert np.allclose(ou_gaussian_1d(x, 0.0, 0.0), gaussian_profile(x))
