import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import half_interval_ratio, interval_measure
from oulab.ensembles import gaussian
from oulab.errors import InvalidInputError
from oulab.field import GridSpec, GridState, l2_norm
from oulab.geometry import (
    ThickSet,
    format_thickset,
    geometric_condition_check,
    load_thickset,
    mask,
    masked_l2_norm,
    parse_thickset,
    thickness_check,
)

HALF = ThickSet.periodic([((0.0, 0.5),)], 1.0, gamma=0.5, a=(1.0,))


# --- thickness ---------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2])
def test_full_set_has_ratio_one(n):
    rep = thickness_check(ThickSet.full(n, gamma=1.0, a=(0.5,) * n), [(-3, 3)] * n)
    assert rep.passed and rep.min_ratio == 1.0 and rep.exact


def test_periodic_half_pattern_zero_margin():
    rep = thickness_check(HALF, [(-4, 4)])
    assert rep.passed and rep.exact
    assert rep.min_ratio == 0.5 and rep.margin == 0.0 and rep.tolerance == 0.0
    # the oracle agrees at every tested translation, including the witness
    assert half_interval_ratio(Fraction(rep.witness[0])) == Fraction(1, 2)


@given(st.fractions(-5, 5, max_denominator=128))
def test_periodic_half_pattern_oracle(x):
    # any unit window meets the pattern in exactly half its length
    assert half_interval_ratio(x) == Fraction(1, 2)


def test_bounded_set_fails_with_far_witness():
    omega = ThickSet.union([((-1.0, 1.0),)], gamma=0.5, a=(1.0,))
    rep = thickness_check(omega, [(-10, 10)])
    assert not rep.passed
    assert rep.min_ratio == 0.0
    x = rep.witness[0]
    assert x + 1 <= -1 or x >= 1
    assert interval_measure(Fraction(x), Fraction(x) + 1, [(-1, 1)]) == 0


def test_union_of_boxes_closed_form():
    omega = ThickSet.union([((0.0, 0.3),), ((0.6, 1.4),), ((1.9, 2.0),)], gamma=0.1, a=(1.0,))
    rep = thickness_check(omega, [(-0.5, 2.5)], resolution=64)
    # exact minimum over the 1/64 translation grid, by plain enumeration
    xs = [Fraction(-1, 2) + Fraction(i, 64) for i in range(0, 2 * 64 + 1)]
    # endpoints are the exact binary values of the floats
    iv = [(Fraction(lo), Fraction(hi)) for lo, hi in [(0.0, 0.3), (0.6, 1.4), (1.9, 2.0)]]
    want = min(interval_measure(x, x + 1, iv) for x in xs)
    assert rep.min_ratio == float(want)


def test_two_dimensional_periodic_stripes():
    omega = ThickSet.periodic([((0.0, 0.5), (0.0, 1.0))], (1.0, 1.0), gamma=0.5, a=(1.0, 1.0))
    rep = thickness_check(omega, [(-2, 2), (-2, 2)])
    assert rep.passed and rep.min_ratio == 0.5


def test_indicator_path_uses_quadrature_tolerance():
    spec = GridSpec(1, 8.0, 512)
    omega = ThickSet.from_indicator(spec, mask(HALF, spec), gamma=0.5, a=(1.0,))
    rep = thickness_check(omega, [(-6, 6)], resolution=64)
    assert rep.passed and not rep.exact
    assert rep.tolerance == 2 / 64
    assert abs(rep.min_ratio - 0.5) <= 2 / 64


def test_thickness_input_errors():
    with pytest.raises(InvalidInputError):
        thickness_check(HALF, [(-4, 4)], resolution=32)
    with pytest.raises(InvalidInputError):
        thickness_check(HALF, [(0, 0.5)])
    with pytest.raises(InvalidInputError):
        thickness_check(HALF, [(-4, 4), (-4, 4)])
    with pytest.raises(InvalidInputError):
        ThickSet.full(1, gamma=0.0)
    with pytest.raises(InvalidInputError):
        ThickSet.full(1, a=(-1.0,))


@given(st.integers(-3, 3))
def test_period_shift_invariance(k):
    base = thickness_check(HALF, [(-4, 4)])
    moved = thickness_check(HALF.shifted(k), [(-4, 4)])
    assert moved.min_ratio == base.min_ratio


def test_enlarging_omega_is_monotone():
    small = HALF
    big = ThickSet.periodic([((0.0, 0.75),)], 1.0, gamma=0.5, a=(1.0,))
    assert thickness_check(big, [(-4, 4)]).min_ratio >= thickness_check(small, [(-4, 4)]).min_ratio
    spec = GridSpec(1, 16.0, 256)
    u = gaussian(spec, center=0.3)
    assert masked_l2_norm(u, mask(big, spec)) >= masked_l2_norm(u, mask(small, spec))


# --- geometric condition ---------------------------------------------------------

def test_geometric_condition_full():
    assert geometric_condition_check(ThickSet.full(2), 0.1, 5.0, [(-1, 1), (-1, 1)]).passed


def test_geometric_condition_half_pattern_passes():
    rep = geometric_condition_check(HALF, 1.1, 0.2, [(-4, 4)])
    assert rep.passed
    # admissible centers are [k + 0.2, k + 0.3]; the farthest point is 0.45 away
    assert rep.worst_distance == pytest.approx(0.45, abs=1e-12)


def test_geometric_condition_half_pattern_fails_near_three_quarters():
    rep = geometric_condition_check(HALF, 0.1, 0.2, [(-4, 4)])
    assert not rep.passed
    frac = rep.worst_point[0] - math.floor(rep.worst_point[0])
    assert frac == pytest.approx(0.75, abs=1e-12)


def test_geometric_condition_radius_too_large():
    rep = geometric_condition_check(HALF, 5.0, 0.3, [(-4, 4)])
    assert not rep.passed and math.isinf(rep.worst_distance)


def test_geometric_condition_indicator_matches_boxes():
    spec = GridSpec(1, 8.0, 1024)
    omega = ThickSet.from_indicator(spec, mask(HALF, spec))
    rep = geometric_condition_check(omega, 1.1, 0.2, [(-4, 4)])
    assert rep.passed
    assert abs(rep.worst_distance - 0.45) <= 2 * spec.h


def test_geometric_condition_rejects_nonpositive():
    with pytest.raises(InvalidInputError):
        geometric_condition_check(HALF, 0.0, 0.2, [(-4, 4)])


# --- masks and masked norms ---------------------------------------------------------

def test_mask_full_and_empty(spec2):
    assert np.array_equal(mask(ThickSet.full(2), spec2), np.ones(spec2.shape))
    empty = ThickSet.union([], n=2)
    assert np.array_equal(mask(empty, spec2), np.zeros(spec2.shape))


def test_mask_half_pattern_blocks():
    spec = GridSpec(1, 16.0, 1024)
    m = mask(HALF, spec)
    # direct enumeration of cell centers -16 + (j + 1/2)/32
    want = [1.0 if (Fraction(-16) + Fraction(2 * j + 1, 64)) % 1 < Fraction(1, 2) else 0.0
            for j in range(1024)]
    assert m.tolist() == want
    assert m.sum() == 512
    blocks = m.reshape(-1, 16)
    assert np.all(blocks.min(axis=1) == blocks.max(axis=1))
    assert np.all(np.diff(blocks[:, 0]) != 0)


def test_mask_dimension_mismatch(spec1):
    with pytest.raises(InvalidInputError):
        mask(ThickSet.full(2), spec1)


def test_masked_norm_examples(spec1):
    u = gaussian(spec1, center=0.7)
    assert masked_l2_norm(u, np.ones(spec1.shape)) == l2_norm(u)
    assert masked_l2_norm(u, np.zeros(spec1.shape)) == 0.0
    even = gaussian(spec1)
    half = mask(ThickSet.union([((0.0, 100.0),)]), spec1)
    assert masked_l2_norm(even, half) == pytest.approx(l2_norm(even) / math.sqrt(2), rel=1e-10)
    with pytest.raises(InvalidInputError):
        masked_l2_norm(u, np.ones(spec1.size + 2))


@given(st.integers(0, 10 ** 6))
def test_masked_norm_never_exceeds_norm(seed):
    spec = GridSpec(1, 8.0, 64)
    rng = np.random.default_rng(seed)
    u = GridState(spec, rng.standard_normal(64))
    w = (rng.random(64) < 0.5).astype(float)
    assert masked_l2_norm(u, w) <= l2_norm(u) * (1 + 1e-15)


# --- text format --------------------------------------------------------------------

def test_parse_and_format_round_trip(tmp_path):
    text = """# stripes of width one half
periodic 1.0 2.0
box 0 0.5 0 2   # full height
thickness 0.5 1 2
"""
    omega = parse_thickset(text)
    assert omega.n == 2 and omega.period == (1.0, 2.0) and omega.gamma == 0.5
    assert omega.boxes == (((0.0, 0.5), (0.0, 2.0)),)
    again = parse_thickset(format_thickset(omega))
    assert again == omega
    path = tmp_path / "omega.txt"
    path.write_text(format_thickset(omega))
    assert load_thickset(path) == omega


def test_parse_full_with_dimension():
    omega = parse_thickset("full\n", n=3)
    assert omega.kind == "full" and omega.n == 3


@pytest.mark.parametrize("text,where", [
    ("box 0 1 2\n", ":1:"),
    ("box 0 1\nbox 0 1 0 1\n", ":2:"),
    ("ball 0 1\n", ":1:"),
    ("box 0 x\n", ":1:"),
    ("\n# nothing\n", "dimension"),
])
def test_parse_errors_name_the_line(text, where):
    with pytest.raises(InvalidInputError) as info:
        parse_thickset(text, source="omega.txt")
    assert where in str(info.value)
