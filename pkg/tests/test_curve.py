import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from medialgerm.curve import (BranchGerm, CurveSpecError, PlaneCurveGerm, PowerTerm, eval_branch,
                              normalize_angle, order_branches, parse_curve_spec,
                              serialize_curve_spec)
from medialgerm.fixtures import SPECS, fixture


def test_parse_example_fixture():
    curve = fixture("example")
    assert curve.k == 2
    b0, b1 = curve.branches
    assert b0.terms == (PowerTerm(Fraction(3, 2), 1.0),)
    assert b1.terms == (PowerTerm(Fraction(3, 2), -1.0),)
    assert math.isclose(b0.rotation, math.pi / 6)
    assert math.isclose(b1.rotation, 2 * math.pi - math.pi / 6)
    # clockwise-most tangent first
    assert curve.ordering == (1, 0)
    assert curve.regions() == [(1, 0), (0, 1)]


def test_like_terms_are_summed_and_cancelled():
    curve = parse_curve_spec("branch rotate=0deg: 2*t^(3/2) - 2*t^(3/2) + 1*t^(6/4) + 5*t^3\n")
    (b,) = curve.branches
    assert [t.exponent for t in b.terms] == [Fraction(3, 2), Fraction(3)]
    assert b.coeffs.tolist() == [1.0, 5.0]


def test_rational_coefficients_and_radians():
    curve = parse_curve_spec("epsilon=0.5\nbranch rotate=1.5rad: 1/4*t^(7/3)\n")
    (b,) = curve.branches
    assert b.domain_length == 0.5
    assert b.rotation == 1.5
    assert b.coeffs[0] == 0.25


@pytest.mark.parametrize("text, line, column", [
    ("branch rotate=0deg: 1*t^1\n", 1, 21),
    ("branch rotate=0deg: 1*t^(1/2)\n", 1, 21),
    ("\nbranch rotate=0deg: t^(3/2)\n", 2, 21),
    ("branch rotate=0deg: 1*t^(3/0)\n", 1, 21),
    ("branch 0deg: 1*t^2\n", 1, 1),
    ("branch rotate=0deg: 1*t^2\nepsilon=1\n", 2, 1),
])
def test_parse_errors_carry_position(text, line, column):
    with pytest.raises(CurveSpecError) as info:
        parse_curve_spec(text)
    assert info.value.line == line
    assert info.value.column == column


def test_duplicate_branch_rejected():
    with pytest.raises(CurveSpecError, match="duplicate"):
        parse_curve_spec("branch rotate=10deg: 1*t^2\nbranch rotate=10deg: 1*t^2\n")


def test_empty_spec_rejected():
    with pytest.raises(CurveSpecError):
        parse_curve_spec("# nothing\n")


def test_invalid_terms_rejected():
    with pytest.raises(CurveSpecError):
        PowerTerm(Fraction(1), 1.0)
    with pytest.raises(CurveSpecError):
        PowerTerm(Fraction(3, 2), 0.0)
    with pytest.raises(CurveSpecError):
        BranchGerm((PowerTerm(Fraction(2), 1.0), PowerTerm(Fraction(2), 3.0)))


@pytest.mark.parametrize("name", sorted(SPECS))
def test_serialize_round_trip(name):
    curve = fixture(name)
    again = parse_curve_spec(serialize_curve_spec(curve))
    assert again == curve


def test_origin_maps_to_origin_for_any_rotation():
    for deg in (0, 30, 170, 359):
        b = BranchGerm.from_pairs([(2.0, "5/3"), (-1.0, 3)], rotation=math.radians(deg))
        assert np.array_equal(eval_branch(b, 0.0), np.zeros(2))


def test_eval_branch_rotates_canonical_graph():
    b = BranchGerm.from_pairs([(1.0, "3/2")], rotation=math.pi / 2)
    x, y = eval_branch(b, 0.25)
    assert math.isclose(x, -0.125, abs_tol=1e-15)
    assert math.isclose(y, 0.25, abs_tol=1e-15)


def test_normalize_angle_range():
    assert normalize_angle(-1e-300) in (0.0, 2 * math.pi - 1e-300)
    assert 0.0 <= normalize_angle(-1e-17) < 2 * math.pi
    assert normalize_angle(2 * math.pi) == 0.0
    assert math.isclose(normalize_angle(-math.pi / 2), 1.5 * math.pi)


def test_shared_tangent_order_by_ordinate():
    cusp = fixture("cusp")
    # the half-line lies clockwise of the branch bending up
    assert cusp.regions() == [(0, 1), (1, 0)]


def test_wrong_ordering_rejected():
    branches = fixture("example").branches
    with pytest.raises(CurveSpecError):
        PlaneCurveGerm(branches, ordering=(0, 1))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 359.0), min_size=2, max_size=6, unique=True))
def test_order_is_sorted_cyclically(degrees):
    assume_gap = sorted(degrees)
    if min(np.diff(assume_gap)) < 1e-6:
        return
    branches = [BranchGerm((), math.radians(d)) for d in degrees]
    order = order_branches(branches)
    angles = [math.atan2(math.sin(branches[i].rotation), math.cos(branches[i].rotation))
              for i in order]
    assert angles == sorted(angles)
    assert sorted(order) == list(range(len(degrees)))
