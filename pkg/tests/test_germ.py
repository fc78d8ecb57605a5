import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from medialgerm.curve import BranchGerm, PlaneCurveGerm, parse_curve_spec
from medialgerm.fixtures import fixture
from medialgerm.germ import (DirectionFan, branch_count_bound, classify_superquadratic,
                             estimate_exponent_numeric, joined_superquadratic, oriented_angle,
                             predict_reach, predict_tangent_cone, region_reports,
                             render_prediction)


@pytest.mark.parametrize("exponent, expected", [
    ("5/4", True), ("3/2", True), ("199/100", True), ("2", False), ("201/100", False), ("3", False),
])
def test_superquadratic_is_exact_rational_comparison(exponent, expected):
    b = BranchGerm.from_pairs([(0.3, exponent), (1.0, 7)])
    verdict = classify_superquadratic(b)
    assert verdict.superquadratic is expected
    assert verdict.leading == (0.3, Fraction(exponent))


def test_zero_branch_is_not_superquadratic():
    verdict = classify_superquadratic(BranchGerm())
    assert verdict.identically_zero and not verdict.superquadratic
    assert "f = 0" in verdict.describe()


def test_exponent_estimates():
    slope, resid = estimate_exponent_numeric(BranchGerm.from_pairs([(1.0, "3/2")]))
    assert abs(slope - 1.5) < 1e-6 and resid < 1e-9
    slope, _ = estimate_exponent_numeric(BranchGerm.from_pairs([(5.0, "7/4")]))
    assert abs(slope - 1.75) < 1e-6
    slope, _ = estimate_exponent_numeric(BranchGerm.from_pairs([(1.0, 2), (1.0, 3)]))
    assert 2.0 < slope < 2.01


def test_exponent_estimate_errors():
    with pytest.raises(ValueError):
        estimate_exponent_numeric(BranchGerm())
    with pytest.raises(ValueError):
        estimate_exponent_numeric(BranchGerm.from_pairs([(1.0, 2)]), sample_count=8)


def test_predict_reach():
    assert predict_reach(fixture("power-7/4"))
    assert not predict_reach(fixture("power-2"))
    assert not predict_reach(fixture("half-line"))
    with pytest.raises(ValueError):
        predict_reach(fixture("example"))


def test_example_regions_and_fan():
    curve = fixture("example")
    assert oriented_angle(curve, (1, 0)) == pytest.approx(math.pi / 3, abs=1e-12)
    assert oriented_angle(curve, (0, 1)) == pytest.approx(5 * math.pi / 3, abs=1e-12)
    fan = predict_tangent_cone(curve, {(1, 0): True, (0, 1): True})
    assert sorted(np.round(fan.degrees, 9)) == [0.0, 120.0, 240.0]
    assert sorted(fan.provenance) == ["bisector(1,0)", "perpendicular_to(0)", "perpendicular_to(1)"]
    assert branch_count_bound(curve, [True, True]) == 3


def test_region_reports_of_example():
    reports = {r.pair: r for r in region_reports(fixture("example"))}
    assert reports[(1, 0)].contributing_predicted == "unknown"
    assert reports[(0, 1)].necessary_condition_met
    assert reports[(0, 1)].contributing_predicted == "unknown"


def test_reflex_region_without_superquadratic_branch():
    curve = parse_curve_spec("branch rotate=0deg: 1*t^2\nbranch rotate=60deg: 1*t^3\n")
    reflex = [r for r in region_reports(curve) if r.oriented_angle > math.pi]
    assert len(reflex) == 1
    assert reflex[0].contributing_predicted == "no"
    assert not reflex[0].necessary_condition_met
    with pytest.raises(ValueError):
        predict_tangent_cone(curve, {reflex[0].pair: True})


def test_cusp_shared_tangent_convention():
    curve = fixture("cusp")
    assert oriented_angle(curve, (0, 1)) == 0.0
    assert oriented_angle(curve, (1, 0)) == 2 * math.pi
    fan = predict_tangent_cone(curve, [True, True])
    assert sorted(np.round(fan.degrees, 9)) == [0.0, 90.0]


def test_straight_angle_joined_curve():
    # y = x^(3/2) for x >= 0 continued by y = |x|^(3/2): epigraph bends into the upper side
    up = parse_curve_spec("branch rotate=0deg: 1*t^(3/2)\nbranch rotate=180deg: -1*t^(3/2)\n")
    assert joined_superquadratic(up, (0, 1))
    assert not joined_superquadratic(up, (1, 0))
    flat = parse_curve_spec("branch rotate=0deg: 1*t^2\nbranch rotate=180deg: -1*t^2\n")
    assert not joined_superquadratic(flat, (0, 1))
    with pytest.raises(ValueError):
        joined_superquadratic(fixture("example"), (1, 0))


def test_single_branch_fan():
    assert sorted(predict_tangent_cone(fixture("power-3/2")).degrees) == pytest.approx([90.0])
    down = parse_curve_spec("branch rotate=0deg: -2*t^(5/3)\n")
    assert sorted(predict_tangent_cone(down).degrees) == pytest.approx([270.0])
    assert len(predict_tangent_cone(fixture("power-9/4"))) == 0


def test_fan_requires_distinct_directions():
    with pytest.raises(ValueError):
        DirectionFan.from_angles([0.1, 0.1 + 1e-12])
    with pytest.raises(ValueError):
        DirectionFan(((1.0, 0.0),), ())


def test_contributing_flags_required_for_several_branches():
    with pytest.raises(ValueError):
        predict_tangent_cone(fixture("example"))
    with pytest.raises(ValueError):
        predict_tangent_cone(fixture("example"), [True])


def test_render_prediction_text():
    text = render_prediction(fixture("example"))
    assert "branch 0: tangent 30 deg" in text
    assert "superquadratic: yes" in text
    assert "(1, 0)" in text and "(0, 1)" in text
    single = render_prediction(fixture("power-2"))
    assert "reaches origin: no" in single and "(empty)" in single


_branch_specs = st.lists(
    st.tuples(st.sampled_from([0, 35, 90, 160, 200, 300]),
              st.sampled_from(["1*t^(3/2)", "-1*t^(3/2)", "2*t^2", "0", "-0.5*t^(5/4)", "1*t^3"])),
    min_size=2, max_size=4, unique_by=lambda item: item[0])


def _curve(items) -> PlaneCurveGerm:
    return parse_curve_spec("".join(f"branch rotate={deg}deg: {body}\n" for deg, body in items))


@settings(max_examples=60, deadline=None)
@given(_branch_specs)
def test_oriented_angles_sum_to_full_turn(items):
    curve = _curve(items)
    total = sum(oriented_angle(curve, pair) for pair in curve.regions())
    assert total == pytest.approx(2 * math.pi, abs=1e-9)
    assert sum(r.oriented_angle > math.pi + 1e-9 for r in region_reports(curve)) <= 1


@settings(max_examples=60, deadline=None)
@given(_branch_specs, st.floats(0.0, 2 * math.pi), st.lists(st.booleans(), min_size=4, max_size=4))
def test_predicted_fan_is_rotation_equivariant(items, phi, flags):
    curve = _curve(items)
    # keyed by branch pair: the region list starts elsewhere after rotating
    flags = dict(zip(curve.regions(), flags))
    try:
        fan = predict_tangent_cone(curve, flags)
    except ValueError:
        return
    turned = predict_tangent_cone(curve.rotated(phi), flags)
    expected = (fan.angles + phi) % (2 * math.pi)
    got = turned.angles
    assert len(got) == len(expected)
    gap = np.abs((got[:, None] - expected[None, :] + math.pi) % (2 * math.pi) - math.pi)
    assert len(got) == 0 or np.all(gap.min(axis=1) < 1e-9)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["2*t^(5/2)", "1*t^2", "0", "-3*t^(9/4)"]))
def test_no_reach_means_empty_fan(body):
    curve = parse_curve_spec(f"branch rotate=17deg: {body}\n")
    assert not predict_reach(curve)
    assert len(predict_tangent_cone(curve)) == 0
