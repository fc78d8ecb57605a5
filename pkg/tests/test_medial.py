import math

import numpy as np
import pytest

from medialgerm.fixtures import fixture
from medialgerm.medial import (TraceError, decrease_per_halving, grid_pitch, nearest_medial_distance,
                               reach_verdict, region_of, run_grid_scan, trace_conflict_set)

R0 = 0.5


def test_grid_pitch():
    assert grid_pitch(1.0, 3) == 1.0
    assert grid_pitch(0.5, 512) == pytest.approx(1.0 / 511)


def test_scan_argument_checks():
    curve = fixture("example")
    with pytest.raises(ValueError):
        run_grid_scan(curve, 0.6, 128)
    with pytest.raises(ValueError):
        run_grid_scan(curve, 0.25, 32)


def test_two_lines_scan_lies_on_bisector(runs):
    scan = runs.scan("two-lines")
    pts = np.array([s.point for s in scan.samples])
    assert len(pts) > 100
    assert np.all(np.abs(pts[:, 1]) <= scan.pitch)
    assert np.all(pts[:, 0] > 0)
    for s in scan.samples:
        assert s.branch_ids == (0, 1)
        assert s.distance == pytest.approx(s.point[0] / math.sqrt(2), rel=1e-9)


def test_full_line_has_no_medial_samples(runs):
    assert runs.scan("full-line").samples == []


def test_power_three_halves_arm_follows_tie_curve(runs):
    # arm of t^(3/2): x = -y^2/2 + O(y^3) in canonical frame
    scan = runs.scan("power-3/2", window=0.0625)
    pts = np.array([s.point for s in scan.samples])
    small = pts[np.hypot(pts[:, 0], pts[:, 1]) < 0.01]
    assert len(small) > 10
    y = small[:, 1]
    assert np.all(y > 0)
    assert np.allclose(small[:, 0], -0.5 * y * y, rtol=0.05, atol=0)


def test_samples_are_certified(runs):
    for name in ("example", "cusp", "two-lines"):
        for s in runs.scan(name).samples:
            assert s.residual <= 1e-8
            assert s.clearance >= -1e-9
            assert len(s.clusters) >= 2
            for c in s.clusters:
                assert math.dist(c.point, s.point) == pytest.approx(s.distance, rel=1e-9)


def test_scan_is_rotation_equivariant(runs):
    base = runs.scan("example", window=0.125)
    phi = math.radians(40)
    turned = run_grid_scan(fixture("example").rotated(phi), 0.125, 512)
    c, s = math.cos(phi), math.sin(phi)
    a = np.array([s_.point for s_ in base.samples])
    b = np.array([s_.point for s_ in turned.samples])
    assert len(a) == len(b)
    a_rot = np.column_stack([c * a[:, 0] - s * a[:, 1], s * a[:, 0] + c * a[:, 1]])
    order_a = np.lexsort(a_rot.T)
    order_b = np.lexsort(b.T)
    assert np.allclose(a_rot[order_a], b[order_b], atol=1e-15, rtol=0)


def test_region_of():
    curve = fixture("example")
    assert region_of([(0.1, 0.0), (-0.1, 0.0), (0.0, -0.1)], curve) == [(1, 0), (0, 1), (0, 1)]
    assert region_of([(0.1, 0.0)], fixture("power-2")) == [None]


def test_trace_two_lines_runs_along_bisector():
    curve = fixture("two-lines")
    trace = trace_conflict_set(curve, (1, 0), 0.5, 0.005)
    pts = trace.points
    assert len(pts) > 50
    assert np.max(np.abs(pts[:, 1])) < 1e-9
    assert pts[:, 0].min() < 0.05


def test_trace_raises_where_feet_are_the_origin():
    with pytest.raises(TraceError):
        trace_conflict_set(fixture("example"), (0, 1), 0.5, 0.005)


def test_trace_argument_checks():
    curve = fixture("example")
    with pytest.raises(ValueError):
        trace_conflict_set(curve, (0, 0), 0.5, 0.005)
    with pytest.raises(ValueError):
        trace_conflict_set(curve, (1, 0), 0.5, 0.5)
    with pytest.raises(ValueError):
        trace_conflict_set(fixture("power-2"), (0, 1), 0.5, 0.005)


def test_running_minimum_is_non_increasing(runs):
    report = runs.report("power-3/2")
    values = [v for _, v in report.reach_sequence]
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_running_minimum_rejects_bad_radii():
    with pytest.raises(ValueError):
        nearest_medial_distance(fixture("power-2"), [0.1, 0.2])


def _sequence(values):
    return [(R0 * 2.0 ** -k, v) for k, v in enumerate(values)]


def test_reach_verdict_logic():
    halving = _sequence([2.5 * R0 / 255 * 2.0 ** -k for k in range(10)])
    assert decrease_per_halving(halving) == pytest.approx(2.0)
    assert reach_verdict(halving, R0) == "reaches"
    flat = _sequence([0.3] * 10)
    assert decrease_per_halving(flat) == pytest.approx(1.0)
    assert reach_verdict(flat, R0) == "bounded away"
    stalled = _sequence([0.01 * 2.0 ** -min(k, 3) for k in range(10)])
    assert reach_verdict(stalled, R0) == "inconclusive"
    empty = _sequence([math.inf] * 10)
    assert reach_verdict(empty, R0) == "bounded away"
