"""Acceptance criteria 1 to 7, one test and one PASS/FAIL line each.

Reports come from the session cache in conftest, so every fixture is scanned
once and shared between criteria (1 to 4 and 7 reuse the same runs).
"""
import math
from fractions import Fraction

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from conftest import ROTATION_DEG, record_criterion
from medialgerm.cli import samples_csv
from medialgerm.curve import BranchGerm
from medialgerm.fixtures import fixture
from medialgerm.germ import estimate_exponent_numeric, oriented_angle
from medialgerm.medial import TraceError, region_of, run_grid_scan, trace_conflict_set
from medialgerm.verify import ratio_excess

REACHING = ("power-5/4", "power-3/2", "power-7/4")
BOUNDED = ("power-2", "power-9/4", "power-3", "half-line")
PERPENDICULAR = ("power-13/10", "power-3/2", "power-9/5")
EXAMPLE = "example"
ALL_FIXTURES = tuple(dict.fromkeys(REACHING + BOUNDED + PERPENDICULAR + (EXAMPLE,)))

REACH_FRACTION = 1e-3       # finest-window min norm below this times r0
BOUNDED_FRACTION = 0.05     # every window min norm above this times r0
FAN_TOL_DEG = 2.0
RESIDUAL_MAX = 1e-8
CLEARANCE_MIN = -1e-9
RATIO_SLACK = 1e-6
EXPONENT_TOL = 0.02
EXPONENT_RESIDUAL = 1e-3
ROTATION_TOL_DEG = 0.5


def _circular_deg(a, b):
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def test_criterion_1_reach_dichotomy(runs):
    lines, ok = [], True
    for name in REACHING:
        rep = runs.report(name)
        r0, last = rep.reach_sequence[0][0], rep.reach_sequence[-1][1]
        good = rep.reach == "reaches" and last < REACH_FRACTION * r0
        ok &= good
        lines.append(f"{name}={rep.reach}({last / r0:.2g} r0)")
    for name in BOUNDED:
        rep = runs.report(name)
        r0 = rep.reach_sequence[0][0]
        low = min(v for _, v in rep.reach_sequence)
        good = rep.reach == "bounded away" and low > BOUNDED_FRACTION * r0
        ok &= good
        lines.append(f"{name}={rep.reach}")
    assert record_criterion(1, ok, "; ".join(lines))


def test_criterion_2_perpendicular_fan(runs):
    lines, ok = [], True
    for name in PERPENDICULAR:
        rep = runs.report(name)
        degrees = list(rep.observed_fan.degrees)
        quadrant = next(c for c in rep.claims if c.claim_id == "quadrant")
        good = (len(degrees) == 1 and _circular_deg(degrees[0], 90.0) <= FAN_TOL_DEG
                and quadrant.observed == "0")
        ok &= good
        fan = ",".join(f"{d:.2f}" for d in degrees) or "-"
        lines.append(f"{name} fan={fan} quadrant_violations={quadrant.observed}")
    assert record_criterion(2, ok, "; ".join(lines))


def test_criterion_3_example(runs):
    curve = fixture(EXAMPLE)
    rep = runs.report(EXAMPLE)
    degrees = sorted(rep.observed_fan.degrees)
    matched = (len(degrees) == 3 and all(
        min(_circular_deg(d, target) for d in degrees) <= FAN_TOL_DEG for target in (0.0, 120.0, 240.0)))
    contributing = [pair for pair, hit in rep.contributing.items() if hit]
    angles = sorted(oriented_angle(curve, pair) for pair in contributing)
    exact = (len(angles) == 2 and math.isclose(angles[0], math.pi / 3, abs_tol=1e-12)
             and math.isclose(angles[1], 5 * math.pi / 3, abs_tol=1e-12))
    ok = matched and rep.branch_count == 3 and rep.bound == 3 and exact
    shown = sorted(round(d, 2) % 360.0 for d in degrees)
    detail = (f"fan={','.join(f'{d:.2f}' for d in shown)} count={rep.branch_count} "
              f"bound={rep.bound} angles={','.join(f'{a / math.pi:.6f}pi' for a in angles)}")
    assert record_criterion(3, ok, detail)


def test_criterion_4_certificates(runs):
    samples = [s for name in ALL_FIXTURES for s in runs.report(name).samples]
    residual = max((s.residual for s in samples), default=-math.inf)
    clearance = min((s.clearance for s in samples), default=math.inf)
    ratio = [ratio_excess(s) for s in samples]
    ratio_ok = sum(r <= RATIO_SLACK for r in ratio)
    ok = residual <= RESIDUAL_MAX and clearance >= CLEARANCE_MIN and ratio_ok == len(samples)
    detail = (f"{len(samples)} samples, max residual={residual:.3g}, min clearance={clearance:.3g}, "
              f"ratio bound on {ratio_ok}/{len(samples)}")
    assert record_criterion(4, ok, detail)


def test_criterion_5_scan_matches_trace(runs):
    lines, ok, traced = [], True, 0
    for name in ("two-lines", EXAMPLE):
        curve = fixture(name)
        scan = runs.scan(name)
        window = curve.epsilon / 2.0
        step = window / 100.0
        pts = np.array([s.point for s in scan.samples])
        regions = region_of(pts, curve)
        for pair in curve.regions():
            try:
                trace = trace_conflict_set(curve, pair, window, step)
            except TraceError:
                lines.append(f"{name}{pair} untraced")
                continue
            traced += 1
            in_region = pts[[g == pair for g in regions]]
            path = trace.points
            h = max(directed_hausdorff(in_region, path)[0], directed_hausdorff(path, in_region)[0])
            bound = 2.0 * max(scan.pitch, step)
            ok &= h <= bound
            lines.append(f"{name}{pair} hausdorff={h:.3g} <= {bound:.3g}")
    ok &= traced > 0
    assert record_criterion(5, ok, "; ".join(lines))


def _random_branch(rng):
    q = int(rng.integers(1, 13))
    p = int(rng.integers(q + 1, 3 * q + 1))
    alpha = Fraction(p, q)
    lead = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.2, 5.0))
    pairs = {alpha: lead}
    for _ in range(int(rng.integers(0, 3))):
        # higher-order terms at least one order above the leading one
        exp = alpha + 1 + Fraction(int(rng.integers(0, 9)), 4)
        pairs.setdefault(exp, float(rng.uniform(-0.5, 0.5)) * abs(lead))
    return alpha, BranchGerm.from_pairs([(c, e) for e, c in pairs.items()])


def test_criterion_6_exponent_estimates():
    rng = np.random.default_rng(20240601)
    worst_err, worst_res, ok = 0.0, 0.0, True
    for _ in range(20):
        alpha, branch = _random_branch(rng)
        assert 1 < alpha <= 3
        slope, resid = estimate_exponent_numeric(branch)
        err = abs(slope - float(alpha))
        ok &= err < EXPONENT_TOL and resid < EXPONENT_RESIDUAL
        worst_err, worst_res = max(worst_err, err), max(worst_res, resid)
    assert record_criterion(6, ok, f"20 branches, max |alpha_hat - alpha|={worst_err:.3g}, "
                                   f"max residual={worst_res:.3g}")


def test_criterion_7_determinism_and_equivariance(runs):
    curve = fixture(EXAMPLE)
    first = samples_csv(run_grid_scan(curve, curve.epsilon / 2.0, 512).samples)
    second = samples_csv(run_grid_scan(curve, curve.epsilon / 2.0, 512).samples)
    identical = first.encode() == second.encode()
    ok, worst, changed = identical, 0.0, []
    for name in ALL_FIXTURES + ("two-lines", "cusp"):
        base, turned = runs.report(name), runs.report(name, ROTATION_DEG)
        expected = sorted((d + ROTATION_DEG) % 360.0 for d in base.observed_fan.degrees)
        got = sorted(turned.observed_fan.degrees)
        if len(expected) != len(got):
            changed.append(f"{name} fan size")
            ok = False
            continue
        for e in expected:
            gap = min(_circular_deg(e, g) for g in got)
            worst = max(worst, gap)
            ok &= gap <= ROTATION_TOL_DEG
        verdicts = [(c.claim_id, c.verdict) for c in base.claims] + [("reach", base.reach)]
        verdicts_rot = [(c.claim_id, c.verdict) for c in turned.claims] + [("reach", turned.reach)]
        if verdicts != verdicts_rot or base.branch_count != turned.branch_count:
            changed.append(name)
            ok = False
    detail = (f"csv identical={identical}; max rotation error={worst:.3g} deg; "
              f"verdict changes={','.join(changed) or 'none'}")
    assert record_criterion(7, ok, detail)
