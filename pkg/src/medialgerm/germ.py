"""Symbolic side: superquadratic branches, oriented angles, predicted fans.

Everything here works from the exact term data of the curve (rational
exponents, tangent rotations).  What the theory leaves open, mainly which
regions of angle below pi contribute, is taken as input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .curve import (TWO_PI, BranchGerm, PlaneCurveGerm, _ordinate_difference_sign, _same_tangent,
                    normalize_angle)

ANGLE_EPS = 1e-9


@dataclass(frozen=True)
class SuperquadraticVerdict:
    branch_index: int
    leading: tuple[float, Fraction] | None
    superquadratic: bool

    @property
    def identically_zero(self) -> bool:
        return self.leading is None

    def describe(self) -> str:
        if self.leading is None:
            return "f = 0, superquadratic: no"
        a, alpha = self.leading
        word = "yes" if self.superquadratic else "no"
        return f"a={a:g}, superquadratic: {word} (\u03b1={alpha})"


def classify_superquadratic(branch: BranchGerm, branch_index: int = 0) -> SuperquadraticVerdict:
    if branch.is_zero:
        return SuperquadraticVerdict(branch_index, None, False)
    lead = branch.terms[0]
    return SuperquadraticVerdict(branch_index, (lead.coeff, lead.exponent), lead.exponent < 2)


def estimate_exponent_numeric(branch: BranchGerm, sample_count: int = 64) -> tuple[float, float]:
    """Slope and RMS residual of log|f| against log t on [1e-6 eps, 1e-2 eps]."""
    if branch.is_zero:
        raise ValueError("f is identically zero; no exponent to fit")
    if sample_count < 16:
        raise ValueError("sample_count must be >= 16")
    eps = branch.domain_length
    t = np.geomspace(1e-6 * eps, 1e-2 * eps, sample_count)
    f = np.abs(branch.f(t))
    if np.any(f == 0.0):
        raise ValueError("f vanishes on the fitting range")
    x, y = np.log(t), np.log(f)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(np.sqrt(np.mean(resid ** 2)))


def predict_reach(curve: PlaneCurveGerm) -> bool:
    if curve.k != 1:
        raise ValueError("reach prediction is only available for one branch")
    return classify_superquadratic(curve.branches[0]).superquadratic


def _check_region(curve: PlaneCurveGerm, region: tuple[int, int]) -> tuple[int, int]:
    if curve.k < 2:
        raise ValueError("oriented angles need at least two branches")
    region = (int(region[0]), int(region[1]))
    if region not in curve.regions():
        raise ValueError(f"{region} is not a pair of consecutive branches")
    return region


def oriented_angle(curve: PlaneCurveGerm, region: tuple[int, int]) -> float:
    """Counterclockwise angle from the tangent of branch i to that of branch j.

    Shared tangents give 0 when branch i lies clockwise of branch j (the
    cusp between them is the region) and 2 pi otherwise.
    """
    i, j = _check_region(curve, region)
    bi, bj = curve.branches[i], curve.branches[j]
    if _same_tangent(bi, bj):
        return 0.0 if _ordinate_difference_sign(bi, bj) < 0 else TWO_PI
    return (bj.rotation - bi.rotation) % TWO_PI


def _bends_into(branch: BranchGerm, side: int) -> bool:
    # side +1: the counterclockwise side of the tangent, -1: the clockwise side
    return not branch.is_zero and branch.terms[0].coeff * side > 0


def joined_superquadratic(curve: PlaneCurveGerm, region: tuple[int, int]) -> bool:
    """For a straight angle: is the region the epigraph of a superquadratic graph?

    The two branches join into one C^1 graph over the tangent line of branch
    i.  Seen from the region (the counterclockwise side of branch i), branch i
    contributes ``f_i(x)`` for x >= 0 and branch j contributes ``-f_j(-x)``
    on the rotated-by-pi side; in both cases the graph bends into the region
    when the leading coefficient has the region's sign.
    """
    i, j = _check_region(curve, region)
    if abs(oriented_angle(curve, region) - math.pi) > ANGLE_EPS:
        raise ValueError("joined-curve test applies to straight angles only")
    left = classify_superquadratic(curve.branches[i], i)
    right = classify_superquadratic(curve.branches[j], j)
    return (left.superquadratic and _bends_into(curve.branches[i], +1)) or \
        (right.superquadratic and _bends_into(curve.branches[j], -1))


@dataclass(frozen=True)
class RegionReport:
    pair: tuple[int, int]
    oriented_angle: float
    contributing_predicted: str
    necessary_condition_met: bool
    note: str = ""


def region_reports(curve: PlaneCurveGerm) -> list[RegionReport]:
    """One report per region, in cyclic order."""
    out = []
    for pair in curve.regions():
        angle = oriented_angle(curve, pair)
        sq = [classify_superquadratic(curve.branches[b], b).superquadratic for b in pair]
        if abs(angle - math.pi) <= ANGLE_EPS:
            joined = joined_superquadratic(curve, pair)
            out.append(RegionReport(pair, angle, "yes" if joined else "no", True,
                                    "straight angle: contributes iff the joined curve is superquadratic"))
        elif angle > math.pi:
            met = any(sq)
            out.append(RegionReport(pair, angle, "unknown" if met else "no", met,
                                    "reflex angle: needs a superquadratic delimiting branch"))
        else:
            out.append(RegionReport(pair, angle, "unknown", True, ""))
    return out


@dataclass(frozen=True)
class DirectionFan:
    """Finite set of unit directions, one per half-line of a tangent cone."""
    directions: tuple[tuple[float, float], ...] = ()
    provenance: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.directions) != len(self.provenance):
            raise ValueError("one provenance entry per direction")
        ang = [math.atan2(y, x) for x, y in self.directions]
        for m in range(len(ang)):
            for n in range(m + 1, len(ang)):
                gap = abs(normalize_angle(ang[m] - ang[n]))
                if min(gap, TWO_PI - gap) <= ANGLE_EPS:
                    raise ValueError("fan directions must be pairwise distinct")

    @classmethod
    def from_angles(cls, angles, provenance=None) -> "DirectionFan":
        angles = list(angles)
        prov = tuple(provenance) if provenance is not None else ("observed",) * len(angles)
        return cls(tuple((math.cos(a), math.sin(a)) for a in angles), prov)

    def __len__(self) -> int:
        return len(self.directions)

    @property
    def angles(self) -> np.ndarray:
        """Angles in [0, 2 pi)."""
        return np.array([normalize_angle(math.atan2(y, x)) for x, y in self.directions])

    @property
    def degrees(self) -> np.ndarray:
        return np.degrees(self.angles)


class _FanBuilder:
    def __init__(self):
        self.angles: list[float] = []
        self.prov: list[str] = []

    def add(self, angle: float, provenance: str):
        angle = normalize_angle(angle)
        for a in self.angles:
            gap = abs(a - angle)
            if min(gap, TWO_PI - gap) <= ANGLE_EPS:
                return
        self.angles.append(angle)
        self.prov.append(provenance)

    def build(self) -> DirectionFan:
        return DirectionFan.from_angles(self.angles, self.prov)


def predict_tangent_cone(curve: PlaneCurveGerm, contributing=None) -> DirectionFan:
    """Predicted ``C_0(M_X)`` as a fan of half-lines.

    ``contributing`` maps each region ``(i, j)`` to a bool (a sequence in
    region order works too).  It is ignored for one branch, where the
    superquadratic test decides.
    """
    fan = _FanBuilder()
    if curve.k == 1:
        branch = curve.branches[0]
        if classify_superquadratic(branch).superquadratic:
            side = 1.0 if branch.terms[0].coeff > 0 else -1.0
            fan.add(branch.rotation + side * math.pi / 2, "single_branch_perpendicular")
        return fan.build()

    flags = _contributing_map(curve, contributing)
    for pair in curve.regions():
        if not flags[pair]:
            continue
        i, j = pair
        angle = oriented_angle(curve, pair)
        theta_i = curve.branches[i].rotation
        if angle <= math.pi + ANGLE_EPS:
            fan.add(theta_i + angle / 2, f"bisector({i},{j})")
            continue
        sq_i = classify_superquadratic(curve.branches[i], i).superquadratic
        sq_j = classify_superquadratic(curve.branches[j], j).superquadratic
        if not (sq_i or sq_j):
            raise ValueError(f"region {pair} has angle > pi but no superquadratic delimiting branch")
        # perpendicular on the region side, where the branch bends into the region
        if sq_i and _bends_into(curve.branches[i], +1):
            fan.add(theta_i + math.pi / 2, f"perpendicular_to({i})")
        if sq_j and _bends_into(curve.branches[j], -1):
            fan.add(curve.branches[j].rotation - math.pi / 2, f"perpendicular_to({j})")
    return fan.build()


def _contributing_map(curve: PlaneCurveGerm, contributing) -> dict[tuple[int, int], bool]:
    regions = curve.regions()
    if contributing is None:
        raise ValueError("contributing flags are required when k > 1")
    if isinstance(contributing, dict):
        return {r: bool(contributing.get(r, False)) for r in regions}
    flags = list(contributing)
    if len(flags) != len(regions):
        raise ValueError(f"expected {len(regions)} contributing flags")
    return {r: bool(f) for r, f in zip(regions, flags)}


def branch_count_bound(curve: PlaneCurveGerm, contributing) -> int:
    if curve.k < 2:
        raise ValueError("the branch-count bound is stated for k > 1")
    return sum(_contributing_map(curve, contributing).values()) + 1


def render_prediction(curve: PlaneCurveGerm, contributing=None) -> str:
    """Plain-text table: branches, regions, predicted directions in degrees."""
    lines = []
    for idx, branch in enumerate(curve.branches):
        verdict = classify_superquadratic(branch, idx)
        lines.append(f"branch {idx}: tangent {math.degrees(branch.rotation):.6g} deg, {verdict.describe()}")
    if curve.k == 1:
        reach = predict_reach(curve)
        fan = predict_tangent_cone(curve)
        lines.append(f"reaches origin: {'yes' if reach else 'no'}")
        lines.append("predicted fan (deg): " + _fmt_degrees(fan))
        return "\n".join(lines) + "\n"
    reports = region_reports(curve)
    lines.append(f"{'region':<10}{'angle(deg)':>12}  {'contributing':<13}directions(deg)")
    for rep in reports:
        if contributing is None:
            flag = rep.contributing_predicted
            assumed = {r.pair: r.pair == rep.pair and r.contributing_predicted != "no" for r in reports}
        else:
            assumed = _contributing_map(curve, contributing)
            flag = "yes" if assumed[rep.pair] else "no"
        try:
            fan = predict_tangent_cone(curve, {rep.pair: assumed[rep.pair]})
            dirs = _fmt_degrees(fan)
        except ValueError:
            dirs = "-"
        lines.append(f"{str(rep.pair):<10}{math.degrees(rep.oriented_angle):>12.6g}  {flag:<13}{dirs}")
    return "\n".join(lines) + "\n"


def _fmt_degrees(fan: DirectionFan) -> str:
    if not len(fan):
        return "(empty)"
    return ", ".join(f"{d:.6g}" for d in sorted(fan.degrees))
