"""Compare predicted tangent cones and branch counts with numerical medial samples."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .curve import TWO_PI, PlaneCurveGerm, normalize_angle
from .germ import (DirectionFan, branch_count_bound, classify_superquadratic, predict_reach,
                   predict_tangent_cone, region_reports)
from .medial import (CLEARANCE_MIN, RESIDUAL_MAX, GridScan, MedialSample, grid_pitch,
                     nearest_medial_distance, reach_verdict, region_of)

RATIO_SLACK = 1e-6

LINK_PITCHES = 4.0


@dataclass(frozen=True)
class DirectionCluster:
    mean: tuple[float, float]
    spread_deg: float
    count: int

    @property
    def degrees(self) -> float:
        return math.degrees(normalize_angle(math.atan2(self.mean[1], self.mean[0])))


@dataclass(frozen=True)
class AnnulusDirectionEstimate:
    annulus: tuple[float, float]
    direction_clusters: tuple[DirectionCluster, ...]
    sample_count: int = 0


def _angle_gap(a, b):
    d = np.abs(np.asarray(a) - np.asarray(b)) % TWO_PI
    return np.minimum(d, TWO_PI - d)


def cluster_directions(points: np.ndarray, merge_deg: float = 5.0) -> tuple[DirectionCluster, ...]:
    """Single-linkage clustering of the directions a/|a| on the circle.

    Sorted angles are cut wherever consecutive ones differ by more than
    ``merge_deg``; the wrap-around gap joins the first and last group.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        return ()
    ang = np.arctan2(pts[:, 1], pts[:, 0]) % TWO_PI
    ang[ang >= TWO_PI] = 0.0
    ang = np.sort(ang)
    merge = math.radians(merge_deg)
    gaps = np.diff(np.concatenate([ang, [ang[0] + TWO_PI]]))
    cuts = np.flatnonzero(gaps > merge)
    if len(cuts) == 0:
        groups = [ang]
    else:
        # start right after a cut so no group straddles the wrap
        ang = np.roll(ang, -(cuts[0] + 1))
        gaps = np.roll(gaps, -(cuts[0] + 1))
        ends = np.flatnonzero(gaps > merge)
        groups, start = [], 0
        for end in ends:
            groups.append(ang[start:end + 1])
            start = end + 1
    out = []
    for g in groups:
        mean = np.array([np.cos(g).sum(), np.sin(g).sum()])
        mean /= np.linalg.norm(mean)
        center = math.atan2(mean[1], mean[0])
        spread = float(np.max(_angle_gap(g, center)))
        out.append(DirectionCluster((float(mean[0]), float(mean[1])), math.degrees(spread), len(g)))
    out.sort(key=lambda c: c.degrees)
    return tuple(out)


def _points(samples) -> np.ndarray:
    return np.array([s.point for s in samples], dtype=float).reshape(-1, 2)


def annulus_estimates(samples, annuli, merge_deg: float = 5.0) -> list[AnnulusDirectionEstimate]:
    pts = _points(samples)
    norms = np.hypot(pts[:, 0], pts[:, 1])
    out = []
    for r_in, r_out in annuli:
        if not 0.0 <= r_in < r_out:
            raise ValueError("annuli need r_inner < r_outer")
        inside = pts[(norms >= r_in) & (norms <= r_out)]
        out.append(AnnulusDirectionEstimate((float(r_in), float(r_out)),
                                            cluster_directions(inside, merge_deg), len(inside)))
    return out


def geometric_annuli(r0: float, count: int) -> list[tuple[float, float]]:
    """Annuli ``[r0 2^-(m+2), r0 2^-(m+1)]`` for m = 0 .. count-1, outermost first."""
    return [(r0 * 2.0 ** -(m + 2), r0 * 2.0 ** -(m + 1)) for m in range(count)]


def estimate_tangent_cone(samples, annuli, merge_deg: float = 5.0, persistence: int = 3,
                          min_samples: int = 10, track_deg: float | None = None,
                          estimates: list | None = None) -> DirectionFan:
    """Observed fan: innermost mean of every direction cluster that persists.

    Annuli are taken outermost first and must shrink.  Annuli holding fewer
    than ``min_samples`` samples are skipped.  A cluster persists when it
    can be followed (nearest mean within ``track_deg``, default three merge
    thresholds) through at least ``persistence`` consecutive used annuli
    ending at the innermost used one.
    """
    annuli = [tuple(a) for a in annuli]
    if any(b[1] >= a[1] for a, b in zip(annuli, annuli[1:])):
        raise ValueError("annuli must shrink")
    track = math.radians(3.0 * merge_deg if track_deg is None else track_deg)
    found = annulus_estimates(samples, annuli, merge_deg)
    if estimates is not None:
        estimates.extend(found)
    used = [e for e in found if e.sample_count >= min_samples]
    if not used:
        return DirectionFan()
    # tracks: [current angle, length]
    tracks: list[list[float]] = []
    for est in used:
        angles = [math.atan2(c.mean[1], c.mean[0]) for c in est.direction_clusters]
        new_tracks = []
        taken = set()
        for a in angles:
            best, best_gap = None, track
            for idx, (prev, _) in enumerate(tracks):
                gap = float(_angle_gap(a, prev))
                if gap <= best_gap and idx not in taken:
                    best, best_gap = idx, gap
            if best is None:
                new_tracks.append([a, 1])
            else:
                taken.add(best)
                new_tracks.append([a, tracks[best][1] + 1])
        tracks = new_tracks
    keep = [a for a, length in tracks if length >= persistence]
    return DirectionFan.from_angles(keep)


def estimate_branch_count(samples, inner_annulus, pitch: float) -> int:
    """Connected components of samples inside the annulus.

    Samples closer than ``LINK_PITCHES`` grid pitches are linked.  Grid nodes
    within two pitches of X are skipped, so an arm running through a region
    narrower than four pitches is sampled with gaps of up to that size.
    """
    r_in, r_out = inner_annulus
    if r_out - r_in < 2.0 * LINK_PITCHES * pitch:
        raise ValueError("resolution too coarse for this annulus (components would touch)")
    pts = _points(samples)
    norms = np.hypot(pts[:, 0], pts[:, 1])
    pts = pts[(norms >= r_in) & (norms <= r_out)]
    if len(pts) == 0:
        return 0
    pairs = cKDTree(pts).query_pairs(LINK_PITCHES * pitch, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(pts),) * 2)
    return int(connected_components(graph, directed=False)[0])


@dataclass(frozen=True)
class FanComparison:
    matches: tuple[tuple[float, float, float], ...]
    unmatched_predicted: tuple[float, ...]
    unmatched_observed: tuple[float, ...]
    passed: bool

    @property
    def max_error(self) -> float:
        return max((m[2] for m in self.matches), default=0.0)


def compare_fans(predicted: DirectionFan, observed: DirectionFan, tol_deg: float = 2.0) -> FanComparison:
    """Optimal angular matching; all entries in degrees."""
    if not tol_deg > 0:
        raise ValueError("tol_deg must be positive")
    p, o = predicted.angles, observed.angles
    matches, used_p, used_o = [], set(), set()
    if len(p) and len(o):
        cost = np.degrees(_angle_gap(p[:, None], o[None, :]))
        rows, cols = linear_sum_assignment(cost)
        for r, c in zip(rows, cols):
            if cost[r, c] <= tol_deg:
                matches.append((math.degrees(p[r]), math.degrees(o[c]), float(cost[r, c])))
                used_p.add(r)
                used_o.add(c)
    un_p = tuple(math.degrees(a) for m, a in enumerate(p) if m not in used_p)
    un_o = tuple(math.degrees(a) for m, a in enumerate(o) if m not in used_o)
    return FanComparison(tuple(matches), un_p, un_o, not un_p and not un_o)


# --- end-to-end ----------------------------------------------------------------

@dataclass(frozen=True)
class VerificationConfig:
    window: float | None = None          # r0; None means eps / 2
    resolution: int = 512
    windows: int = 10                    # scans at r0 2^-k, k < windows
    annuli: int = 8
    merge_deg: float = 5.0
    persistence: int = 3
    tol_deg: float = 2.0
    tol: float = 1e-12
    min_samples: int = 10

    def radii(self, curve: PlaneCurveGerm) -> list[float]:
        r0 = curve.epsilon / 2.0 if self.window is None else float(self.window)
        return [r0 * 2.0 ** -k for k in range(self.windows)]


@dataclass(frozen=True)
class Claim:
    claim_id: str
    predicted: str
    observed: str
    error: float
    verdict: str                         # pass | fail | inconclusive


@dataclass
class VerificationReport:
    curve_id: str
    predicted_fan: DirectionFan
    observed_fan: DirectionFan
    comparison: FanComparison
    branch_count: int
    bound: int
    reach_sequence: list[tuple[float, float]]
    reach: str
    max_residual: float
    max_clearance_violation: float
    max_ratio_excess: float
    sample_count: int
    claims: list[Claim] = field(default_factory=list)
    estimates: list[AnnulusDirectionEstimate] = field(default_factory=list)
    contributing: dict = field(default_factory=dict)
    scans: dict = field(default_factory=dict, repr=False)

    @property
    def verdict(self) -> str:
        verdicts = {c.verdict for c in self.claims}
        if "fail" in verdicts:
            return "fail"
        if "inconclusive" in verdicts:
            return "inconclusive"
        return "pass"

    @property
    def samples(self) -> list[MedialSample]:
        return [s for scan in self.scans.values() for s in scan.samples]


def ratio_excess(sample: MedialSample) -> float:
    """max over non-origin closest points b of |b|/|a| - 2 cos angle(b, a)."""
    a = np.asarray(sample.point)
    na = float(np.linalg.norm(a))
    worst = -math.inf
    for c in sample.clusters:
        b = np.asarray(c.point)
        nb = float(np.linalg.norm(b))
        if nb == 0.0 or na == 0.0:
            continue
        worst = max(worst, nb / na - 2.0 * float(a @ b) / (na * nb))
    return worst


def canonical_frame_points(curve: PlaneCurveGerm, pts: np.ndarray) -> np.ndarray:
    """Canonical coordinates of a one-branch germ, y pointing where the branch bends."""
    branch = curve.branches[0]
    side = -1.0 if (not branch.is_zero and branch.terms[0].coeff < 0) else 1.0
    c, s = math.cos(branch.rotation), math.sin(branch.rotation)
    x = c * pts[:, 0] + s * pts[:, 1]
    y = -s * pts[:, 0] + c * pts[:, 1]
    return np.column_stack([x, side * y])


def quadrant_violations(curve: PlaneCurveGerm, scans: dict) -> int:
    """Samples breaking the one-branch exclusions (open quadrant, wrong side)."""
    bad = 0
    for r, scan in scans.items():
        if not scan.samples:
            continue
        pts = canonical_frame_points(curve, _points(scan.samples))
        inner = np.hypot(pts[:, 0], pts[:, 1]) < r / 2.0
        bad += int(np.sum(inner & (pts[:, 0] > scan.pitch) & (pts[:, 1] > scan.pitch)))
        bad += int(np.sum(pts[:, 1] < -scan.pitch))
    return bad


def run_verification(curve: PlaneCurveGerm, config: VerificationConfig = VerificationConfig(),
                     curve_id: str = "curve", scans: dict | None = None) -> VerificationReport:
    """Scan, certify, estimate, predict and compare.

    ``scans`` may hold precomputed :class:`GridScan` objects keyed by window
    radius (missing radii are scanned and added).
    """
    radii = config.radii(curve)
    r0 = radii[0]
    scans = {} if scans is None else scans
    todo = [r for r in radii if r not in scans]
    if todo:
        nearest_medial_distance(curve, todo, config.resolution, config.tol, scans=scans)
    sequence = _running_min(radii, scans)
    reach = reach_verdict(sequence, r0)

    samples = [s for r in radii for s in scans[r].samples]
    residual = max((s.residual for s in samples), default=-math.inf)
    clearance_violation = max((max(0.0, -s.clearance) for s in samples), default=0.0)
    ratio = max((ratio_excess(s) for s in samples), default=-math.inf)

    annuli = geometric_annuli(r0, config.annuli)
    estimates: list[AnnulusDirectionEstimate] = []
    observed = estimate_tangent_cone(samples, annuli, config.merge_deg, config.persistence,
                                     config.min_samples, estimates=estimates)

    # innermost annulus; its branches are counted on the finest scan covering it
    inner = annuli[-1]
    finest: GridScan = scans[min(r for r in radii if r >= inner[1])]
    count = estimate_branch_count(finest.samples, inner, finest.pitch)

    claims: list[Claim] = []
    contributing: dict = {}
    if curve.k == 1:
        expected = predict_reach(curve)
        predicted = predict_tangent_cone(curve)
        observed_reach = {"reaches": "yes", "bounded away": "no"}.get(reach, "inconclusive")
        if observed_reach == "inconclusive":
            verdict = "inconclusive"
        else:
            verdict = "pass" if (observed_reach == "yes") == expected else "fail"
        claims.append(Claim("reach", "yes" if expected else "no", observed_reach,
                            sequence[-1][1], verdict))
        bound = 1 if expected else 0
        bad = quadrant_violations(curve, scans)
        claims.append(Claim("quadrant", "0", str(bad), float(bad), "pass" if bad == 0 else "fail"))
    else:
        inner_samples = [s for s in samples if inner[0] <= s.norm <= inner[1]]
        hit = set(region_of(_points(inner_samples), curve)) if inner_samples else set()
        contributing = {pair: pair in hit for pair in curve.regions()}
        try:
            predicted = predict_tangent_cone(curve, contributing)
            consistent = True
        except ValueError:
            predicted = DirectionFan()
            consistent = False
        bad_regions = [rep.pair for rep in region_reports(curve)
                       if (rep.contributing_predicted == "no" and contributing[rep.pair])
                       or (rep.contributing_predicted == "yes" and not contributing[rep.pair])]
        ok = consistent and not bad_regions
        claims.append(Claim("regions", _fmt_flags({r.pair: r.contributing_predicted for r in region_reports(curve)}),
                            _fmt_flags({p: "yes" if v else "no" for p, v in contributing.items()}),
                            float(len(bad_regions)), "pass" if ok else "fail"))
        bound = branch_count_bound(curve, contributing)

    comparison = compare_fans(predicted, observed, config.tol_deg)
    claims.append(Claim("fan", _fmt_deg(predicted.degrees), _fmt_deg(observed.degrees),
                        comparison.max_error if comparison.passed else math.nan,
                        "pass" if comparison.passed else "fail"))
    claims.append(Claim("branch_count", f"<= {bound}", str(count), float(count),
                        "pass" if count <= bound else "fail"))
    cert_ok = (residual <= RESIDUAL_MAX and clearance_violation <= -CLEARANCE_MIN
               and ratio <= RATIO_SLACK)
    claims.append(Claim("certificates", "residual<=1e-8 clearance>=-1e-9 ratio<=2cos+1e-6",
                        f"residual={residual:.3g} clearance_violation={clearance_violation:.3g} "
                        f"ratio_excess={ratio:.3g}", max(residual, 0.0),
                        "pass" if cert_ok else "fail"))
    return VerificationReport(curve_id, predicted, observed, comparison, count, bound, sequence,
                              reach, residual, clearance_violation, ratio, len(samples), claims,
                              estimates, contributing, scans)


def _running_min(radii, scans) -> list[tuple[float, float]]:
    best, out = math.inf, []
    for r in radii:
        for s in scans[r].samples:
            if any(not c.at_origin for c in s.clusters):
                best = min(best, s.norm)
        out.append((r, best))
    return out


def _fmt_deg(values) -> str:
    # an angle just below 2 pi would print as 360.000
    shown = sorted(round(float(v), 3) % 360.0 for v in values)
    return " ".join(f"{v:.3f}" for v in shown) or "-"


def _fmt_flags(flags: dict) -> str:
    return " ".join(f"{i}-{j}:{v}" for (i, j), v in flags.items()) or "-"


def render_text(report: VerificationReport) -> str:
    lines = [f"curve: {report.curve_id}",
             f"samples: {report.sample_count}   reach: {report.reach}",
             "window  min|a|"]
    lines += [f"  {r:.6g}  {v:.6g}" for r, v in report.reach_sequence]
    lines.append(f"branches near 0: {report.branch_count} (bound {report.bound})")
    lines.append(f"{'claim':<14}{'verdict':<14}predicted | observed")
    for c in report.claims:
        lines.append(f"{c.claim_id:<14}{c.verdict:<14}{c.predicted} | {c.observed}")
    lines.append(f"overall: {report.verdict}")
    return "\n".join(lines) + "\n"


def render_csv(report: VerificationReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["claim", "predicted", "observed", "error", "verdict"])
    for c in report.claims:
        writer.writerow([c.claim_id, c.predicted, c.observed, "%.17g" % c.error, c.verdict])
    return buf.getvalue()
