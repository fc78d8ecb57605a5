"""Numerical medial axis of a curve germ inside a window around the origin.

Two independent extractors:

* :func:`grid_medial_scan` classifies the nodes of an n x n grid by their
  closest-point basin, finds grid edges across which the basin jumps, and
  pins the tie point on each such edge;
* :func:`trace_conflict_set` marches the equidistance locus of two branches
  with a predictor-corrector scheme.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from . import _kernels as K
from .curve import PlaneCurveGerm, eval_branch
from .distance import (ClosestPointCluster, ClosestPointSet, SeedTable, build_seed_table,
                       distance_and_closest, is_medial_candidate, proximal_inequality_residual)

RESIDUAL_MAX = 1e-8
CLEARANCE_MIN = -1e-9


class MedialAxisError(RuntimeError):
    pass


class TraceError(MedialAxisError):
    """Tracer failure; ``trace`` holds whatever was accepted before it."""

    def __init__(self, message: str, trace: "ConflictTrace | None" = None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class MedialSample:
    point: tuple[float, float]
    distance: float
    clusters: tuple[ClosestPointCluster, ...]
    flags: frozenset = frozenset()
    residual: float = float("nan")
    clearance: float = float("nan")

    @property
    def norm(self) -> float:
        return math.hypot(*self.point)

    @property
    def branch_ids(self) -> tuple[int, ...]:
        return tuple(sorted({c.branch_index for c in self.clusters}))


@dataclass(frozen=True)
class ConflictTrace:
    branch_pair: tuple[int, int]
    polyline: tuple[MedialSample, ...]
    region: tuple[int, int]
    step: float = 0.0

    @property
    def points(self) -> np.ndarray:
        return np.array([s.point for s in self.polyline]).reshape(-1, 2)


def grid_pitch(window_radius: float, resolution: int) -> float:
    return 2.0 * window_radius / (resolution - 1)


def maximal_ball_clearance(sample, curve: PlaneCurveGerm, probes: int | np.ndarray = 512) -> float:
    """min over probe points c of |c - a| - d(a, X).

    Non-negative (to 1e-9) means the open ball B(a, d) misses X.  This is
    necessary for a central-set point but does not by itself make ``a``
    medial.
    """
    from .distance import probe_points
    pts = probe_points(curve, probes) if np.isscalar(probes) else np.asarray(probes)
    a = np.asarray(sample.point, dtype=float)
    return float(np.min(np.hypot(pts[:, 0] - a[0], pts[:, 1] - a[1])) - sample.distance)


def make_sample(cps: ClosestPointSet, curve: PlaneCurveGerm, probes: np.ndarray) -> MedialSample | None:
    """Certified :class:`MedialSample` from a closest-point set, or None.

    Rejected when fewer than two clusters remain after dropping truncation
    endpoints, or when a certificate fails.
    """
    if not is_medial_candidate(cps):
        return None
    real = [c for c in cps.clusters if not c.boundary_artifact]
    if len(real) < 2:
        return None
    flags = set()
    if len(real) < len(cps.clusters):
        flags.add("boundary_artifact")
    if cps.touches_origin:
        flags.add("touches_origin")
    sample = MedialSample(cps.query, cps.distance, cps.clusters, frozenset(flags))
    residual = proximal_inequality_residual(sample, curve, probes=probes)
    clearance = maximal_ball_clearance(sample, curve, probes)
    if residual > RESIDUAL_MAX or clearance < CLEARANCE_MIN:
        return None
    return MedialSample(cps.query, cps.distance, cps.clusters, frozenset(flags), residual, clearance)


@dataclass
class GridScan:
    """Raw output of a grid scan, kept for diagnostics and branch counting."""
    window_radius: float
    resolution: int
    pitch: float
    samples: list[MedialSample] = field(default_factory=list)
    crossing_edges: int = 0


def _grid(window_radius: float, resolution: int):
    axis = np.linspace(-window_radius, window_radius, resolution)
    gx, gy = np.meshgrid(axis, axis)
    return gx.ravel(), gy.ravel()


def run_grid_scan(curve: PlaneCurveGerm, window_radius: float, resolution: int = 512,
                  tol: float = 1e-12) -> GridScan:
    """Grid scan in the frame of branch 0 (its tangent along +x), reported in world frame.

    Near a tangent line the medial arms of a superquadratic branch come
    within 1e-20 of the normal line, below the spacing of world-frame
    doubles when the branch is rotated.  In the branch's own frame those
    offsets are representable, and rotating the input rotates the output.
    """
    if resolution < 64:
        raise ValueError("resolution must be >= 64")
    if not 0.0 < window_radius <= curve.epsilon / 2.0 * (1.0 + 1e-12):
        raise ValueError(f"window radius must lie in (0, eps/2 = {curve.epsilon / 2.0}]")
    ref = curve.branches[0].rotation
    if ref == 0.0:
        return _scan_in_frame(curve, window_radius, resolution, tol)
    scan = _scan_in_frame(curve.rotated(-ref), window_radius, resolution, tol)
    c, s = math.cos(ref), math.sin(ref)

    def turn(p):
        return (c * p[0] - s * p[1], s * p[0] + c * p[1])

    scan.samples = [replace(smp, point=turn(smp.point),
                            clusters=tuple(replace(cl, point=turn(cl.point)) for cl in smp.clusters))
                    for smp in scan.samples]
    return scan


def _scan_in_frame(curve: PlaneCurveGerm, window_radius: float, resolution: int,
                   tol: float) -> GridScan:
    n = resolution
    pitch = grid_pitch(window_radius, n)
    table = build_seed_table(curve, 2.2 * window_radius * 1.0001)
    arr = table.arrays
    px, py = _grid(window_radius, n)
    inside = np.hypot(px, py) <= window_radius
    idx = np.flatnonzero(inside)
    foot_b = np.full(px.size, -2, dtype=np.int64)
    foot_j = np.zeros(px.size, dtype=np.int64)
    emin = np.full(px.size, np.nan)
    fb, fj, fe = K.grid_feet(px[idx], py[idx], arr.cos_r, arr.sin_r, table.ts, table.fs, table.ss,
                               arr.coeffs, arr.exps, arr.nterms, tol)
    foot_b[idx], foot_j[idx], emin[idx] = fb, fj, fe
    dist = np.sqrt(np.maximum(px * px + py * py + emin, 0.0))
    valid = inside & (dist > 2.0 * pitch)

    grid_id = np.arange(px.size).reshape(n, n)
    pairs = []
    for a_ids, b_ids in ((grid_id[:, :-1], grid_id[:, 1:]), (grid_id[:-1, :], grid_id[1:, :])):
        a_ids, b_ids = a_ids.ravel(), b_ids.ravel()
        both = valid[a_ids] & valid[b_ids]
        pairs.append((a_ids[both], b_ids[both]))
    pi = np.concatenate([p[0] for p in pairs])
    qi = np.concatenate([p[1] for p in pairs])
    # Near the origin the interior basin is born (fold) only a hair beyond
    # the tie, so grid nodes rarely see both basins.  Edges where the foot
    # leaves the origin are resolved by bisecting "origin is beaten" instead.
    at_origin = foot_b == K.ORIGIN
    origin_edge = at_origin[pi] != at_origin[qi]
    cross = K.edge_crossings(pi, qi, px, py, foot_b, foot_j, arr.cos_r, arr.sin_r,
                             table.ts, table.fs, table.ss)
    cross &= ~origin_edge
    oi, oq = pi[origin_edge], qi[origin_edge]
    pi, qi = pi[cross], qi[cross]
    ox, oy, ok = K.bisect_edges(pi, qi, px, py, foot_b, foot_j, arr.cos_r, arr.sin_r,
                                table.ts, table.fs, table.ss, arr.coeffs, arr.exps, arr.nterms, tol)
    ox2, oy2, ok2 = K.bisect_origin_edges(oi, oq, px, py, arr.cos_r, arr.sin_r, table.ts,
                                          table.fs, table.ss, arr.coeffs, arr.exps, arr.nterms,
                                          tol)
    ox = np.concatenate([ox[ok], ox2[ok2]])
    oy = np.concatenate([oy[ok], oy2[ok2]])
    scan = GridScan(window_radius, n, pitch, crossing_edges=int(pi.size + oi.size))
    for x, y in zip(ox, oy):
        cps = distance_and_closest((x, y), curve, tol, table=table)
        sample = make_sample(cps, curve, table.probes)
        if sample is not None:
            scan.samples.append(sample)
    return scan


def grid_medial_scan(curve: PlaneCurveGerm, window_radius: float, resolution: int = 512,
                     tol: float = 1e-12) -> list[MedialSample]:
    """Certified medial samples inside ``B(0, window_radius)``.

    Nodes within two grid pitches of X are skipped.  Every returned sample
    sits on a grid edge whose endpoints have closest points in different
    basins, so the samples trace M_X up to one grid pitch.
    """
    return run_grid_scan(curve, window_radius, resolution, tol).samples


# --- regions between consecutive branches ------------------------------------

def _branch_angle_at_radius(branch, r: np.ndarray) -> np.ndarray:
    """Polar angle of the branch point at distance r from the origin."""
    eps = branch.domain_length
    lo = np.zeros_like(r)
    hi = np.full_like(r, eps)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        pts = eval_branch(branch, mid)
        inside = np.hypot(pts[..., 0], pts[..., 1]) < r
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    pts = eval_branch(branch, 0.5 * (lo + hi))
    return np.arctan2(pts[..., 1], pts[..., 0])


def region_of(points, curve: PlaneCurveGerm) -> list[tuple[int, int] | None]:
    """Region ``(i, next)`` containing each point; None for k = 1."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if curve.k < 2 or pts.size == 0:
        return [None] * len(pts)
    r = np.hypot(pts[:, 0], pts[:, 1])
    ang = np.arctan2(pts[:, 1], pts[:, 0])
    branch_ang = np.stack([_branch_angle_at_radius(b, r) for b in curve.branches])
    out: list[tuple[int, int] | None] = []
    regions = curve.regions()
    for m in range(len(pts)):
        chosen = None
        for i, j in regions:
            span = (branch_ang[j, m] - branch_ang[i, m]) % (2 * math.pi)
            if span == 0.0 and len(regions) == 1:
                span = 2 * math.pi
            offset = (ang[m] - branch_ang[i, m]) % (2 * math.pi)
            if offset <= span:
                chosen = (i, j)
                break
        out.append(chosen)
    return out


# --- conflict-set tracer -----------------------------------------------------

def _branch_distance(p, curve, b, table, tol):
    cps = distance_and_closest(p, curve, tol, table=table, branches=(b,))
    foot = np.array(cps.clusters[0].point)
    return cps.distance, foot


def trace_conflict_set(curve: PlaneCurveGerm, pair: tuple[int, int], window_radius: float,
                       step: float, tol: float = 1e-12) -> ConflictTrace:
    """March ``{d(., G_i) = d(., G_j)}`` inside ``D(G_i, G_j)`` toward 0.

    Starts from a sign change of ``d_i - d_j`` on the window circle, then
    alternates a tangent predictor with a transverse root-finding corrector.
    Each accepted point is re-checked against the whole curve.
    """
    i, j = pair
    if i == j or curve.k < 2:
        raise ValueError("pair must be two distinct branches")
    if (i, j) not in curve.regions():
        raise ValueError(f"branches {pair} are not consecutive (no region D({i},{j}))")
    if step > window_radius / 50.0 * (1.0 + 1e-12):
        raise ValueError("step must be <= window_radius / 50")
    table = build_seed_table(curve, 2.2 * window_radius * 1.0001)

    def g(p):
        return _branch_distance(p, curve, i, table, tol)[0] - _branch_distance(p, curve, j, table, tol)[0]

    # start: sign change of g along the window arc inside the region
    rho = window_radius
    bi = _branch_angle_at_radius(curve.branches[i], np.array([rho]))[0]
    bj = _branch_angle_at_radius(curve.branches[j], np.array([rho]))[0]
    span = (bj - bi) % (2 * math.pi)
    if span == 0.0:
        raise TraceError("region is empty at the window radius")
    angles = bi + span * np.linspace(0.0, 1.0, 130)[1:-1]
    values = [g((rho * math.cos(a), rho * math.sin(a))) for a in angles]
    start = None
    for a0, a1, v0, v1 in zip(angles, angles[1:], values, values[1:]):
        if v0 * v1 < 0.0:
            start = brentq(lambda a: g((rho * math.cos(a), rho * math.sin(a))), a0, a1,
                           xtol=1e-15 * rho, rtol=1e-15)
            break
    if start is None:
        raise TraceError("no conflict crossing on the window boundary of the region")
    p = np.array([rho * math.cos(start), rho * math.sin(start)])

    samples: list[MedialSample] = []
    probes = table.probes

    def accept(point) -> bool:
        cps = distance_and_closest(point, curve, tol, table=table)
        ids = {c.branch_index for c in cps.clusters}
        if not ({i, j} <= ids or cps.touches_origin) or len(cps.clusters) < 2:
            return False
        sample = make_sample(cps, curve, probes)
        if sample is None:
            return False
        samples.append(sample)
        return True

    def trace_so_far():
        return ConflictTrace((i, j), tuple(samples), (i, j), step)

    accept(p)
    tangent = None
    for _ in range(int(40 * rho / step) + 10):
        di, fi = _branch_distance(p, curve, i, table, tol)
        dj, fj = _branch_distance(p, curve, j, table, tol)
        normal = (p - fi) / di - (p - fj) / dj
        nn = np.linalg.norm(normal)
        if nn == 0.0:
            raise TraceError("degenerate equidistance gradient", trace_so_far())
        normal /= nn
        tau = np.array([-normal[1], normal[0]])
        if tangent is None:
            if tau @ p > 0.0:
                tau = -tau
        elif tau @ tangent < 0.0:
            tau = -tau
        tangent = tau
        h = 0.9 * step
        moved = False
        for _attempt in range(6):
            pred = p + h * tau

            def along(s, pred=pred):
                return g(pred + s * normal)

            width = h
            f_lo, f_hi = along(-width), along(width)
            for _grow in range(3):
                if f_lo * f_hi <= 0.0:
                    break
                width *= 2.0
                f_lo, f_hi = along(-width), along(width)
            if f_lo * f_hi > 0.0:
                h *= 0.5
                continue
            s = brentq(along, -width, width, xtol=1e-15 * max(np.linalg.norm(pred), step),
                       rtol=1e-15)
            new = pred + s * normal
            if np.linalg.norm(new - p) <= step:
                moved = True
                break
            h *= 0.5
        if not moved:
            raise TraceError("corrector failed to bracket a root", trace_so_far())
        if region_of(new[None, :], curve)[0] != (i, j):
            break
        p = new
        accept(p)
        if np.linalg.norm(p) < step:
            break
    return trace_so_far()


# --- single branch and reach ---------------------------------------------------

def single_branch_medial_scan(curve: PlaneCurveGerm, window_radius: float, resolution: int = 512,
                              tol: float = 1e-12) -> list[MedialSample]:
    """Grid scan of a one-branch germ, restricted to the side the curve bends toward.

    Raises :class:`MedialAxisError` if a sample lands in the open quadrant
    ``{x > 0, y > 0}`` (canonical frame, y measured toward the curve) inside
    ``B(0, window_radius / 2)`` by more than one grid pitch.
    """
    if curve.k != 1:
        raise ValueError("single_branch_medial_scan needs exactly one branch")
    branch = curve.branches[0]
    pitch = grid_pitch(window_radius, resolution)
    samples = grid_medial_scan(curve, window_radius, resolution, tol)
    side = 1.0 if branch.is_zero or branch.terms[0].coeff > 0 else -1.0
    c, s = math.cos(branch.rotation), math.sin(branch.rotation)
    kept = []
    for sample in samples:
        x, y = sample.point
        cx, cy = c * x + s * y, -s * x + c * y
        cy *= side
        if cy < -pitch:
            continue
        if math.hypot(cx, cy) < window_radius / 2.0 and cx > pitch and cy > pitch:
            raise MedialAxisError(f"quadrant exclusion violated at {sample.point}")
        kept.append(sample)
    return kept


def nearest_medial_distance(curve: PlaneCurveGerm, radii, resolution: int = 512,
                            tol: float = 1e-12, scans: dict | None = None) -> list[tuple[float, float]]:
    """Running minimum of medial-sample norms as the window shrinks.

    The value at radius r is the smallest ``|a|`` over all samples found by
    the scans at r and at every larger radius in ``radii``, so the sequence
    is non-increasing along the list.  ``inf`` means no sample yet.  Only
    samples with a closest point other than the origin count.  Pass a dict
    as ``scans`` to collect the per-radius :class:`GridScan` objects.
    """
    radii = [float(r) for r in radii]
    if any(r2 >= r1 for r1, r2 in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    out = []
    best = math.inf
    for r in radii:
        scan = run_grid_scan(curve, r, resolution, tol)
        if scans is not None:
            scans[r] = scan
        for sample in scan.samples:
            if any(not c.at_origin for c in sample.clusters):
                best = min(best, sample.norm)
        out.append((r, best))
    return out


REACH_MIN_RATIO = 1.9


def decrease_per_halving(sequence) -> float:
    """Average factor by which min |a| drops per halving of the window.

    Least-squares slope of log2(min |a|) against log2(r) over the finite
    entries; a slope of 1 means a factor of 2.
    """
    finite = [(r, v) for r, v in sequence if math.isfinite(v) and v > 0]
    if len(finite) < 2:
        return float("nan")
    x = np.log2([r for r, _ in finite])
    y = np.log2([v for _, v in finite])
    return float(2.0 ** np.polyfit(x, y, 1)[0])


def reach_verdict(sequence, r0: float) -> str:
    """'reaches', 'bounded away' or 'inconclusive' from a running-min sequence.

    reaches: final value < 1e-3 r0 and the value drops by a factor of 2 per
    halving of the window on average (the least-squares factor must reach
    1.9, which absorbs grid quantisation of the smallest sample norm).
    bounded away: every value exceeds 0.05 r0.
    """
    values = [v for _, v in sequence]
    if all(v > 0.05 * r0 for v in values):
        return "bounded away"
    if values and values[-1] < 1e-3 * r0 and decrease_per_halving(sequence) >= REACH_MIN_RATIO:
        return "reaches"
    return "inconclusive"
