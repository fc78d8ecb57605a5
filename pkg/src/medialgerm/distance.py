"""Distance to a curve germ and the set of closest points.

Global minimisation along each branch uses a fixed seed table: a uniform
grid of ``N0`` parameters plus geometrically spaced parameters reaching far
toward ``t = 0`` (closest-point basins near the origin shrink like powers of
the query's distance).  Discrete basins close to the best one are refined by
golden-section search.  Two refined minima are distinct closest points when
they lie in different basins, i.e. the distance rises between them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _kernels as K
from .curve import PlaneCurveGerm, eval_branch

N0 = 4096
LOG_DECADES = 60
LOG_PER_DECADE = 12
BASIN_RTOL = 1e-3
REFINE_TOL = 1e-12
TIE_REL = 1e-9
BARRIER_ULPS = 64.0
PROBE_COUNT = 512


@dataclass(frozen=True)
class ClosestPointCluster:
    branch_index: int
    parameter: float
    point: tuple[float, float]
    distance: float
    boundary_artifact: bool = False
    at_origin: bool = False


@dataclass(frozen=True)
class ClosestPointSet:
    query: tuple[float, float]
    distance: float
    clusters: tuple[ClosestPointCluster, ...]

    @property
    def touches_origin(self) -> bool:
        return any(c.at_origin for c in self.clusters)

    @property
    def branch_ids(self) -> tuple[int, ...]:
        return tuple(sorted({c.branch_index for c in self.clusters}))


@dataclass(frozen=True)
class CurveArrays:
    """Branch data packed for the compiled kernels."""
    cos_r: np.ndarray
    sin_r: np.ndarray
    coeffs: np.ndarray
    exps: np.ndarray
    nterms: np.ndarray
    eps: np.ndarray


def pack_curve(curve: PlaneCurveGerm) -> CurveArrays:
    nb = curve.k
    width = max(1, max(len(b.terms) for b in curve.branches))
    coeffs = np.zeros((nb, width))
    exps = np.ones((nb, width))
    nterms = np.zeros(nb, dtype=np.int64)
    for i, branch in enumerate(curve.branches):
        nterms[i] = len(branch.terms)
        coeffs[i, :nterms[i]] = branch.coeffs
        exps[i, :nterms[i]] = branch.exponents
    rot = np.array([b.rotation for b in curve.branches])
    return CurveArrays(np.cos(rot), np.sin(rot), coeffs, exps, nterms,
                       np.array([b.domain_length for b in curve.branches]))


@dataclass(frozen=True)
class SeedTable:
    """Seed parameters and canonical points for every branch.

    Valid for any query ``a`` with ``2.1 |a| <= reach`` (closest points of
    such a query have parameter below ``reach``).
    """
    curve: PlaneCurveGerm
    arrays: CurveArrays
    reach: float
    ts: np.ndarray
    fs: np.ndarray
    ss: np.ndarray
    probes: np.ndarray = field(repr=False)


def _seed_parameters(top: float, eps: float, n_uniform: int) -> np.ndarray:
    uniform = np.linspace(0.0, top, n_uniform)
    geometric = np.geomspace(top * 10.0 ** -LOG_DECADES, top, LOG_DECADES * LOG_PER_DECADE + 1)
    ts = np.unique(np.concatenate([uniform, geometric, [0.0, top]]))
    ts[-1] = top if top < eps else eps
    return ts


def build_seed_table(curve: PlaneCurveGerm, reach: float, n_uniform: int = N0,
                     probe_count: int = PROBE_COUNT) -> SeedTable:
    arrays = pack_curve(curve)
    rows_t, rows_f = [], []
    for branch in curve.branches:
        top = min(branch.domain_length, 1.05 * reach)
        ts = _seed_parameters(top, branch.domain_length, n_uniform)
        rows_t.append(ts)
        rows_f.append(np.asarray(branch.f(ts), dtype=float))
    width = max(len(r) for r in rows_t)
    ts = np.empty((curve.k, width))
    fs = np.empty((curve.k, width))
    for i, (rt, rf) in enumerate(zip(rows_t, rows_f)):
        # pad by repeating the last seed; seed_limit never walks past it
        ts[i] = np.concatenate([rt, np.full(width - len(rt), rt[-1])])
        fs[i] = np.concatenate([rf, np.full(width - len(rf), rf[-1])])
    return SeedTable(curve, arrays, float(reach), ts, fs, ts * ts + fs * fs,
                     probe_points(curve, probe_count))


@lru_cache(maxsize=64)
def _cached_table(curve: PlaneCurveGerm, reach: float) -> SeedTable:
    return build_seed_table(curve, reach)


def table_for(curve: PlaneCurveGerm, query_norm: float) -> SeedTable:
    # round the reach up to a power of two so nearby queries share a table
    # below 1e-200 the geometric seeds would underflow; such queries sit on 0
    need = max(2.2 * query_norm, 1e-200)
    reach = min(2.0 ** math.ceil(math.log2(need)), 4.0 * max(b.domain_length for b in curve.branches))
    return _cached_table(curve, reach)


def probe_points(curve: PlaneCurveGerm, probe_count: int = PROBE_COUNT) -> np.ndarray:
    """Probe points on every branch, log-spaced in t toward 0, plus the origin."""
    pts = [np.zeros((1, 2))]
    for branch in curve.branches:
        eps = branch.domain_length
        ts = np.geomspace(eps * 1e-15, eps, max(probe_count, 1))
        pts.append(eval_branch(branch, ts))
    return np.concatenate(pts)


def _canonical_query(table: SeedTable, query, b: int) -> tuple[float, float]:
    ax, ay = K.to_canonical(float(query[0]), float(query[1]), table.arrays.cos_r[b],
                            table.arrays.sin_r[b])
    return ax, ay


def _term_scale(ax: float, ay: float, t, f):
    """Size of the terms summed in the excess at (t, f); sets its rounding error."""
    return t * t + f * f + 2.0 * (abs(ax) * t + abs(ay) * np.abs(f))


def _query_ulp_effect(query, point) -> float:
    """Change of the excess at ``point`` when the query moves by a few ulps."""
    eps = np.finfo(float).eps
    return 4.0 * eps * (abs(query[0] * point[0]) + abs(query[1] * point[1]))


def _foot_shift(curve: PlaneCurveGerm, query, b: int, t: float) -> float:
    """How far the foot at ``(b, t)`` moves when the query moves by one ulp per coordinate."""
    if t == 0.0:
        return 0.0
    branch = curve.branches[b]
    slope = sum(term.coeff * float(term.exponent) * t ** (float(term.exponent) - 1.0)
                for term in branch.terms)
    c, s = math.cos(branch.rotation), math.sin(branch.rotation)
    tx, ty = c - s * slope, s + c * slope
    norm = math.hypot(tx, ty)
    return np.finfo(float).eps * (abs(query[0] * tx) + abs(query[1] * ty)) / norm


def _unresolvable(curve: PlaneCurveGerm, query, b1: int, t1: float, b2: int, t2: float) -> bool:
    """Two feet closer together than a few query ulps can move them are one closest point."""
    p1 = eval_branch(curve.branches[b1], t1)
    p2 = eval_branch(curve.branches[b2], t2)
    gap = math.hypot(p1[0] - p2[0], p1[1] - p2[1])
    shift = max(_foot_shift(curve, query, b1, t1), _foot_shift(curve, query, b2, t2))
    return gap <= 4.0 * shift


def _tie_tolerance(scale: float, query_err: float, d_min: float) -> float:
    # relative to the terms being compared, or to what the query's own rounding
    # can change; capped by 1e-9 (1 + d) in distance
    return min(max(TIE_REL * scale, query_err), 2.0 * d_min * TIE_REL * (1.0 + d_min))


def _merge_same_branch(table: SeedTable, query, b: int, j1: int, j2: int, e1: float, e2: float,
                       t1: float, t2: float) -> bool:
    """True when two minima on branch ``b`` belong to the same basin.

    They do unless some seed between them sits above both by more than the
    rounding error of the excess.
    """
    if abs(t1 - t2) <= 1e-9 * max(t1, t2):
        return True
    lo, hi = sorted((j1, j2))
    if hi - lo < 2:
        return True
    ax, ay = _canonical_query(table, query, b)
    ts, fs, ss = table.ts[b, lo + 1:hi], table.fs[b, lo + 1:hi], table.ss[b, lo + 1:hi]
    between = ss - 2.0 * (ax * ts + ay * fs)
    noise = BARRIER_ULPS * np.finfo(float).eps * float(np.max(_term_scale(ax, ay, ts, fs)))
    return float(np.max(between) - max(e1, e2)) <= noise


def distance_and_closest(query, curve: PlaneCurveGerm, tol: float = REFINE_TOL,
                         table: SeedTable | None = None,
                         branches: tuple[int, ...] | None = None) -> ClosestPointSet:
    """``d(query, X)`` and the clustered set of closest points.

    ``branches`` restricts the search to a subset of branches (the distance
    to a single branch is used by the conflict-set tracer).
    """
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    qx, qy = float(query[0]), float(query[1])
    radius = math.hypot(qx, qy)
    if radius == 0.0:
        origin = ClosestPointCluster(0, 0.0, (0.0, 0.0), 0.0, at_origin=True)
        return ClosestPointSet((qx, qy), 0.0, (origin,))
    if table is None or 2.1 * radius > table.reach:
        table = table_for(curve, radius)
    arrays = table.arrays
    active = np.zeros(curve.k, dtype=np.bool_)
    active[list(range(curve.k)) if branches is None else list(branches)] = True
    cb, cj, ct, ce = K.closest_candidates(qx, qy, active, arrays.cos_r, arrays.sin_r, table.ts,
                                          table.fs, table.ss, arrays.eps, arrays.coeffs,
                                          arrays.exps, arrays.nterms, BASIN_RTOL, tol)
    if len(cb) == 0:
        raise RuntimeError("no closest-point candidate found")
    r2 = radius * radius
    e_min = float(np.min(ce))
    d_min = math.sqrt(max(r2 + e_min, 0.0))
    if d_min <= tol * (1.0 + radius):
        k = int(np.argmin(ce))
        b = int(cb[k])
        pt = eval_branch(curve.branches[b], float(ct[k]))
        cluster = ClosestPointCluster(b, float(ct[k]), (float(pt[0]), float(pt[1])), 0.0,
                                      bool(ct[k] >= curve.branches[b].domain_length), ct[k] == 0.0)
        return ClosestPointSet((qx, qy), 0.0, (cluster,))

    scales, qerrs = [], []
    for b, t in zip(cb, ct):
        ax, ay = _canonical_query(table, (qx, qy), int(b))
        scales.append(float(_term_scale(ax, ay, float(t), float(curve.branches[int(b)].f(float(t))))))
        qerrs.append(_query_ulp_effect((qx, qy), eval_branch(curve.branches[int(b)], float(t))))
    best = int(np.argmin(ce))
    kept: list[tuple[int, int, float, float]] = []
    for b, j, t, e, scale, qerr in zip(cb, cj, ct, ce, scales, qerrs):
        tie = _tie_tolerance(max(scale, scales[best]), qerr + qerrs[best], d_min)
        if e - e_min <= tie:
            kept.append((int(b), int(j), float(t), float(e)))

    clusters: list[tuple[int, int, float, float]] = []
    # origin first, so interior minima sliding into it can merge with it
    for b, j, t, e in sorted(kept, key=lambda item: (item[2] != 0.0, item[0], item[2])):
        if t == 0.0:
            if not clusters:
                clusters.append((b, 0, 0.0, 0.0))
            continue
        merged = False
        for idx, (b2, j2, t2, e2) in enumerate(clusters):
            if _unresolvable(curve, (qx, qy), b, t, b2, t2):
                same = True
            elif t2 == 0.0:
                same = _merge_same_branch(table, (qx, qy), b, 0, j, 0.0, e, 0.0, t)
            else:
                same = b2 == b and _merge_same_branch(table, (qx, qy), b, j2, j, e2, e, t2, t)
            if same:
                if t2 != 0.0 and e < e2:
                    clusters[idx] = (b, j, t, e)
                merged = True
                break
        if not merged:
            clusters.append((b, j, t, e))

    out = []
    for b, _, t, e in clusters:
        branch = curve.branches[b]
        pt = eval_branch(branch, t)
        dist = math.sqrt(max(r2 + e, 0.0))
        out.append(ClosestPointCluster(b, t, (float(pt[0]), float(pt[1])), dist,
                                       boundary_artifact=t >= branch.domain_length,
                                       at_origin=t == 0.0))
    out.sort(key=lambda c: (not c.at_origin, c.branch_index, c.parameter))
    return ClosestPointSet((qx, qy), d_min, tuple(out))


def is_medial_candidate(cps: ClosestPointSet) -> bool:
    return len(cps.clusters) >= 2


def proximal_inequality_residual(sample, curve: PlaneCurveGerm, probe_count: int = PROBE_COUNT,
                                 probes: np.ndarray | None = None) -> float:
    """Max over probe points c of <c - b, v> - |c - b|^2 / (2 d).

    ``b`` ranges over the sample's closest points and ``v = (a - b) / d``.
    For a genuine closest point this never exceeds 0 (up to rounding).
    """
    d = float(sample.distance)
    if d <= 0.0:
        raise ValueError("sample lies on the curve (d = 0)")
    if probes is None:
        probes = probe_points(curve, probe_count)
    a = np.asarray(sample.point, dtype=float)
    worst = -np.inf
    for cluster in sample.clusters:
        b = np.asarray(cluster.point, dtype=float)
        v = (a - b) / d
        diff = probes - b
        resid = diff @ v - np.einsum("ij,ij->i", diff, diff) / (2.0 * d)
        worst = max(worst, float(np.max(resid)))
    return worst
