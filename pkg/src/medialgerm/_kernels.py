"""Compiled inner loops for closest-point search.

Everything here works with the *excess* of a branch point over the origin,

    E(t) = |g(t)|**2 - 2 <a, g(t)>  =  |a - g(t)|**2 - |a|**2,

evaluated in the branch's canonical frame.  E(0) = 0 exactly and every term
is a product of small quantities near the origin, so comparisons between
closest-point candidates keep full relative precision even when the
candidates are 1e-20 apart.

Labels: a foot is identified by ``(branch, seed index)``; the origin, which
is shared by all branches, is ``(-1, 0)``.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

INVPHI = 0.6180339887498949
ORIGIN = -1


@njit(cache=True)
def powsum(t, coeffs, exps, nterm):
    if t <= 0.0:
        return 0.0
    s = 0.0
    for k in range(nterm):
        s += coeffs[k] * t ** exps[k]
    return s


@njit(cache=True)
def excess(t, ax, ay, coeffs, exps, nterm):
    f = powsum(t, coeffs, exps, nterm)
    return t * t + f * f - 2.0 * (ax * t + ay * f)


@njit(cache=True)
def _two_prod(a, b):
    # Dekker: a * b == p + e exactly (no FMA needed)
    p = a * b
    sp = 134217729.0
    ca = sp * a
    a_hi = ca - (ca - a)
    a_lo = a - a_hi
    cb = sp * b
    b_hi = cb - (cb - b)
    b_lo = b - b_hi
    e = ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return p, e


@njit(cache=True)
def _dot2(a1, b1, a2, b2):
    # a1 b1 + a2 b2 as if computed in twice the working precision
    p1, e1 = _two_prod(a1, b1)
    p2, e2 = _two_prod(a2, b2)
    s = p1 + p2
    z = s - p1
    err = (p1 - (s - z)) + (p2 - z)
    return s + (err + e1 + e2)


@njit(cache=True)
def to_canonical(px, py, c, s):
    # compensated: near a tangent line the canonical ordinate cancels heavily
    return _dot2(c, px, s, py), _dot2(-s, px, c, py)


@njit(cache=True)
def seed_limit(ts_b, radius):
    # closest points satisfy |b| <= 2|a| and |g(t)| >= t
    j = np.searchsorted(ts_b, 2.1 * radius, side="right")
    n = ts_b.size
    if j < 1:
        j = 1
    if j > n - 1:
        j = n - 1
    return j


@njit(cache=True)
def seed_e(j, ax, ay, ts_b, fs_b, ss_b):
    return ss_b[j] - 2.0 * (ax * ts_b[j] + ay * fs_b[j])


@njit(cache=True)
def _seed_slack(b, j, ax, ay, ts, fs, ss):
    # how far the true basin floor may sit below the seed value at j
    n = ts.shape[1]
    e = seed_e(j, ax, ay, ts[b], fs[b], ss[b])
    lo = seed_e(j - 1, ax, ay, ts[b], fs[b], ss[b]) if j > 0 else e
    hi = seed_e(j + 1, ax, ay, ts[b], fs[b], ss[b]) if j + 1 < n else e
    return max(lo, hi) - e


@njit(cache=True)
def grid_feet(px, py, cos_r, sin_r, ts, fs, ss, coeffs, exps, nterms, rtol):
    """Global minimiser of the excess for every query point, as a seed label.

    The discrete minimum decides unless another branch's discrete minimum is
    within seed resolution of it; then the refined minima decide.
    """
    nq = px.size
    nb = ts.shape[0]
    foot_b = np.empty(nq, np.int64)
    foot_j = np.empty(nq, np.int64)
    emin = np.empty(nq)
    br_j = np.zeros(nb, np.int64)
    br_e = np.empty(nb)
    for q in range(nq):
        radius = math.hypot(px[q], py[q])
        best = 0.0  # the origin, j = 0, on every branch
        bb = ORIGIN
        bj = 0
        for b in range(nb):
            ax, ay = to_canonical(px[q], py[q], cos_r[b], sin_r[b])
            jmax = seed_limit(ts[b], radius)
            br_e[b] = np.inf
            for j in range(1, jmax + 1):
                e = ss[b, j] - 2.0 * (ax * ts[b, j] + ay * fs[b, j])
                if e < br_e[b]:
                    br_e[b] = e
                    br_j[b] = j
            if br_e[b] < best:
                best = br_e[b]
                bb = b
                bj = br_j[b]
        if nb > 1 and bb != ORIGIN:
            refined = False
            e_best = best
            for b in range(nb):
                if b == bb or not br_e[b] < np.inf:
                    continue
                ax, ay = to_canonical(px[q], py[q], cos_r[b], sin_r[b])
                if br_e[b] - _seed_slack(b, br_j[b], ax, ay, ts, fs, ss) > best:
                    continue
                if not refined:
                    _, e_best = refine(px[q], py[q], bb, bj, cos_r, sin_r, ts, fs, ss, coeffs,
                                       exps, nterms, rtol)
                    refined = True
                _, e = refine(px[q], py[q], b, br_j[b], cos_r, sin_r, ts, fs, ss, coeffs, exps,
                              nterms, rtol)
                if e < e_best:
                    e_best = e
                    bb = b
                    bj = br_j[b]
                    best = br_e[b]
        foot_b[q] = bb
        foot_j[q] = bj
        emin[q] = best
    return foot_b, foot_j, emin


@njit(cache=True)
def descend(ax, ay, ts_b, fs_b, ss_b, j, jmax):
    """Walk downhill along the seed grid from index ``j``."""
    if j > jmax:
        j = jmax
    e = seed_e(j, ax, ay, ts_b, fs_b, ss_b)
    if j < jmax and seed_e(j + 1, ax, ay, ts_b, fs_b, ss_b) < e:
        while j < jmax:
            e2 = seed_e(j + 1, ax, ay, ts_b, fs_b, ss_b)
            if e2 < e:
                j += 1
                e = e2
            else:
                break
    elif j > 0:
        while j > 0:
            e2 = seed_e(j - 1, ax, ay, ts_b, fs_b, ss_b)
            if e2 < e:
                j -= 1
                e = e2
            else:
                break
    return j, e


@njit(cache=True)
def descend_label(px, py, b, j, cos_r, sin_r, ts, fs, ss):
    """Downhill walk on the whole curve from foot ``(b, j)``.

    Returns the label of the discrete local minimum reached and its excess.
    The origin is a local minimum of the curve only if no branch leaves it
    downhill; otherwise the walk continues along the steepest such branch.
    """
    radius = math.hypot(px, py)
    nb = ts.shape[0]
    if b != ORIGIN:
        ax, ay = to_canonical(px, py, cos_r[b], sin_r[b])
        jmax = seed_limit(ts[b], radius)
        j2, e2 = descend(ax, ay, ts[b], fs[b], ss[b], j, jmax)
        if j2 > 0:
            return b, j2, e2
    best_b = ORIGIN
    best_j = 0
    best_e = 0.0
    for bb in range(nb):
        ax, ay = to_canonical(px, py, cos_r[bb], sin_r[bb])
        if seed_e(1, ax, ay, ts[bb], fs[bb], ss[bb]) < 0.0:
            jmax = seed_limit(ts[bb], radius)
            j2, e2 = descend(ax, ay, ts[bb], fs[bb], ss[bb], 1, jmax)
            if e2 < best_e:
                best_b = bb
                best_j = j2
                best_e = e2
    return best_b, best_j, best_e


@njit(cache=True)
def golden(ax, ay, lo, hi, coeffs, exps, nterm, rtol):
    f_lo = excess(lo, ax, ay, coeffs, exps, nterm)
    f_hi = excess(hi, ax, ay, coeffs, exps, nterm)
    x1 = hi - INVPHI * (hi - lo)
    x2 = lo + INVPHI * (hi - lo)
    f1 = excess(x1, ax, ay, coeffs, exps, nterm)
    f2 = excess(x2, ax, ay, coeffs, exps, nterm)
    for _ in range(400):
        if hi - lo <= rtol * hi:
            break
        if f1 < f2:
            hi = x2
            x2 = x1
            f2 = f1
            x1 = hi - INVPHI * (hi - lo)
            f1 = excess(x1, ax, ay, coeffs, exps, nterm)
        else:
            lo = x1
            x1 = x2
            f1 = f2
            x2 = lo + INVPHI * (hi - lo)
            f2 = excess(x2, ax, ay, coeffs, exps, nterm)
    t_best, f_best = x1, f1
    if f2 < f_best:
        t_best, f_best = x2, f2
    if f_lo < f_best:
        t_best, f_best = lo, f_lo
    if f_hi < f_best:
        t_best, f_best = hi, f_hi
    return t_best, f_best


@njit(cache=True)
def refine(px, py, b, j, cos_r, sin_r, ts, fs, ss, coeffs, exps, nterms, rtol):
    """Refined (t, excess) of the basin at seed ``(b, j)``."""
    if b == ORIGIN or j == 0:
        return 0.0, 0.0
    ax, ay = to_canonical(px, py, cos_r[b], sin_r[b])
    n = ts.shape[1]
    lo = ts[b, j - 1]
    hi = ts[b, j + 1] if j + 1 < n else ts[b, j]
    t, e = golden(ax, ay, lo, hi, coeffs[b], exps[b], nterms[b], rtol)
    e_seed = seed_e(j, ax, ay, ts[b], fs[b], ss[b])
    if e_seed < e:
        return ts[b, j], e_seed
    return t, e


@njit(cache=True)
def edge_crossings(pi, qi, px, py, foot_b, foot_j, cos_r, sin_r, ts, fs, ss):
    """True where the foot map is discontinuous along grid edge (p, q)."""
    m = pi.size
    out = np.zeros(m, np.bool_)
    for k in range(m):
        p = pi[k]
        q = qi[k]
        bp, jp = foot_b[p], foot_j[p]
        bq, jq = foot_b[q], foot_j[q]
        b1, j1, _ = descend_label(px[p], py[p], bq, jq, cos_r, sin_r, ts, fs, ss)
        if not _same(b1, j1, bp, jp):
            out[k] = True
            continue
        b2, j2, _ = descend_label(px[q], py[q], bp, jp, cos_r, sin_r, ts, fs, ss)
        if not _same(b2, j2, bq, jq):
            out[k] = True
    return out


@njit(cache=True)
def _same(b1, j1, b2, j2):
    # neighbouring seeds of a flat minimum can swap under rounding
    if b1 != b2:
        return False
    return b1 == ORIGIN or abs(j1 - j2) <= 1


@njit(cache=True)
def _phi(x, y, ba, ja, bb, jb, cos_r, sin_r, ts, fs, ss, coeffs, exps, nterms, rtol):
    ba2, ja2, _ = descend_label(x, y, ba, ja, cos_r, sin_r, ts, fs, ss)
    bb2, jb2, _ = descend_label(x, y, bb, jb, cos_r, sin_r, ts, fs, ss)
    if _same(ba2, ja2, bb2, jb2):
        return np.nan, ba2, ja2, bb2, jb2
    _, ea = refine(x, y, ba2, ja2, cos_r, sin_r, ts, fs, ss, coeffs, exps, nterms, rtol)
    _, eb = refine(x, y, bb2, jb2, cos_r, sin_r, ts, fs, ss, coeffs, exps, nterms, rtol)
    return ea - eb, ba2, ja2, bb2, jb2


@njit(cache=True)
def bisect_edges(pi, qi, px, py, foot_b, foot_j, cos_r, sin_r, ts, fs, ss,
                 coeffs, exps, nterms, rtol):
    """Locate the tie point of the two feet along each crossing edge.

    phi(s) = E_A - E_B changes sign between the endpoints, A being the foot
    basin of p and B that of q.  Illinois regula falsi with a bisection
    fallback, run until the bracket cannot shrink in floating point.
    """
    m = pi.size
    ox = np.empty(m)
    oy = np.empty(m)
    ok = np.zeros(m, np.bool_)
    for k in range(m):
        p = pi[k]
        q = qi[k]
        x0, y0 = px[p], py[p]
        dx, dy = px[q] - x0, py[q] - y0
        ba, ja = foot_b[p], foot_j[p]
        bb, jb = foot_b[q], foot_j[q]
        f_lo, ba_lo, ja_lo, bb_lo, jb_lo = _phi(x0, y0, ba, ja, bb, jb, cos_r, sin_r, ts, fs, ss,
                                                coeffs, exps, nterms, rtol)
        f_hi, ba_hi, ja_hi, bb_hi, jb_hi = _phi(x0 + dx, y0 + dy, ba, ja, bb, jb, cos_r, sin_r,
                                                ts, fs, ss, coeffs, exps, nterms, rtol)
        if not (f_lo <= 0.0 and f_hi >= 0.0):
            continue
        # bracket kept in coordinates, so the tie lands to the coordinates' own ulp
        xl, yl, xh, yh = x0, y0, x0 + dx, y0 + dy
        side = 0
        best_lo = -f_lo <= f_hi
        good = True
        for it in range(200):
            if f_lo == 0.0:
                best_lo = True
                break
            if f_hi == 0.0:
                best_lo = False
                break
            w = 0.5 if it % 3 == 2 else f_lo / (f_lo - f_hi)
            if not (0.0 < w < 1.0):
                w = 0.5
            x = xl + w * (xh - xl)
            y = yl + w * (yh - yl)
            if (x == xl and y == yl) or (x == xh and y == yh):
                x = xl + 0.5 * (xh - xl)
                y = yl + 0.5 * (yh - yl)
                if (x == xl and y == yl) or (x == xh and y == yh):
                    best_lo = -f_lo <= f_hi
                    break
            f, ba2, ja2, bb2, jb2 = _phi(x, y, ba_lo, ja_lo, bb_lo, jb_lo,
                                         cos_r, sin_r, ts, fs, ss, coeffs, exps, nterms, rtol)
            if np.isnan(f):
                good = False
                break
            if f <= 0.0:
                xl, yl, f_lo = x, y, f
                ba_lo, ja_lo, bb_lo, jb_lo = ba2, ja2, bb2, jb2
                if side == -1:
                    f_hi *= 0.5
                side = -1
                best_lo = True
            else:
                xh, yh, f_hi = x, y, f
                if side == 1:
                    f_lo *= 0.5
                side = 1
                best_lo = False
        if good:
            if best_lo:
                ox[k], oy[k] = xl, yl
            else:
                ox[k], oy[k] = xh, yh
            ok[k] = True
    return ox, oy, ok


@njit(cache=True)
def origin_loses(px, py, cos_r, sin_r, ts, fs, ss, coeffs, exps, nterms, rtol):
    """True when some curve point is strictly closer to (px, py) than the origin."""
    radius = math.hypot(px, py)
    for b in range(ts.shape[0]):
        ax, ay = to_canonical(px, py, cos_r[b], sin_r[b])
        jmax = seed_limit(ts[b], radius)
        e_prev = 0.0
        e_cur = seed_e(1, ax, ay, ts[b], fs[b], ss[b])
        for j in range(1, jmax + 1):
            if e_cur < 0.0:
                return True
            e_next = seed_e(j + 1, ax, ay, ts[b], fs[b], ss[b]) if j < jmax else np.inf
            # a seed basin whose sampled floor sits just above 0 may still dip below
            if e_cur <= e_prev and e_cur <= e_next:
                scale = ss[b, j] + 2.0 * radius * math.sqrt(ss[b, j])
                if e_cur <= 1e-2 * scale:
                    _, e = refine(px, py, b, j, cos_r, sin_r, ts, fs, ss, coeffs, exps,
                                  nterms, rtol)
                    if e < 0.0:
                        return True
            e_prev = e_cur
            e_cur = e_next
    return False


@njit(cache=True)
def bisect_origin_edges(pi, qi, px, py, cos_r, sin_r, ts, fs, ss, coeffs, exps, nterms, rtol):
    """Boundary of the set of points whose closest point is the origin.

    Along each edge, bisect the predicate ``origin_loses`` until the bracket
    cannot shrink.  Edges where the predicate agrees at both ends are dropped.
    """
    m = pi.size
    ox = np.empty(m)
    oy = np.empty(m)
    ok = np.zeros(m, np.bool_)
    for k in range(m):
        p = pi[k]
        q = qi[k]
        x0, y0 = px[p], py[p]
        dx, dy = px[q] - x0, py[q] - y0
        l0 = origin_loses(x0, y0, cos_r, sin_r, ts, fs, ss, coeffs, exps, nterms, rtol)
        l1 = origin_loses(x0 + dx, y0 + dy, cos_r, sin_r, ts, fs, ss, coeffs, exps, nterms, rtol)
        if l0 == l1:
            continue
        xl, yl, xh, yh = x0, y0, x0 + dx, y0 + dy
        for _ in range(2200):
            x = xl + 0.5 * (xh - xl)
            y = yl + 0.5 * (yh - yl)
            if (x == xl and y == yl) or (x == xh and y == yh):
                break
            if origin_loses(x, y, cos_r, sin_r, ts, fs, ss, coeffs, exps, nterms, rtol) == l0:
                xl, yl = x, y
            else:
                xh, yh = x, y
        ox[k] = xl + 0.5 * (xh - xl)
        oy[k] = yl + 0.5 * (yh - yl)
        ok[k] = True
    return ox, oy, ok


@njit(cache=True)
def closest_candidates(px, py, active, cos_r, sin_r, ts, fs, ss, eps, coeffs, exps, nterms,
                       basin_rtol, rtol):
    """Refined local minima of the distance that lie near the global minimum.

    Returns arrays (branch, seed index, t, excess) of length ``count``.  A
    discrete basin is kept when its seed distance is within ``basin_rtol``
    (relative) of the best seed distance.
    """
    cap = 256
    cb = np.empty(cap, np.int64)
    cj = np.empty(cap, np.int64)
    ce = np.empty(cap)
    count = 0
    radius = math.hypot(px, py)
    r2 = radius * radius
    nb = ts.shape[0]
    best = np.inf
    for b in range(nb):
        if not active[b]:
            continue
        ax, ay = to_canonical(px, py, cos_r[b], sin_r[b])
        jmax = seed_limit(ts[b], radius)
        e_prev = 0.0
        e_cur = 0.0
        for j in range(0, jmax + 1):
            e_next = seed_e(j + 1, ax, ay, ts[b], fs[b], ss[b]) if j < jmax else np.inf
            if j == 0:
                is_min = e_next >= e_cur
            elif j < jmax:
                is_min = e_cur <= e_prev and e_cur < e_next
            else:
                is_min = e_cur <= e_prev and ts[b, j] >= eps[b]
            if is_min and count < cap:
                cb[count] = b
                cj[count] = j
                ce[count] = e_cur
                count += 1
                if e_cur < best:
                    best = e_cur
            e_prev = e_cur
            e_cur = e_next
    d_best = math.sqrt(max(r2 + best, 0.0))
    out_b = np.empty(count, np.int64)
    out_j = np.empty(count, np.int64)
    out_t = np.empty(count)
    out_e = np.empty(count)
    kept = 0
    for k in range(count):
        d = math.sqrt(max(r2 + ce[k], 0.0))
        if d - d_best > basin_rtol * d_best:
            continue
        t, e = refine(px, py, cb[k], cj[k], cos_r, sin_r, ts, fs, ss, coeffs, exps, nterms, rtol)
        out_b[kept] = cb[k]
        out_j[kept] = cj[k]
        out_t[kept] = t
        out_e[kept] = e
        kept += 1
    return out_b[:kept], out_j[:kept], out_t[:kept], out_e[:kept]
