"""Pure-numpy implementations of the hot kernels.

The compiled extension (``_ext``) mirrors these functions one-to-one.  Both
sides are written so every output element is produced by the same sequence of
IEEE double operations; the backend-equivalence tests assert bit identity, so
any change here must keep the arithmetic expression order in step with the
Cython source.
"""
from __future__ import annotations

import numpy as np


def conv3x3_acc(out: np.ndarray, padded: np.ndarray, weights: np.ndarray) -> None:
    """Accumulate a 3x3 convolution: out (Co,H,W) += conv(padded (Ci,H+2,W+2)).

    weights has shape (Co, Ci, 3, 3).  Accumulation order per output element is
    (dy, dx) major, input channel minor; one fused multiply-add per term.
    """
    co, h, w = out.shape
    ci = padded.shape[0]
    for dy in range(3):
        for dx in range(3):
            src = padded[:, dy:dy + h, dx:dx + w]
            for c in range(ci):
                out += weights[:, c, dy, dx][:, None, None] * src[c]


def raster_tris(xy: np.ndarray, z: np.ndarray, width: int, height: int,
                znear: float, zfar: float,
                depth: np.ndarray, tri: np.ndarray,
                b0: np.ndarray, b1: np.ndarray, b2: np.ndarray) -> None:
    """Edge-function rasterization with a z-buffer and top-left fill rule.

    xy: (T,3,2) vertex positions in continuous pixel coordinates (pixel center
    at integer + 0.5, y growing downward); z: (T,3) per-vertex depth.  Buffers
    are updated in place; depth test is strict less-than, so with equal depths
    the earlier triangle wins.  Pixels keep the barycentric weights in the
    original vertex order.
    """
    xs = np.arange(width, dtype=np.float64) + 0.5
    ys = np.arange(height, dtype=np.float64) + 0.5
    for t in range(xy.shape[0]):
        x0, y0 = xy[t, 0]
        x1, y1 = xy[t, 1]
        x2, y2 = xy[t, 2]
        z0, z1, z2 = z[t]
        area2 = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area2 == 0.0:
            continue
        flipped = area2 < 0.0
        if flipped:
            x1, y1, x2, y2 = x2, y2, x1, y1
            z1, z2 = z2, z1
            area2 = -area2
        lo_x = max(int(np.ceil(min(x0, x1, x2) - 0.5)), 0)
        hi_x = min(int(np.floor(max(x0, x1, x2) - 0.5)), width - 1)
        lo_y = max(int(np.ceil(min(y0, y1, y2) - 0.5)), 0)
        hi_y = min(int(np.floor(max(y0, y1, y2) - 0.5)), height - 1)
        if lo_x > hi_x or lo_y > hi_y:
            continue
        px = xs[lo_x:hi_x + 1][None, :]
        py = ys[lo_y:hi_y + 1][:, None]
        # edge i is opposite vertex i; E = cross(b - a, p - a), interior E > 0
        e0 = _edge(x1, y1, x2, y2, px, py)
        e1 = _edge(x2, y2, x0, y0, px, py)
        e2 = _edge(x0, y0, x1, y1, px, py)
        ok0 = (e0 > 0.0) | ((e0 == 0.0) & _topleft(x2 - x1, y2 - y1))
        ok1 = (e1 > 0.0) | ((e1 == 0.0) & _topleft(x0 - x2, y0 - y2))
        ok2 = (e2 > 0.0) | ((e2 == 0.0) & _topleft(x1 - x0, y1 - y0))
        inside = ok0 & ok1 & ok2
        if not inside.any():
            continue
        w0 = e0 / area2
        w1 = e1 / area2
        w2 = e2 / area2
        dep = w0 * z0 + w1 * z1 + w2 * z2
        win = depth[lo_y:hi_y + 1, lo_x:hi_x + 1]
        upd = inside & (dep >= znear) & (dep <= zfar) & (dep < win)
        if not upd.any():
            continue
        win[upd] = dep[upd]
        tri[lo_y:hi_y + 1, lo_x:hi_x + 1][upd] = t
        if flipped:
            w1, w2 = w2, w1
        b0[lo_y:hi_y + 1, lo_x:hi_x + 1][upd] = w0[upd]
        b1[lo_y:hi_y + 1, lo_x:hi_x + 1][upd] = w1[upd]
        b2[lo_y:hi_y + 1, lo_x:hi_x + 1][upd] = w2[upd]


def _topleft(ex: float, ey: float) -> bool:
    # Accept a pixel exactly on the edge iff the edge is a left edge (points
    # up in y-down screen coords) or a top edge (horizontal, points right).
    return (ey < 0.0) | ((ey == 0.0) & (ex > 0.0))


def _edge(ax, ay, bx, by, px, py):
    """Edge function cross(b - a, p - a) evaluated in a canonical vertex
    order, so two triangles sharing edge (a,b)/(b,a) see bitwise-negated
    values and the fill rule stays watertight under rounding."""
    if (bx < ax) or (bx == ax and by < ay):
        return -((ax - bx) * (py - by) - (ay - by) * (px - bx))
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


def reproject_accum(color: np.ndarray, vdepth: np.ndarray, far_cut: float,
                    eps: float, disc_cap: float,
                    px: np.ndarray, py: np.ndarray, dep: np.ndarray,
                    weight: np.ndarray,
                    accum_color: np.ndarray, accum_weight: np.ndarray,
                    obs: np.ndarray) -> None:
    """Gather one view's colors into per-texel accumulators.

    color: (3,H,W) view image; vdepth: (H,W) view depth (>= far_cut means
    empty).  px/py/dep/weight are per-texel projected pixel coordinates,
    projected depth, and blend weight (cos^k; zero means pre-rejected).
    Acceptance: all four bilinear taps inside the frame; among covered taps,
    if the tap depth range is <= disc_cap the texel must fall inside
    [min,max] +- eps and the color is the covered-tap bilinear blend;
    across a depth discontinuity only the strongest covered tap is used and
    must match within eps.
    """
    h, wd = vdepth.shape
    n = px.shape[0]
    inside = (weight > 0.0) & (px >= 0.5) & (px <= wd - 0.5) & (py >= 0.5) & (py <= h - 0.5)
    if not inside.any():
        return
    idx = np.nonzero(inside)[0]
    x = px[idx] - 0.5
    y = py[idx] - 0.5
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = x - x0
    fy = y - y0
    x1 = np.minimum(x0 + 1, wd - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    taps_y = (y0, y0, y1, y1)
    taps_x = (x0, x1, x0, x1)
    tw = ((1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy)
    tdep = [vdepth[ty, tx] for ty, tx in zip(taps_y, taps_x)]
    cov = [d < far_cut for d in tdep]
    any_cov = cov[0] | cov[1] | cov[2] | cov[3]
    big = np.float64(np.inf)
    dmin = np.full(idx.shape, big)
    dmax = np.full(idx.shape, -big)
    for d, c in zip(tdep, cov):
        dmin = np.where(c, np.minimum(dmin, d), dmin)
        dmax = np.where(c, np.maximum(dmax, d), dmax)
    # covered-tap bilinear mass; smooth acceptance needs some to blend with
    wsum = np.zeros(idx.shape)
    csum = np.zeros(idx.shape + (3,))
    for i in range(4):
        wgt = np.where(cov[i], tw[i], 0.0)
        wsum = wsum + wgt
        for ch in range(3):
            csum[:, ch] = csum[:, ch] + wgt * color[ch, taps_y[i], taps_x[i]]
    d = dep[idx]
    smooth = (dmax - dmin) <= disc_cap
    ok_smooth = smooth & (d >= dmin - eps) & (d <= dmax + eps) & (wsum > 0.0)
    # discontinuity path: strongest covered tap, strictly-greater to replace
    best_w = np.full(idx.shape, -1.0)
    best_d = np.zeros(idx.shape)
    best_t = np.full(idx.shape, -1, dtype=np.int64)
    for i in range(4):
        wcov = np.where(cov[i], tw[i], -1.0)
        take = wcov > best_w
        best_w = np.where(take, wcov, best_w)
        best_d = np.where(take, tdep[i], best_d)
        best_t = np.where(take, i, best_t)
    ok_disc = ~smooth & (np.abs(d - best_d) <= eps)
    accepted = any_cov & (ok_smooth | ok_disc)
    if not accepted.any():
        return
    # blended color over covered taps (smooth) or single best tap (disc)
    wsum_safe = np.where(wsum > 0.0, wsum, 1.0)
    blend = csum / wsum_safe[:, None]
    single = np.empty(idx.shape + (3,))
    for ch in range(3):
        stack = np.stack([color[ch, ty, tx] for ty, tx in zip(taps_y, taps_x)], axis=1)
        single[:, ch] = stack[np.arange(idx.shape[0]), np.maximum(best_t, 0)]
    texel_color = np.where(smooth[:, None], blend, single)
    sel = idx[accepted]
    wv = weight[sel]
    accum_color[sel] += wv[:, None] * texel_color[accepted]
    accum_weight[sel] += wv
    obs[sel] += 1


def knn_fill(targets: np.ndarray, valid_pos: np.ndarray, valid_color: np.ndarray,
             k: int, cell_size: float) -> np.ndarray:
    """Inverse-distance-weighted average of the k nearest valid texels.

    Exact k-nearest-neighbor with ties broken by lower valid-texel index.
    The fallback uses chunked brute force; cell_size is only consumed by the
    compiled grid kernel and is accepted here for signature parity.
    Returns (T,3) colors.
    """
    t = targets.shape[0]
    v = valid_pos.shape[0]
    k = min(k, v)
    out = np.empty((t, 3))
    chunk = max(1, int(2_000_000 // max(v, 1)))
    for s in range(0, t, chunk):
        e = min(s + chunk, t)
        dx = targets[s:e, 0][:, None] - valid_pos[None, :, 0]
        dy = targets[s:e, 1][:, None] - valid_pos[None, :, 1]
        dz = targets[s:e, 2][:, None] - valid_pos[None, :, 2]
        d2 = dx * dx + dy * dy + dz * dz
        # stable sort = (distance, index) lexicographic order
        nb = np.argsort(d2, axis=1, kind="stable")[:, :k]
        nd = np.sqrt(np.take_along_axis(d2, nb, axis=1))
        wsum = np.zeros(e - s)
        csum = np.zeros((e - s, 3))
        for j in range(k):
            wgt = 1.0 / (nd[:, j] + 1e-6)
            wsum = wsum + wgt
            csum = csum + wgt[:, None] * valid_color[nb[:, j]]
        out[s:e] = csum / wsum[:, None]
    return out
