# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels.

Mirror of pyfallback.py; every output element must be produced by the same
sequence of IEEE double operations so results are bit-identical to the numpy
fallback (the extension is compiled with FP contraction disabled).
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, fabs, floor, sqrt

cnp.import_array()


def conv3x3_acc(double[:, :, ::1] out, double[:, :, ::1] padded,
                double[:, :, :, ::1] weights):
    cdef Py_ssize_t co = out.shape[0], h = out.shape[1], w = out.shape[2]
    cdef Py_ssize_t ci = padded.shape[0]
    cdef Py_ssize_t dy, dx, c, o, y, x
    cdef double wv
    for dy in range(3):
        for dx in range(3):
            for c in range(ci):
                for o in range(co):
                    wv = weights[o, c, dy, dx]
                    for y in range(h):
                        for x in range(w):
                            out[o, y, x] += wv * padded[c, y + dy, x + dx]


cdef inline bint _topleft(double ex, double ey) nogil:
    return (ey < 0.0) or (ey == 0.0 and ex > 0.0)


cdef inline double _edge(double ax, double ay, double bx, double by,
                         double px, double py) nogil:
    # canonical vertex order keeps shared edges watertight under rounding
    if (bx < ax) or (bx == ax and by < ay):
        return -((ax - bx) * (py - by) - (ay - by) * (px - bx))
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


def raster_tris(double[:, :, ::1] xy, double[:, ::1] z, int width, int height,
                double znear, double zfar,
                double[:, ::1] depth, int[:, ::1] tri,
                double[:, ::1] b0, double[:, ::1] b1, double[:, ::1] b2):
    cdef Py_ssize_t t, ix, iy
    cdef double x0, y0, x1, y1, x2, y2, z0, z1, z2, area2
    cdef double px, py, e0, e1, e2, w0, w1, w2, dep, tmp
    cdef bint flipped, ok0, ok1, ok2
    cdef long lo_x, hi_x, lo_y, hi_y
    cdef double mn, mx
    for t in range(xy.shape[0]):
        x0 = xy[t, 0, 0]; y0 = xy[t, 0, 1]
        x1 = xy[t, 1, 0]; y1 = xy[t, 1, 1]
        x2 = xy[t, 2, 0]; y2 = xy[t, 2, 1]
        z0 = z[t, 0]; z1 = z[t, 1]; z2 = z[t, 2]
        area2 = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area2 == 0.0:
            continue
        flipped = area2 < 0.0
        if flipped:
            tmp = x1; x1 = x2; x2 = tmp
            tmp = y1; y1 = y2; y2 = tmp
            tmp = z1; z1 = z2; z2 = tmp
            area2 = -area2
        mn = x0
        if x1 < mn: mn = x1
        if x2 < mn: mn = x2
        mx = x0
        if x1 > mx: mx = x1
        if x2 > mx: mx = x2
        lo_x = <long>ceil(mn - 0.5)
        hi_x = <long>floor(mx - 0.5)
        if lo_x < 0: lo_x = 0
        if hi_x > width - 1: hi_x = width - 1
        mn = y0
        if y1 < mn: mn = y1
        if y2 < mn: mn = y2
        mx = y0
        if y1 > mx: mx = y1
        if y2 > mx: mx = y2
        lo_y = <long>ceil(mn - 0.5)
        hi_y = <long>floor(mx - 0.5)
        if lo_y < 0: lo_y = 0
        if hi_y > height - 1: hi_y = height - 1
        if lo_x > hi_x or lo_y > hi_y:
            continue
        for iy in range(lo_y, hi_y + 1):
            py = iy + 0.5
            for ix in range(lo_x, hi_x + 1):
                px = ix + 0.5
                e0 = _edge(x1, y1, x2, y2, px, py)
                ok0 = e0 > 0.0 or (e0 == 0.0 and _topleft(x2 - x1, y2 - y1))
                if not ok0:
                    continue
                e1 = _edge(x2, y2, x0, y0, px, py)
                ok1 = e1 > 0.0 or (e1 == 0.0 and _topleft(x0 - x2, y0 - y2))
                if not ok1:
                    continue
                e2 = _edge(x0, y0, x1, y1, px, py)
                ok2 = e2 > 0.0 or (e2 == 0.0 and _topleft(x1 - x0, y1 - y0))
                if not ok2:
                    continue
                w0 = e0 / area2
                w1 = e1 / area2
                w2 = e2 / area2
                dep = w0 * z0 + w1 * z1 + w2 * z2
                if dep >= znear and dep <= zfar and dep < depth[iy, ix]:
                    depth[iy, ix] = dep
                    tri[iy, ix] = <int>t
                    if flipped:
                        tmp = w1; w1 = w2; w2 = tmp
                    b0[iy, ix] = w0
                    b1[iy, ix] = w1
                    b2[iy, ix] = w2


def reproject_accum(double[:, :, ::1] color, double[:, ::1] vdepth, double far_cut,
                    double eps, double disc_cap,
                    double[::1] px, double[::1] py, double[::1] dep,
                    double[::1] weight,
                    double[:, ::1] accum_color, double[::1] accum_weight,
                    int[::1] obs):
    cdef Py_ssize_t h = vdepth.shape[0], wd = vdepth.shape[1]
    cdef Py_ssize_t n = px.shape[0]
    cdef Py_ssize_t i, tap, ch
    cdef double x, y, fx, fy, d, dmin, dmax, wv
    cdef long x0, y0, x1, y1
    cdef long ty[4]
    cdef long tx[4]
    cdef double tw[4]
    cdef double tdep[4]
    cdef bint cov[4]
    cdef bint any_cov, smooth, accepted
    cdef double best_w, best_d, wcov
    cdef long best_t
    cdef double wsum, csum[3], texel[3]
    for i in range(n):
        if not (weight[i] > 0.0 and px[i] >= 0.5 and px[i] <= wd - 0.5
                and py[i] >= 0.5 and py[i] <= h - 0.5):
            continue
        x = px[i] - 0.5
        y = py[i] - 0.5
        x0 = <long>floor(x)
        y0 = <long>floor(y)
        fx = x - x0
        fy = y - y0
        x1 = x0 + 1
        if x1 > wd - 1: x1 = wd - 1
        y1 = y0 + 1
        if y1 > h - 1: y1 = h - 1
        ty[0] = y0; tx[0] = x0
        ty[1] = y0; tx[1] = x1
        ty[2] = y1; tx[2] = x0
        ty[3] = y1; tx[3] = x1
        tw[0] = (1.0 - fx) * (1.0 - fy)
        tw[1] = fx * (1.0 - fy)
        tw[2] = (1.0 - fx) * fy
        tw[3] = fx * fy
        any_cov = False
        dmin = np.inf
        dmax = -np.inf
        for tap in range(4):
            tdep[tap] = vdepth[ty[tap], tx[tap]]
            cov[tap] = tdep[tap] < far_cut
            if cov[tap]:
                any_cov = True
                if tdep[tap] < dmin: dmin = tdep[tap]
                if tdep[tap] > dmax: dmax = tdep[tap]
        if not any_cov:
            continue
        wsum = 0.0
        csum[0] = 0.0; csum[1] = 0.0; csum[2] = 0.0
        for tap in range(4):
            wcov = tw[tap] if cov[tap] else 0.0
            wsum = wsum + wcov
            for ch in range(3):
                csum[ch] = csum[ch] + wcov * color[ch, ty[tap], tx[tap]]
        d = dep[i]
        smooth = (dmax - dmin) <= disc_cap
        best_w = -1.0
        best_d = 0.0
        best_t = -1
        for tap in range(4):
            wcov = tw[tap] if cov[tap] else -1.0
            if wcov > best_w:
                best_w = wcov
                best_d = tdep[tap]
                best_t = tap
        if smooth:
            accepted = d >= dmin - eps and d <= dmax + eps and wsum > 0.0
        else:
            accepted = fabs(d - best_d) <= eps
        if not accepted:
            continue
        if smooth:
            for ch in range(3):
                texel[ch] = csum[ch] / wsum
        else:
            for ch in range(3):
                texel[ch] = color[ch, ty[best_t], tx[best_t]]
        wv = weight[i]
        for ch in range(3):
            accum_color[i, ch] += wv * texel[ch]
        accum_weight[i] += wv
        obs[i] += 1


def knn_fill(double[:, ::1] targets, double[:, ::1] valid_pos,
             double[:, ::1] valid_color, int k, double cell_size):
    """Grid-accelerated exact kNN; same (distance, index) ordering as the
    brute-force fallback."""
    cdef Py_ssize_t t_count = targets.shape[0]
    cdef Py_ssize_t v_count = valid_pos.shape[0]
    if k > v_count:
        k = <int>v_count
    out_arr = np.empty((t_count, 3), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    if t_count == 0 or v_count == 0:
        return out_arr

    cdef double cell = cell_size if cell_size > 0.0 else 1.0
    cdef double lo0 = valid_pos[0, 0], lo1 = valid_pos[0, 1], lo2 = valid_pos[0, 2]
    cdef double hi0 = lo0, hi1 = lo1, hi2 = lo2
    cdef Py_ssize_t i, j
    for i in range(v_count):
        if valid_pos[i, 0] < lo0: lo0 = valid_pos[i, 0]
        if valid_pos[i, 0] > hi0: hi0 = valid_pos[i, 0]
        if valid_pos[i, 1] < lo1: lo1 = valid_pos[i, 1]
        if valid_pos[i, 1] > hi1: hi1 = valid_pos[i, 1]
        if valid_pos[i, 2] < lo2: lo2 = valid_pos[i, 2]
        if valid_pos[i, 2] > hi2: hi2 = valid_pos[i, 2]
    cdef long nx = <long>floor((hi0 - lo0) / cell) + 1
    cdef long ny = <long>floor((hi1 - lo1) / cell) + 1
    cdef long nz = <long>floor((hi2 - lo2) / cell) + 1
    if nx < 1: nx = 1
    if ny < 1: ny = 1
    if nz < 1: nz = 1

    # bucket valid points into cells (counting sort)
    counts_arr = np.zeros(nx * ny * nz + 1, dtype=np.int64)
    cdef long[::1] counts = counts_arr
    cell_of_arr = np.empty(v_count, dtype=np.int64)
    cdef long[::1] cell_of = cell_of_arr
    cdef long cx, cy, cz, cid
    for i in range(v_count):
        cx = <long>floor((valid_pos[i, 0] - lo0) / cell)
        cy = <long>floor((valid_pos[i, 1] - lo1) / cell)
        cz = <long>floor((valid_pos[i, 2] - lo2) / cell)
        if cx < 0: cx = 0
        if cx > nx - 1: cx = nx - 1
        if cy < 0: cy = 0
        if cy > ny - 1: cy = ny - 1
        if cz < 0: cz = 0
        if cz > nz - 1: cz = nz - 1
        cid = (cx * ny + cy) * nz + cz
        cell_of[i] = cid
        counts[cid + 1] += 1
    for i in range(1, nx * ny * nz + 1):
        counts[i] += counts[i - 1]
    order_arr = np.empty(v_count, dtype=np.int64)
    cdef long[::1] order = order_arr
    fill_arr = counts_arr.copy()
    cdef long[::1] fill = fill_arr
    for i in range(v_count):  # ascending i keeps each bucket index-sorted
        cid = cell_of[i]
        order[fill[cid]] = i
        fill[cid] += 1

    nb_d2_arr = np.empty(k, dtype=np.float64)
    nb_id_arr = np.empty(k, dtype=np.int64)
    cdef double[::1] nb_d2 = nb_d2_arr
    cdef long[::1] nb_id = nb_id_arr
    cdef long have, ring, max_ring, qx, qy, qz, ax, ay, az, bx0, bx1, by0, by1, bz0, bz1
    cdef double tx0, ty0, tz0, dxv, dyv, dzv, d2, rad, wgt, wsum
    cdef double csum0, csum1, csum2
    cdef long vid, pos, ins
    cdef bint on_shell
    max_ring = nx + ny + nz + 2
    for j in range(t_count):
        tx0 = targets[j, 0]
        ty0 = targets[j, 1]
        tz0 = targets[j, 2]
        qx = <long>floor((tx0 - lo0) / cell)
        qy = <long>floor((ty0 - lo1) / cell)
        qz = <long>floor((tz0 - lo2) / cell)
        have = 0
        ring = 0
        while True:
            bx0 = qx - ring
            bx1 = qx + ring
            by0 = qy - ring
            by1 = qy + ring
            bz0 = qz - ring
            bz1 = qz + ring
            for ax in range(bx0, bx1 + 1):
                if ax < 0 or ax >= nx:
                    continue
                for ay in range(by0, by1 + 1):
                    if ay < 0 or ay >= ny:
                        continue
                    for az in range(bz0, bz1 + 1):
                        if az < 0 or az >= nz:
                            continue
                        on_shell = (ax == bx0 or ax == bx1 or ay == by0
                                    or ay == by1 or az == bz0 or az == bz1)
                        if ring > 0 and not on_shell:
                            continue
                        cid = (ax * ny + ay) * nz + az
                        for pos in range(counts[cid], counts[cid + 1]):
                            vid = order[pos]
                            dxv = tx0 - valid_pos[vid, 0]
                            dyv = ty0 - valid_pos[vid, 1]
                            dzv = tz0 - valid_pos[vid, 2]
                            d2 = dxv * dxv + dyv * dyv + dzv * dzv
                            # insertion into the k-best list by (d2, index)
                            if have < k:
                                ins = have
                                while ins > 0 and (nb_d2[ins - 1] > d2 or
                                        (nb_d2[ins - 1] == d2 and nb_id[ins - 1] > vid)):
                                    nb_d2[ins] = nb_d2[ins - 1]
                                    nb_id[ins] = nb_id[ins - 1]
                                    ins -= 1
                                nb_d2[ins] = d2
                                nb_id[ins] = vid
                                have += 1
                            elif (d2 < nb_d2[k - 1] or
                                  (d2 == nb_d2[k - 1] and vid < nb_id[k - 1])):
                                ins = k - 1
                                while ins > 0 and (nb_d2[ins - 1] > d2 or
                                        (nb_d2[ins - 1] == d2 and nb_id[ins - 1] > vid)):
                                    nb_d2[ins] = nb_d2[ins - 1]
                                    nb_id[ins] = nb_id[ins - 1]
                                    ins -= 1
                                nb_d2[ins] = d2
                                nb_id[ins] = vid
            rad = ring * cell
            if have >= k and nb_d2[k - 1] <= rad * rad:
                break
            if ring >= max_ring:
                break
            ring += 1
        wsum = 0.0
        csum0 = 0.0
        csum1 = 0.0
        csum2 = 0.0
        for pos in range(k):
            wgt = 1.0 / (sqrt(nb_d2[pos]) + 1e-6)
            wsum = wsum + wgt
            csum0 = csum0 + wgt * valid_color[nb_id[pos], 0]
            csum1 = csum1 + wgt * valid_color[nb_id[pos], 1]
            csum2 = csum2 + wgt * valid_color[nb_id[pos], 2]
        out[j, 0] = csum0 / wsum
        out[j, 1] = csum1 / wsum
        out[j, 2] = csum2 / wsum
    return out_arr
