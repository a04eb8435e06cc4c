# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: cell-block pair sums, hard-sphere scan, annealing moves.

Signatures match ``hsriesz._fallback``.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sqrt, pow, exp, fabs, floor

cnp.import_array()

ctypedef cnp.int64_t i64


cdef inline double tail(double r2, double s) noexcept nogil:
    # |z|^{-s} from the squared distance
    if s == 1.0:
        return 1.0 / sqrt(r2)
    if s == 2.0:
        return 1.0 / r2
    if s == 3.0:
        return 1.0 / (r2 * sqrt(r2))
    return pow(r2, -0.5 * s)


cdef inline void neumaier_add(double* acc, double* comp, double v) noexcept nogil:
    cdef double t = acc[0] + v
    if fabs(acc[0]) >= fabs(v):
        comp[0] += (acc[0] - t) + v
    else:
        comp[0] += (v - t) + acc[0]
    acc[0] = t


cdef double cell_row(const double[:, ::1] pts, const i64[::1] start, const i64[:, ::1] coord,
                     Py_ssize_t a, double size, double s, double rz2) noexcept nogil:
    cdef Py_ssize_t n_cells = start.shape[0] - 1
    cdef Py_ssize_t d = pts.shape[1]
    cdef Py_ssize_t b, i, j, k, j0
    cdef double acc = 0.0, comp = 0.0, r2, diff, gmin, gmax, gap
    cdef i64 dc
    cdef bint check
    for b in range(a, n_cells):
        # squared min/max distance between the two cell boxes
        gmin = 0.0
        gmax = 0.0
        for k in range(d):
            dc = coord[a, k] - coord[b, k]
            if dc < 0:
                dc = -dc
            if dc > 0:
                gap = (dc - 1) * size
                gmin += gap * gap
            gap = (dc + 1) * size
            gmax += gap * gap
        if gmax < rz2:
            continue
        check = gmin < rz2
        for i in range(start[a], start[a + 1]):
            j0 = i + 1 if b == a else start[b]
            for j in range(j0, start[b + 1]):
                r2 = 0.0
                for k in range(d):
                    diff = pts[i, k] - pts[j, k]
                    r2 += diff * diff
                if check and r2 < rz2:
                    continue
                neumaier_add(&acc, &comp, tail(r2, s))
    return acc + comp


def pair_sum(const double[:, ::1] points, const i64[::1] cell_start, const i64[:, ::1] cell_coord,
             double cell_size, double s, double r_zero, int n_threads=1):
    """Sum of r^{-s} over unordered pairs with r >= r_zero.

    One partial per cell row, reduced in cell order, so the result does not
    depend on ``n_threads``.
    """
    cdef Py_ssize_t n_cells = cell_start.shape[0] - 1
    cdef Py_ssize_t a
    cdef double rz2 = r_zero * r_zero
    partial_arr = np.zeros(max(n_cells, 1), dtype=np.float64)
    cdef double[::1] partial = partial_arr
    if n_threads < 1:
        n_threads = 1
    for a in prange(n_cells, nogil=True, schedule="dynamic", num_threads=n_threads):
        partial[a] = cell_row(points, cell_start, cell_coord, a, cell_size, s, rz2)
    cdef double acc = 0.0, comp = 0.0
    for a in range(n_cells):
        neumaier_add(&acc, &comp, partial[a])
    return acc + comp


def first_violation(const double[:, ::1] points, double dmin):
    """Lexicographically smallest (i, j), i < j, with |x_i - x_j| < dmin, or None."""
    cdef Py_ssize_t n = points.shape[0], d = points.shape[1]
    if n < 2:
        return None
    pts = np.asarray(points)
    cells = np.floor(pts / dmin).astype(np.int64)
    lo = cells.min(axis=0) - 1
    cells -= lo
    dims = cells.max(axis=0) + 2
    strides_arr = np.cumprod(np.concatenate([[1], dims[::-1][:-1]]))[::-1].astype(np.int64)
    keys_arr = (cells @ strides_arr).astype(np.int64)
    order_arr = np.argsort(keys_arr, kind="stable").astype(np.int64)
    uniq_arr, starts_arr = np.unique(keys_arr[order_arr], return_index=True)
    ends_arr = np.append(starts_arr[1:], n).astype(np.int64)
    starts_arr = starts_arr.astype(np.int64)
    uniq_arr = uniq_arr.astype(np.int64)
    offs = np.array(np.meshgrid(*([[-1, 0, 1]] * d), indexing="ij")).reshape(d, -1).T
    off_keys_arr = (offs @ strides_arr).astype(np.int64)

    cdef i64[::1] keys = keys_arr, order = order_arr, uniq = uniq_arr
    cdef i64[::1] starts = starts_arr, ends = ends_arr, off_keys = off_keys_arr
    cdef Py_ssize_t n_uniq = uniq.shape[0], n_off = off_keys.shape[0]
    cdef Py_ssize_t i, o, lo_i, hi_i, mid, p, j, k, best
    cdef i64 key
    cdef double r2, diff, dmin2 = dmin * dmin
    for i in range(n):
        best = n
        for o in range(n_off):
            key = keys[i] + off_keys[o]
            lo_i = 0
            hi_i = n_uniq
            while lo_i < hi_i:
                mid = (lo_i + hi_i) >> 1
                if uniq[mid] < key:
                    lo_i = mid + 1
                else:
                    hi_i = mid
            if lo_i == n_uniq or uniq[lo_i] != key:
                continue
            for p in range(starts[lo_i], ends[lo_i]):
                j = order[p]
                if j <= i or j >= best:
                    continue
                r2 = 0.0
                for k in range(d):
                    diff = points[i, k] - points[j, k]
                    r2 += diff * diff
                if r2 < dmin2:
                    best = j
        if best < n:
            return int(i), int(best)
    return None


def anneal_epoch(double[:, ::1] x, const i64[::1] who, const double[:, ::1] step,
                 const cnp.uint8_t[::1] teleport, const i64[::1] partner,
                 const double[:, ::1] direction, const double[::1] uniform, double temperature,
                 double two_eps, double s, double r_zero, double pair_scale, double mass_weight,
                 int g_mode, double c1, double c2, double g_power,
                 double energy, double best_energy, double[:, ::1] best_x, g_func=None):
    """Run one epoch of single-particle Metropolis moves in place.

    Returns ``(energy, best_energy, accepted)``. Custom ``g_func`` profiles
    are not supported here; the backend routes them to the fallback.
    """
    if g_func is not None:
        raise ValueError("custom confinement profiles run on the fallback backend")
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], n_moves = who.shape[0]
    cdef Py_ssize_t m, k, j, c
    cdef double dmin2 = (two_eps * (1.0 - 1e-12)) ** 2
    cdef double rz2 = r_zero * r_zero
    cdef double tele_r = two_eps * (1.0 + 1e-9)
    cdef double y[3]
    cdef double r2n, r2o, dn, do_, fsum, delta, gy, gx, ny, nx
    cdef bint ok
    cdef long accepted = 0
    for m in range(n_moves):
        k = who[m]
        for c in range(d):
            if teleport[m]:
                y[c] = x[partner[m], c] + tele_r * direction[m, c]
            else:
                y[c] = x[k, c] + step[m, c]
        ok = True
        fsum = 0.0
        for j in range(n):
            if j == k:
                continue
            r2n = 0.0
            r2o = 0.0
            for c in range(d):
                dn = x[j, c] - y[c]
                do_ = x[j, c] - x[k, c]
                r2n += dn * dn
                r2o += do_ * do_
            if r2n < dmin2:
                ok = False
                break
            if r2n >= rz2:
                fsum += tail(r2n, s)
            if r2o >= rz2:
                fsum -= tail(r2o if r2o > dmin2 else dmin2, s)
        if not ok:
            continue
        delta = -pair_scale * fsum
        if g_mode != 0:
            ny = 0.0
            nx = 0.0
            for c in range(d):
                ny += y[c] * y[c]
                nx += x[k, c] * x[k, c]
            gy = c1 + c2 * pow(sqrt(ny), g_power)
            gx = c1 + c2 * pow(sqrt(nx), g_power)
            delta += mass_weight * (gy - gx)
        if delta > 0.0 and not (uniform[m] < exp(-delta / temperature)):
            continue
        for c in range(d):
            x[k, c] = y[c]
        energy += delta
        accepted += 1
        if energy < best_energy:
            best_energy = energy
            for j in range(n):
                for c in range(d):
                    best_x[j, c] = x[j, c]
    return energy, best_energy, accepted
