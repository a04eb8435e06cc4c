"""Slow, obviously-correct reference computations used only by the tests."""

import math

import numpy as np


def naive_unordered_tail_sum(points, exponent, plateau):
    """Sum of r^{-exponent} over unordered pairs with r >= plateau, one row at a time."""
    pts = np.asarray(points, dtype=np.float64)
    partial = []
    for i in range(len(pts) - 1):
        diff = pts[i + 1:] - pts[i]
        r = np.sqrt(np.sum(diff * diff, axis=1))
        r = r[r >= plateau]
        partial.extend((r ** -exponent).tolist())
    return math.fsum(partial)


def naive_pair_energy(d, sigma, epsilon, r_eps, points):
    """Ordered-pair energy with point mass eps^d omega_d / C^d, written from scratch."""
    omega = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}[d]
    # densest packing fractions from cell geometry: interval, hexagon, fcc cube
    packing = {1: 1.0, 2: math.pi / math.sqrt(12.0), 3: 4 * (4 * math.pi / 3) / (2 * math.sqrt(2)) ** 3}[d]
    w = epsilon ** d * omega / packing
    tail = naive_unordered_tail_sum(points, d + sigma, r_eps or 0.0)
    return -2.0 * w * w * tail


def naive_cell_pair_sum(cells, table, extent, skip_zero=False):
    """sum over ordered cell pairs (a, b) of table[b - a], by explicit double loop over rows."""
    cells = np.asarray(cells, dtype=np.int64)
    centre = np.asarray(extent, dtype=np.int64)
    partial = []
    for a in cells:
        off = cells - a + centre
        vals = table[tuple(off.T)]
        if skip_zero:
            vals = vals[np.any(cells != a, axis=1)]
        partial.extend(vals.tolist())
    return math.fsum(partial)


def interval_pair_integral(L, s):
    """int_0^L int_0^L |x - y|^{-s} dx dy for s < 1."""
    return 2.0 * L ** (2.0 - s) / ((1.0 - s) * (2.0 - s))


def hexagonal_min_distance(points):
    pts = np.asarray(points)
    best = math.inf
    for i in range(len(pts) - 1):
        diff = pts[i + 1:] - pts[i]
        best = min(best, float(np.sqrt(np.min(np.sum(diff * diff, axis=1)))))
    return best
