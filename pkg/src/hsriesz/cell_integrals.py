"""Exact integrals of |x - y|^{-s} over pairs of grid cells.

For unit cells a and b = a + delta,

    int_a int_b |x - y|^{-s} dx dy = int |z|^{-s} T(z - delta) dz,

where T(u) = prod_i (1 - |u_i|)_+ is the autocorrelation of the unit cube.
The support delta + [-1, 1]^d splits into 2^d unit boxes on which T is
multilinear, so every table entry is a sum of box moments

    M_c(e) = int_{[0,1]^d} |c + x|^{-s} prod_i phi_{e_i}(x_i) dx,
    phi_0(x) = 1 - x,  phi_1(x) = x,

with K(delta) = sum_e M_{delta - e}(e). Boxes with the origin as a corner
are done in pyramid (Duffy) coordinates with the radial integral in closed
form; boxes away from the origin use tensor Gauss-Legendre rules whose order
shrinks with distance; boxes cut by a truncation sphere |z| = R use nested
rules split at the sphere's breakpoints. A cell of side h scales the
integral by h^{2d - s}.
"""

from __future__ import annotations

import math
import threading
from functools import lru_cache
from itertools import combinations, product
from typing import Dict, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

# Gauss-Legendre order by distance of a box from the origin (in cells).
ORDER_BY_DISTANCE = ((2.0, 14), (4.0, 9), (10.0, 6), (30.0, 4), (math.inf, 3))
CROSSING_ORDER = 16
PYRAMID_ORDER = 24


@lru_cache(maxsize=None)
def gauss01(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def smoothstep01(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss rule composed with t = 3u^2 - 2u^3; absorbs sqrt endpoint behaviour."""
    u, w = gauss01(n)
    t = u * u * (3.0 - 2.0 * u)
    wt = w * 6.0 * u * (1.0 - u)
    t.setflags(write=False)
    wt.setflags(write=False)
    return t, wt


def patterns(d: int):
    return list(product((0, 1), repeat=d))


def _tent_weights(x: np.ndarray, d: int) -> np.ndarray:
    """prod_i phi_{e_i}(x_i) for every pattern e; x has shape (..., d)."""
    out = []
    for e in patterns(d):
        w = np.ones(x.shape[:-1])
        for i, ei in enumerate(e):
            w = w * (x[..., i] if ei else 1.0 - x[..., i])
        out.append(w)
    return np.stack(out, axis=-1)


# -----------------------------
# Pyramid (Duffy) moments of the corner box
# -----------------------------

@lru_cache(maxsize=None)
def monomial_moment(d: int, s: float, S: frozenset) -> float:
    """int_{[0,1]^d} |y|^{-s} prod_{i in S} y_i dy, for d - s + |S| > 0.

    In the pyramid where y_m is largest, y = t (e_m + v) with v in
    [0,1]^{d-1}; the t-integral is 1/(d - s + |S|) and the v-integral is
    smooth.
    """
    p = d - s + len(S)
    if p <= 0:
        return math.inf
    if d == 1:
        return 1.0 / p
    x, w = gauss01(PYRAMID_ORDER)
    grids = np.meshgrid(*([x] * (d - 1)), indexing="ij")
    wts = np.ones_like(grids[0])
    for g in np.meshgrid(*([w] * (d - 1)), indexing="ij"):
        wts = wts * g
    base = (1.0 + sum(g * g for g in grids)) ** (-0.5 * s)
    total = 0.0
    for m in range(d):
        others = [i for i in range(d) if i != m]
        f = base.copy()
        for k, i in enumerate(others):
            if i in S:
                f = f * grids[k]
        total += float(np.sum(f * wts))
    return total / p


def corner_box_moment(d: int, s: float, e: Tuple[int, ...]) -> float:
    """int_{[0,1]^d} |y|^{-s} prod_{e_i=1} y_i prod_{e_i=0} (1 - y_i) dy."""
    ones = frozenset(i for i, v in enumerate(e) if v)
    zeros = [i for i, v in enumerate(e) if not v]
    total = 0.0
    for k in range(len(zeros) + 1):
        for T in _subsets(zeros, k):
            total += (-1) ** k * monomial_moment(d, s, ones | frozenset(T))
    return total


def _subsets(items, k):
    return combinations(items, k)


def _pyramid_face_integral(d: int, func) -> float:
    """sum over the 2d faces of int_{[-1,1]^{d-1}} func(1 + |u|^2) du."""
    if d == 1:
        return 2.0 * func(1.0)
    x, w = gauss01(PYRAMID_ORDER)
    grids = np.meshgrid(*([x] * (d - 1)), indexing="ij")
    wts = np.ones_like(grids[0])
    for g in np.meshgrid(*([w] * (d - 1)), indexing="ij"):
        wts = wts * g
    q = 1.0 + sum(g * g for g in grids)
    # [0,1]^{d-1} covers one of 2^{d-1} symmetric copies of [-1,1]^{d-1}
    return 2 * d * 2 ** (d - 1) * float(np.sum(func(q) * wts))


@lru_cache(maxsize=None)
def cube_self_perimeter(d: int, sigma: float) -> float:
    """int_Q int_{R^d \\ Q} |x - y|^{-(d + sigma)} for the unit cube Q, sigma in (0, 1).

    Equals int |z|^{-s} (1 - T(z)) dz: the part inside [-1,1]^d through
    corner-box monomials, the part outside in closed radial form.
    """
    s = d + sigma
    inner = 0.0
    for k in range(1, d + 1):
        for S in _subsets(range(d), k):
            inner -= (-1) ** k * monomial_moment(d, s, frozenset(S))
    inner *= 2 ** d
    outer = _pyramid_face_integral(d, lambda q: q ** (-0.5 * s)) / sigma
    return inner + outer


@lru_cache(maxsize=None)
def cube_log_constant(d: int) -> float:
    """int |z|^{-d} (1[|z| < 1] - T(z)) dz for the unit cube autocorrelation T.

    The per-cell constant of the 0-fractional perimeter.
    """
    inner = 0.0
    for k in range(1, d + 1):
        for S in _subsets(range(d), k):
            inner -= (-1) ** k * monomial_moment(d, float(d), frozenset(S))
    inner *= 2 ** d
    # part of [-1,1]^d outside the unit ball: radial log in pyramid coordinates
    outside = _pyramid_face_integral(d, lambda q: q ** (-0.5 * d) * 0.5 * np.log(q)) if d > 1 else 0.0
    return inner - outside


# -----------------------------
# Gauss rules on boxes
# -----------------------------

def _box_order(min_dist: np.ndarray, near: Tuple[float, int]) -> np.ndarray:
    order = np.empty(min_dist.shape, dtype=np.int64)
    lo = -1.0
    for bound, n in ORDER_BY_DISTANCE:
        order[(min_dist >= lo) & (min_dist < bound)] = n
        lo = bound
    radius, n_near = near
    sel = min_dist < radius
    order[sel] = np.maximum(order[sel], n_near)
    return order


def _gl_box_moments(corners: np.ndarray, s: float, n: int) -> np.ndarray:
    """Box moments by n-point tensor Gauss rules; corners (K, d) -> (K, 2^d)."""
    d = corners.shape[1]
    chunk = max(1, 2_000_000 // n ** d)
    x, w = gauss01(n)
    nodes = np.stack(np.meshgrid(*([x] * d), indexing="ij"), axis=-1).reshape(-1, d)
    wts = np.prod(np.stack(np.meshgrid(*([w] * d), indexing="ij"), axis=-1).reshape(-1, d), axis=1)
    tw = _tent_weights(nodes, d) * wts[:, None]
    out = np.empty((len(corners), 2 ** d))
    for a in range(0, len(corners), chunk):
        c = corners[a:a + chunk].astype(np.float64)
        z = c[:, None, :] + nodes[None, :, :]
        r2 = np.einsum("kpi,kpi->kp", z, z)
        out[a:a + chunk] = (r2 ** (-0.5 * s)) @ tw
    return out


def _interval_outside(a: float, b: float, q: float):
    """Sub-intervals of [a, b] (not straddling 0) where |z| >= q."""
    if q <= 0.0:
        return [(a, b)]
    if a >= 0.0:
        lo = max(a, q)
        return [(lo, b)] if lo < b else []
    hi = min(b, -q)
    return [(a, hi)] if a < hi else []


def _rule_1d_outside(a, b, c, n):
    """Nodes/weights on {z in [a,b]: z^2 >= c}."""
    q = math.sqrt(c) if c > 0 else 0.0
    x, w = gauss01(n)
    zs, ws = [], []
    for lo, hi in _interval_outside(a, b, q):
        zs.append(lo + (hi - lo) * x)
        ws.append((hi - lo) * w)
    if not zs:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(zs), np.concatenate(ws)


def _breakpoints(a, b, c, inner_extremes):
    """Split [a, b] where c - z^2 hits one of the inner squared extremes."""
    pts = {a, b}
    for v in inner_extremes:
        rem = c - v
        if rem > 0:
            r = math.sqrt(rem)
            for p in (r, -r):
                if a < p < b:
                    pts.add(p)
    return sorted(pts)


def _inner_square_extremes(box):
    """Squared-norm values at which the cut through a (d-1)-box changes shape."""
    vals = set()
    ranges = [(min(lo * lo, hi * hi), max(lo * lo, hi * hi)) for lo, hi in box]
    for choice in product(*ranges):
        # every partial sum of corner coordinates, so edge tangencies are included
        for mask in product((0, 1), repeat=len(choice)):
            vals.add(sum(v for v, m in zip(choice, mask) if m))
    return vals


def _rule_outside(box, c, n):
    """Nodes (P, k) and weights (P,) on {z in box: |z|^2 >= c}; box never straddles 0."""
    k = len(box)
    if k == 1:
        z, w = _rule_1d_outside(box[0][0], box[0][1], c, n)
        return z[:, None], w
    a, b = box[0]
    rest = box[1:]
    cuts = _breakpoints(a, b, c, _inner_square_extremes(rest))
    t, wt = smoothstep01(n)
    nodes, weights = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        for z0, w0 in zip(lo + (hi - lo) * t, (hi - lo) * wt):
            sub_z, sub_w = _rule_outside(rest, c - z0 * z0, n)
            if len(sub_w) == 0:
                continue
            nodes.append(np.column_stack([np.full(len(sub_w), z0), sub_z]))
            weights.append(w0 * sub_w)
    if not nodes:
        return np.zeros((0, k)), np.zeros(0)
    return np.concatenate(nodes), np.concatenate(weights)


def _crossing_box_moments(corner: np.ndarray, s: float, R: float, n: int = CROSSING_ORDER) -> np.ndarray:
    """Moments of the box [corner, corner + 1]^d restricted to |z| >= R."""
    d = len(corner)
    box = [(float(c), float(c) + 1.0) for c in corner]
    z, w = _rule_outside(box, R * R, n)
    if len(w) == 0:
        return np.zeros(2 ** d)
    r2 = np.einsum("pi,pi->p", z, z)
    tw = _tent_weights(z - corner[None, :], d)
    return (w * r2 ** (-0.5 * s)) @ tw


# -----------------------------
# Kernel tables
# -----------------------------

def _orthant_table(d: int, s: float, extent: Tuple[int, ...], R: Optional[float],
                   near: Tuple[float, int] = (2.0, 14)) -> np.ndarray:
    """K(delta) for 0 <= delta_i <= extent_i; truncated to |z| >= R when R is given."""
    axes = [np.arange(-1, n + 1) for n in extent]
    corners = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    lo = corners.astype(np.float64)
    hi = lo + 1.0
    closest = np.where(lo > 0, lo, np.where(hi < 0, -hi, 0.0))
    far = np.maximum(np.abs(lo), np.abs(hi))
    min_r2 = np.sum(closest * closest, axis=1)
    max_r2 = np.sum(far * far, axis=1)
    moments = np.zeros((len(corners), 2 ** d))
    corner_box = np.all((corners == 0) | (corners == -1), axis=1)

    if R is None:
        pats = patterns(d)
        for k in np.nonzero(corner_box)[0]:
            c = corners[k]
            for j, e in enumerate(pats):
                ee = tuple(1 - ei if ci == -1 else ei for ei, ci in zip(e, c))
                moments[k, j] = corner_box_moment(d, s, ee) if any(ee) or s < d else math.nan
        regular = ~corner_box
    else:
        if R * R <= d:
            raise ValueError("truncation radius must exceed sqrt(d) cells")
        regular = min_r2 >= R * R
        crossing = (~regular) & (max_r2 > R * R)
        for k in np.nonzero(crossing)[0]:
            moments[k] = _crossing_box_moments(corners[k].astype(np.float64), s, R, max(CROSSING_ORDER, near[1]))

    if np.any(regular):
        idx = np.nonzero(regular)[0]
        order = _box_order(np.sqrt(min_r2[idx]), near)
        for n in np.unique(order):
            sel = idx[order == n]
            moments[sel] = _gl_box_moments(corners[sel], s, int(n))

    shape = tuple(n + 2 for n in extent)
    moments = moments.reshape(shape + (2 ** d,))
    table = np.zeros(tuple(n + 1 for n in extent))
    for j, e in enumerate(patterns(d)):
        # box corner c = delta - e, stored at index c + 1
        sl = tuple(slice(1 - ei, 1 - ei + n + 1) for ei, n in zip(e, extent))
        table = table + moments[sl + (j,)]
    return table


def unfold(orthant: np.ndarray) -> np.ndarray:
    """Extend a table on delta >= 0 to all sign patterns; centre at index extent."""
    out = orthant
    for axis in range(orthant.ndim):
        flipped = np.flip(out, axis=axis)
        body = np.take(flipped, np.arange(out.shape[axis] - 1), axis=axis)
        out = np.concatenate([body, out], axis=axis)
    return out


class _TableCache:
    def __init__(self):
        self._lock = threading.Lock()
        self._store: Dict[tuple, np.ndarray] = {}

    def get(self, d, s, extent, R, near):
        key = (d, float(s), None if R is None else float(R), near)
        with self._lock:
            have = self._store.get(key)
        if have is not None and all(a >= b for a, b in zip(have.shape, (n + 1 for n in extent))):
            return have[tuple(slice(0, n + 1) for n in extent)]
        # grow symmetric so later requests with permuted extents hit the cache
        m = max(extent)
        if have is not None:
            m = max(m, max(have.shape) - 1)
        full = (m,) * d
        table = _orthant_table(d, s, full, R, near)
        table.setflags(write=False)
        with self._lock:
            self._store[key] = table
        return table[tuple(slice(0, n + 1) for n in extent)]

    def clear(self):
        with self._lock:
            self._store.clear()


_CACHE = _TableCache()


def kernel_table(d: int, s: float, extent: Tuple[int, ...], R: Optional[float] = None,
                 near: Tuple[float, int] = (2.0, 14)) -> np.ndarray:
    """Full table K(delta) for |delta_i| <= extent_i; index extent is delta = 0.

    With ``R`` given, only |z| >= R (in cell units) contributes. ``near`` is
    (radius, order): boxes closer than ``radius`` cells to the origin use at
    least ``order`` Gauss points per axis.
    """
    return unfold(_CACHE.get(d, s, tuple(int(n) for n in extent), R, (float(near[0]), int(near[1]))))


def clear_cache() -> None:
    _CACHE.clear()
