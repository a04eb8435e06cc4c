"""Pure numpy implementations of the hot loops.

Each function mirrors one routine of the compiled ``_kernels`` extension with
the same signature and the same arithmetic order where it matters (the
annealer consumes identical random streams). Selected at import time by
``_backend`` when the extension is unavailable.
"""

from __future__ import annotations

import math
from itertools import product

import numpy as np


def _tail(r2: np.ndarray, s: float) -> np.ndarray:
    # |z|^{-s} from squared distances
    if s == 1.0:
        return 1.0 / np.sqrt(r2)
    if s == 2.0:
        return 1.0 / r2
    return r2 ** (-0.5 * s)


def pair_sum(points, cell_start, cell_coord, cell_size, s, r_zero, n_threads=1):
    """Sum of r^{-s} over unordered pairs with r >= r_zero.

    ``points`` must be sorted so that cell ``a`` owns rows
    ``cell_start[a]:cell_start[a+1]``. Returns the positive sum; the caller
    applies the sign and the ordered-pair factor.
    """
    del cell_coord, cell_size, n_threads
    pts = np.asarray(points, dtype=np.float64)
    rz2 = r_zero * r_zero
    partials = []
    n_cells = len(cell_start) - 1
    for a in range(n_cells):
        lo, hi = int(cell_start[a]), int(cell_start[a + 1])
        if hi - lo == 0:
            continue
        block = pts[lo:hi]
        rest = pts[lo:]
        diff = block[:, None, :] - rest[None, :, :]
        r2 = np.einsum("ijk,ijk->ij", diff, diff)
        # keep j > i only: column index offset by lo
        cols = np.arange(rest.shape[0])[None, :]
        rows = np.arange(block.shape[0])[:, None]
        keep = (cols > rows) & (r2 >= rz2)
        vals = _tail(r2[keep], s)
        partials.append(float(np.sum(vals)))
    return math.fsum(partials)


def _cell_keys(points, size):
    cells = np.floor(points / size).astype(np.int64)
    lo = cells.min(axis=0) - 1
    cells -= lo
    dims = cells.max(axis=0) + 2
    strides = np.cumprod(np.concatenate([[1], dims[::-1][:-1]]))[::-1]
    return cells, dims, strides


def first_violation(points, dmin):
    """Lexicographically smallest (i, j), i < j, with |x_i - x_j| < dmin, or None."""
    pts = np.asarray(points, dtype=np.float64)
    n, d = pts.shape
    if n < 2:
        return None
    cells, _, strides = _cell_keys(pts, dmin)
    keys = cells @ strides
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    uniq, starts = np.unique(sorted_keys, return_index=True)
    ends = np.append(starts[1:], n)
    dmin2 = dmin * dmin
    best_j = np.full(n, n, dtype=np.int64)
    idx = np.arange(n)
    for off in product((-1, 0, 1), repeat=d):
        nkeys = keys + np.asarray(off, dtype=np.int64) @ strides
        pos = np.searchsorted(uniq, nkeys)
        pos_c = np.minimum(pos, len(uniq) - 1)
        hit = uniq[pos_c] == nkeys
        lo = np.where(hit, starts[pos_c], 0)
        cnt = np.where(hit, ends[pos_c] - starts[pos_c], 0)
        width = int(cnt.max()) if n else 0
        if width == 0:
            continue
        slots = lo[:, None] + np.arange(width)[None, :]
        valid = np.arange(width)[None, :] < cnt[:, None]
        cand = order[np.where(valid, slots, 0)]
        diff = pts[cand] - pts[:, None, :]
        r2 = np.einsum("ijk,ijk->ij", diff, diff)
        bad = valid & (cand > idx[:, None]) & (r2 < dmin2)
        cand_j = np.where(bad, cand, n).min(axis=1)
        best_j = np.minimum(best_j, cand_j)
    hits = np.nonzero(best_j < n)[0]
    if hits.size == 0:
        return None
    i = int(hits[0])
    return i, int(best_j[i])


def anneal_epoch(x, who, step, teleport, partner, direction, uniform, temperature,
                 two_eps, s, r_zero, pair_scale, mass_weight, g_mode, c1, c2, g_power,
                 energy, best_energy, best_x, g_func=None):
    """Run one epoch of single-particle Metropolis moves in place.

    ``x`` and ``best_x`` are updated in place. Returns
    ``(energy, best_energy, accepted)``. ``pair_scale`` multiplies the change
    in the unordered pair sum (it already includes the ordered-pair factor
    and the squared mass weight). ``g_func`` overrides the radial power
    profile when given.
    """
    n = x.shape[0]
    dmin2 = (two_eps * (1.0 - 1e-12)) ** 2
    rz2 = r_zero * r_zero
    tele_r = two_eps * (1.0 + 1e-9)
    accepted = 0

    def g_of(p):
        if g_func is not None:
            return float(g_func(p[None, :])[0])
        if g_mode == 0:
            return 0.0
        return c1 + c2 * math.sqrt(float(p @ p)) ** g_power

    mask = np.ones(n, dtype=bool)
    for m in range(len(who)):
        k = int(who[m])
        if teleport[m]:
            y = x[int(partner[m])] + tele_r * direction[m]
        else:
            y = x[k] + step[m]
        mask[k] = False
        others = x[mask]
        mask[k] = True
        dn = others - y
        r2n = np.einsum("ij,ij->i", dn, dn)
        if n > 1 and r2n.min() < dmin2:
            continue
        do = others - x[k]
        r2o = np.einsum("ij,ij->i", do, do)
        fn = np.where(r2n >= rz2, _tail(np.maximum(r2n, dmin2), s), 0.0)
        fo = np.where(r2o >= rz2, _tail(np.maximum(r2o, dmin2), s), 0.0)
        delta = -pair_scale * float(np.sum(fn - fo))
        if g_mode != 0 or g_func is not None:
            delta += mass_weight * (g_of(y) - g_of(x[k]))
        if delta > 0.0 and not (uniform[m] < math.exp(-delta / temperature)):
            continue
        x[k] = y
        energy += delta
        accepted += 1
        if energy < best_energy:
            best_energy = energy
            best_x[:] = x
    return energy, best_energy, accepted
