"""Discrete energies of hard-sphere configurations.

All pair sums run over ordered pairs i != j, so each unordered pair
contributes twice. Each point carries mass epsilon^d * omega_d / C^d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import fft as sfft

from . import _backend
from .core import Configuration, find_hard_sphere_violation, mass_weight, packing_density, unit_ball_volume
from .kernels import FORBIDDEN, ConfinementSpec, KernelSpec, RegimeMismatch, is_forbidden

# Lattice-tagged configurations above this size use the autocorrelation path.
LATTICE_PATH_MIN_POINTS = 20000


@dataclass(frozen=True)
class EnergyBreakdown:
    """Terms of an energy evaluation; ``total`` is FORBIDDEN on a constraint violation."""

    n: int
    pair_sum: float
    renormalization: float
    confinement: float
    total: object

    @property
    def forbidden(self) -> bool:
        return is_forbidden(self.total)

    CSV_HEADER = ("N", "pair_sum", "renormalization", "confinement", "total")

    def csv_row(self) -> tuple:
        total = "forbidden" if self.forbidden else repr(float(self.total))
        return (self.n, repr(self.pair_sum), repr(self.renormalization), repr(self.confinement), total)


# -----------------------------
# Pair sums
# -----------------------------

def _cell_layout(points: np.ndarray, size: float):
    cells = np.floor(points / size).astype(np.int64)
    order = np.lexsort(cells.T[::-1])
    cells = cells[order]
    change = np.any(np.diff(cells, axis=0) != 0, axis=1)
    starts = np.concatenate([[0], np.nonzero(change)[0] + 1, [len(points)]]).astype(np.int64)
    coords = np.ascontiguousarray(cells[starts[:-1]])
    return np.ascontiguousarray(points[order]), starts, coords


def cell_size_for(spec: KernelSpec, points: np.ndarray) -> float:
    """Cell side for the block decomposition.

    Regularized regime: max(2 epsilon, r_eps), so blocks lying inside the
    plateau are skipped whole. Integrable regime: about eight points per
    cell, since every pair contributes.
    """
    base = max(2.0 * spec.epsilon, spec.plateau_radius)
    if spec.plateau_radius > 0 or len(points) < 2:
        return base
    extent = float(np.max(np.ptp(points, axis=0))) or base
    return max(base, extent * (8.0 / len(points)) ** (1.0 / points.shape[1]))


def unordered_tail_sum(spec: KernelSpec, points: np.ndarray, n_threads: Optional[int] = None) -> float:
    """Sum of |x_i - x_j|^{-(d+sigma)} over unordered pairs beyond the plateau."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if len(pts) < 2:
        return 0.0
    sorted_pts, starts, coords = _cell_layout(pts, cell_size_for(spec, pts))
    return _backend.pair_sum(sorted_pts, starts, coords, cell_size_for(spec, pts), spec.exponent,
                             spec.plateau_radius, n_threads)


def lattice_tail_sum(spec: KernelSpec, config: Configuration) -> float:
    """Ordered-pair tail sum of a lattice-tagged configuration via occupancy autocorrelation.

    The count of pairs with index difference delta is the autocorrelation of
    the occupancy grid, computed exactly (rounded FFT) in O(M log M) for M
    grid sites. Returns FORBIDDEN-free positive sum; admissibility is the
    caller's job.
    """
    tag = config.lattice
    idx = tag.indices - tag.indices.min(axis=0)
    shape = tuple(int(v) + 1 for v in idx.max(axis=0))
    occ = np.zeros(shape, dtype=np.float64)
    occ[tuple(idx.T)] = 1.0
    full = tuple(2 * n - 1 for n in shape)
    fshape = tuple(sfft.next_fast_len(n, real=True) for n in full)
    spec_occ = sfft.rfftn(occ, fshape)
    corr = sfft.irfftn(spec_occ * np.conj(spec_occ), fshape)
    # corr[k] counts pairs with index difference k (mod fshape); unwrap to [-(n-1), n-1]
    slices = []
    for n, m in zip(shape, fshape):
        slices.append(np.r_[m - (n - 1):m, 0:n])
    counts = np.rint(corr[np.ix_(*slices)])
    del corr, spec_occ
    axes = [np.arange(-(n - 1), n) for n in shape]
    delta = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    vec = delta.reshape(-1, len(shape)) @ tag.basis
    r2 = np.einsum("ij,ij->i", vec, vec).reshape(counts.shape)
    centre = tuple(n - 1 for n in shape)
    counts[centre] = 0.0
    keep = (counts > 0) & (r2 >= spec.plateau_radius ** 2)
    return float(np.sum(counts[keep] * r2[keep] ** (-0.5 * spec.exponent)))


def _pair_energy(spec: KernelSpec, config: Configuration, n_threads=None):
    if config.d != spec.d:
        raise ValueError("configuration and kernel dimensions differ")
    if config.epsilon != spec.epsilon:
        raise ValueError("configuration epsilon differs from the kernel epsilon")
    pts = config.points
    if len(pts) < 2:
        return 0.0
    if find_hard_sphere_violation(pts, spec.epsilon) is not None:
        return FORBIDDEN
    w = mass_weight(spec.d, spec.epsilon)
    if config.lattice is not None and len(pts) >= LATTICE_PATH_MIN_POINTS:
        return -w * w * lattice_tail_sum(spec, config)
    return -2.0 * w * w * unordered_tail_sum(spec, pts, n_threads)


# -----------------------------
# Public energies
# -----------------------------

def energy(spec: KernelSpec, config: Configuration, n_threads: Optional[int] = None):
    """Sum over ordered pairs of f(|x_i - x_j|) times the squared point mass."""
    return _pair_energy(spec, config, n_threads)


def _confinement_term(g: Optional[ConfinementSpec], config: Configuration) -> float:
    if g is None or len(config) == 0:
        return 0.0
    w = mass_weight(config.d, config.epsilon)
    return w * math.fsum(g(config.points).tolist())


def energy_breakdown(spec: KernelSpec, config: Configuration, g: Optional[ConfinementSpec] = None,
                     renormalize: bool = False, n_threads: Optional[int] = None) -> EnergyBreakdown:
    pair = _pair_energy(spec, config, n_threads)
    ren = 0.0
    if renormalize:
        if spec.params.integrable:
            raise RegimeMismatch("renormalization applies to the regularized regime")
        ren = spec.gamma() * mass_weight(spec.d, spec.epsilon) * len(config)
    conf = _confinement_term(g, config)
    if is_forbidden(pair):
        return EnergyBreakdown(len(config), math.nan, ren, conf, FORBIDDEN)
    return EnergyBreakdown(len(config), pair, ren, conf, pair - ren + conf)


def energy_renormalized(spec: KernelSpec, config: Configuration, n_threads: Optional[int] = None):
    """energy - gamma_{r_eps}^sigma * (point mass) * N; regularized regime only."""
    return energy_breakdown(spec, config, renormalize=True, n_threads=n_threads).total


def energy_confined(spec: KernelSpec, g: Optional[ConfinementSpec], config: Configuration,
                    n_threads: Optional[int] = None):
    """energy + sum_i g(x_i) * (point mass); integrable regime only."""
    if not spec.params.integrable:
        raise RegimeMismatch("confined energies are defined for sigma < 0")
    return energy_breakdown(spec, config, g=g, n_threads=n_threads).total


def confinement_lower_bound_constant(d: int, sigma: float) -> float:
    """Constant c with sum_i w |x_i|^{-sigma} >= c * (epsilon^d omega_d N)^{(d - sigma)/d}.

    Valid for sigma < 0 whenever every |x_i| >= epsilon: then
    |x_i| >= |y|/2 on B_epsilon(x_i), and the disjoint balls have at least
    the moment of the centred ball of equal volume.
    """
    om = unit_ball_volume(d)
    return d * om ** (sigma / d) / ((d - sigma) * 2.0 ** (-sigma) * packing_density(d))
