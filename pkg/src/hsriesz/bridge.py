"""Two-way constructions between scaled empirical measures and pixel sets.

``measure_to_set`` turns a configuration into a set of comparable measure:
space is cut into cubes of side rho = sqrt(epsilon * r_eps), a cube whose
scaled mass reaches rho^d is kept whole, and a lighter cube is replaced by
a concentric cube carrying its mass. ``set_to_measure`` goes back by
filling a set with the scaled optimal lattice.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np

from . import continuum_energy
from .core import (
    Ball,
    Box,
    PixelSet,
    ScaledEmpiricalMeasure,
    packing_density,
    validate_configuration,
    LatticeTag,
)
from .discrete_energy import energy_breakdown
from .kernels import KernelSpec, RegimeMismatch, is_forbidden
from .packing import LatticeSpec, lattice_points_with_indices

# Sub-cells per cube side are chosen so that k^d >= this many sub-cells.
MIN_SUBCELLS = 1000


def _require_regularized(spec: KernelSpec):
    if spec.params.integrable:
        raise RegimeMismatch("the bridge is defined for the regularized regime (sigma in [0, 1))")


def _load_calibration() -> Dict[str, float]:
    parser = configparser.ConfigParser()
    text = resources.files("hsriesz").joinpath("data/bridge_calibration.ini").read_text()
    parser.read_string(text)
    return {k: float(v) for k, v in parser["envelope"].items()}


CALIBRATION = _load_calibration()


@dataclass(frozen=True)
class BridgeReport:
    """Gaps between a measure and its set, with the envelope values they are compared against."""

    epsilon: float
    r_eps: float
    mass_gap: float
    energy_gap: float
    renormalized_gap: float
    bound_mass: float
    bound_energy: float

    def __post_init__(self):
        for name in ("mass_gap", "energy_gap", "renormalized_gap"):
            if not getattr(self, name) >= 0.0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def scale(self) -> float:
        """sqrt(epsilon / r_eps), the rate of every envelope."""
        return math.sqrt(self.epsilon / self.r_eps)

    @property
    def within_envelope(self) -> bool:
        return self.mass_gap <= self.bound_mass and self.energy_gap <= self.bound_energy

    CSV_HEADER = ("epsilon", "r_eps", "mass_gap", "energy_gap", "renormalized_gap",
                  "bound_mass", "bound_energy")

    def csv_row(self) -> tuple:
        return tuple(repr(float(getattr(self, k))) for k in self.CSV_HEADER)


# -----------------------------
# Measure -> set
# -----------------------------

def subgrid_factor(d: int) -> int:
    """Smallest k with k^d >= MIN_SUBCELLS."""
    k = max(1, int(round(MIN_SUBCELLS ** (1.0 / d))))
    while k ** d < MIN_SUBCELLS:
        k += 1
    return k


def _concentric_rank(d: int, k: int) -> np.ndarray:
    """Fill order of the k^d sub-cells of a cube: nested concentric cubes, corners last."""
    axes = [np.arange(k) + 0.5 - 0.5 * k for _ in range(d)]
    c = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    sup = np.max(np.abs(c), axis=1)
    euc = np.sum(c * c, axis=1)
    order = np.lexsort((np.arange(len(c)), euc, sup))
    rank = np.empty(len(c), dtype=np.int64)
    rank[order] = np.arange(len(c))
    return rank


def cube_side(spec: KernelSpec) -> float:
    return math.sqrt(spec.epsilon * spec.tail_start)


def measure_to_set(m: ScaledEmpiricalMeasure, spec: KernelSpec) -> PixelSet:
    """Set E of cubes of side sqrt(epsilon * r_eps) carrying the measure's mass cube by cube.

    A cube with scaled mass >= rho^d is kept whole (equality counts as
    full); a lighter cube becomes a concentric cube of the same volume,
    realised on a sub-grid of k^d >= 1000 cells by filling nested
    sub-cubes and trimming corners. The sub-grid resolution is rho / k.
    """
    _require_regularized(spec)
    d = spec.d
    rho = cube_side(spec)
    k = subgrid_factor(d)
    h = rho / k
    if len(m) == 0:
        return PixelSet.empty(h, d)
    cube_idx = np.floor(m.config.points / rho).astype(np.int64)
    keys, counts = np.unique(cube_idx, axis=0, return_counts=True)
    mass = counts * m.mass_weight
    full_volume = rho ** d
    # number of sub-cells to fill; full cubes take all k^d
    n_fill = np.where(mass >= full_volume, k ** d,
                      np.minimum(np.rint(mass / h ** d), k ** d)).astype(np.int64)
    rank = _concentric_rank(d, k)
    lo = keys.min(axis=0)
    extent = keys.max(axis=0) - lo + 1
    grid = np.zeros(tuple(int(n) * k for n in extent), dtype=bool)
    shape_k = (k,) * d
    for key, n in zip(keys - lo, n_fill):
        block = (rank < n).reshape(shape_k)
        sl = tuple(slice(int(a) * k, int(a) * k + k) for a in key)
        grid[sl] = block
    return PixelSet(h, tuple(int(v) * k for v in lo), grid)


# -----------------------------
# Set -> measure
# -----------------------------

def set_to_measure(E: Union[PixelSet, Ball, Box], spec: KernelSpec) -> ScaledEmpiricalMeasure:
    """Points of the lattice with spacing 2*epsilon inside E, as a scaled measure."""
    _require_regularized(spec)
    d = spec.d
    if isinstance(E, PixelSet) and E.count == 0:
        return ScaledEmpiricalMeasure(validate_configuration(np.zeros((0, d)), spec.epsilon, d))
    lattice = LatticeSpec(d, 2.0 * spec.epsilon)
    pts, idx = lattice_points_with_indices(lattice, E)
    config = validate_configuration(pts, spec.epsilon, d, lattice=LatticeTag(lattice.basis(), idx))
    return ScaledEmpiricalMeasure(config)


# -----------------------------
# Reports
# -----------------------------

def energy_bridge_report(m: ScaledEmpiricalMeasure, spec: KernelSpec, E: Optional[PixelSet] = None,
                         n_threads: Optional[int] = None) -> BridgeReport:
    """Mass and energy gaps between m and measure_to_set(m) (or a supplied E)."""
    _require_regularized(spec)
    if E is None:
        E = measure_to_set(m, spec)
    r = spec.tail_start
    mass = len(m) * m.mass_weight
    br = energy_breakdown(spec, m.config, renormalize=True, n_threads=n_threads)
    if is_forbidden(br.total):
        raise ValueError("measure violates the hard-sphere constraint")
    j = continuum_energy.j_truncated(spec.d, spec.sigma, r, E) if E.count else 0.0
    gamma = spec.gamma()
    j_hat = j - gamma * E.measure
    scale = math.sqrt(spec.epsilon / r)
    return BridgeReport(
        epsilon=spec.epsilon,
        r_eps=r,
        mass_gap=abs(E.measure - mass),
        energy_gap=abs(br.pair_sum - j),
        renormalized_gap=abs(br.total - j_hat),
        bound_mass=CALIBRATION["mass"] * scale,
        bound_energy=CALIBRATION["energy"] * abs(gamma) * scale,
    )


def weak_gap(m: ScaledEmpiricalMeasure, E: PixelSet, test: Callable[[np.ndarray], np.ndarray]) -> float:
    """|<scaled m - indicator(E), test>| with the set integral by cell-centre rule."""
    disc = m.mass_weight * math.fsum(test(m.config.points).tolist()) if len(m) else 0.0
    cont = math.fsum(test(E.cell_centers()).tolist()) * E.h ** E.d if E.count else 0.0
    return abs(disc - cont)


def bump(center, radius: float) -> Callable[[np.ndarray], np.ndarray]:
    """Smooth compactly supported test function exp(-1 / (1 - |x - c|^2 / radius^2))."""
    c = np.asarray(center, dtype=np.float64)

    def phi(x):
        t = np.sum((np.asarray(x) - c) ** 2, axis=-1) / radius ** 2
        out = np.zeros(t.shape)
        inside = t < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - t[inside]))
        return out

    return phi


# -----------------------------
# Smoothed measure
# -----------------------------

@dataclass(frozen=True)
class MeasureGrid:
    """Nonnegative cell values on a uniform grid (no upper bound, unlike DensityField)."""

    h: float
    origin: Tuple[int, ...]
    values: np.ndarray

    @property
    def d(self) -> int:
        return self.values.ndim

    @property
    def mass(self) -> float:
        return float(self.values.sum()) * self.h ** self.d

    def cell_centers(self) -> np.ndarray:
        axes = [(np.arange(n) + o + 0.5) * self.h for n, o in zip(self.values.shape, self.origin)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def smoothed_measure(m: ScaledEmpiricalMeasure, supersample: int = 4, chunk: int = 2048) -> MeasureGrid:
    """(1 / C^d) * sum of indicators of B_epsilon(x_i), rasterized at resolution epsilon / 4.

    Each cell value is the covered fraction estimated on ``supersample``^d
    sub-points, divided by C^d.
    """
    d = m.d
    eps = m.epsilon
    h = 0.25 * eps
    fine = h / supersample
    if len(m) == 0:
        return MeasureGrid(h, (0,) * d, np.zeros((0,) * d))
    pts = m.config.points
    lo = np.floor((pts.min(axis=0) - eps) / h).astype(np.int64) - 1
    hi = np.ceil((pts.max(axis=0) + eps) / h).astype(np.int64) + 1
    shape_fine = tuple(int(n) * supersample for n in hi - lo)
    acc = np.zeros(int(np.prod(shape_fine)), dtype=np.int64)
    reach = int(math.ceil(eps / fine)) + 1
    offs = np.stack(np.meshgrid(*([np.arange(-reach, reach + 1)] * d), indexing="ij"), axis=-1).reshape(-1, d)
    origin_fine = lo * supersample
    strides = np.array([int(np.prod(shape_fine[i + 1:])) for i in range(d)], dtype=np.int64)
    for a in range(0, len(pts), chunk):
        p = pts[a:a + chunk]
        base = np.floor(p / fine).astype(np.int64)
        idx = base[:, None, :] + offs[None, :, :]
        ctr = (idx + 0.5) * fine
        inside = np.sum((ctr - p[:, None, :]) ** 2, axis=-1) < eps * eps
        flat = (idx[inside] - origin_fine) @ strides
        acc += np.bincount(flat, minlength=acc.size)
    grid = acc.reshape(shape_fine).astype(np.float64)
    for axis in range(d):
        shp = grid.shape
        grid = grid.reshape(shp[:axis] + (shp[axis] // supersample, supersample) + shp[axis + 1:]).sum(axis=axis + 1)
    values = grid / (supersample ** d * packing_density(d))
    return MeasureGrid(h, tuple(int(v) for v in lo), values)


def l1_distance(grid: MeasureGrid, E: PixelSet) -> float:
    """L1 distance between a measure grid and the indicator of a set on the same resolution."""
    if abs(grid.h - E.h) > 1e-15 * grid.h:
        raise ValueError("grids must share the resolution")
    cells = E.cell_array()
    lo = np.minimum(np.array(grid.origin), cells.min(axis=0)) if len(cells) else np.array(grid.origin)
    hi_g = np.array(grid.origin) + np.array(grid.values.shape)
    hi = np.maximum(hi_g, cells.max(axis=0) + 1) if len(cells) else hi_g
    diff = np.zeros(tuple(hi - lo))
    sl = tuple(slice(o - a, o - a + n) for o, a, n in zip(grid.origin, lo, grid.values.shape))
    diff[sl] += grid.values
    if len(cells):
        diff[tuple((cells - lo).T)] -= 1.0
    return float(np.abs(diff).sum()) * grid.h ** grid.d
