"""Optimal lattices, finite-box packing density, lattice recovery configurations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from numpy.typing import NDArray

from .core import (
    Ball,
    Box,
    Configuration,
    DensityField,
    HsRieszError,
    LatticeTag,
    ParameterError,
    PixelSet,
    check_dimension,
    mass_weight,
    packing_density,
    region_bounds,
    region_contains,
    unit_ball_volume,
    validate_configuration,
)

KINDS = {1: "line", 2: "hexagonal", 3: "fcc"}


class BudgetTooSmall(HsRieszError):
    pass


class LevelOutOfRange(ParameterError):
    pass


@dataclass(frozen=True)
class LatticeSpec:
    """Densest lattice in dimension d with nearest-neighbor distance ``spacing``."""

    d: int
    spacing: float
    kind: str = ""

    def __post_init__(self):
        d = check_dimension(self.d)
        object.__setattr__(self, "d", d)
        if not self.spacing > 0:
            raise ParameterError("spacing must be positive")
        kind = self.kind or KINDS[d]
        if kind != KINDS[d]:
            raise ParameterError(f"lattice kind {kind!r} does not exist in d={d}")
        object.__setattr__(self, "kind", kind)

    def basis(self) -> NDArray[np.float64]:
        """Rows are primitive vectors of length ``spacing``."""
        s = self.spacing
        if self.d == 1:
            return np.array([[s]])
        if self.d == 2:
            return np.array([[s, 0.0], [0.5 * s, 0.5 * math.sqrt(3.0) * s]])
        return (s / math.sqrt(2.0)) * np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]])


Region = Union[Box, Ball, PixelSet]


def _lex_order(points: NDArray[np.float64]) -> NDArray[np.int64]:
    return np.lexsort(points.T[::-1])


def lattice_points_with_indices(spec: LatticeSpec, region: Region) -> Tuple[NDArray[np.float64], NDArray[np.int64]]:
    """Lattice points inside ``region`` and their integer coordinates, lexicographic order."""
    basis = spec.basis()
    lo, hi = region_bounds(region)
    inv = np.linalg.inv(basis)
    corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(spec.d, -1).T
    coef = corners @ inv
    nlo = np.floor(coef.min(axis=0)).astype(np.int64) - 1
    nhi = np.ceil(coef.max(axis=0)).astype(np.int64) + 1
    pts_chunks, idx_chunks = [], []
    inner = [np.arange(a, b + 1) for a, b in zip(nlo[1:], nhi[1:])]
    inner_grid = np.array(np.meshgrid(*inner, indexing="ij")).reshape(spec.d - 1, -1).T if spec.d > 1 else None
    # chunk over the first coordinate to bound memory
    for n0 in range(int(nlo[0]), int(nhi[0]) + 1):
        if inner_grid is None:
            idx = np.array([[n0]], dtype=np.int64)
        else:
            idx = np.concatenate([np.full((len(inner_grid), 1), n0), inner_grid], axis=1)
        pts = idx @ basis
        keep = region_contains(region, pts)
        if np.any(keep):
            pts_chunks.append(pts[keep])
            idx_chunks.append(idx[keep])
    if not pts_chunks:
        return np.zeros((0, spec.d)), np.zeros((0, spec.d), dtype=np.int64)
    pts = np.concatenate(pts_chunks)
    idx = np.concatenate(idx_chunks).astype(np.int64)
    order = _lex_order(pts)
    return pts[order], idx[order]


def lattice_points_in(spec: LatticeSpec, region: Region) -> NDArray[np.float64]:
    """All lattice points inside a bounded region, in lexicographic order."""
    return lattice_points_with_indices(spec, region)[0]


# -----------------------------
# Finite-box packing density
# -----------------------------

def _hex_rows(r: float, s: float) -> Tuple[int, float]:
    """Count of a row-offset lattice (x-spacing s, offset s/2) in [0, r)^2."""
    h = math.sqrt(4.0 - 0.25 * s * s)
    rows = math.ceil(r / h)
    even = math.ceil(r / s)
    odd = math.ceil((r - 0.5 * s) / s)
    return (rows + 1) // 2 * even + rows // 2 * odd, h


def _row_lattice(r: float, s: float, h: float, offset: float) -> NDArray[np.float64]:
    pts = []
    k = 0
    while k * h < r:
        x0 = offset if k % 2 else 0.0
        xs = x0 + s * np.arange(math.ceil((r - x0) / s))
        xs = xs[xs < r]
        pts.append(np.column_stack([xs, np.full(len(xs), k * h)]))
        k += 1
    return np.concatenate(pts) if pts else np.zeros((0, 2))


def _best_planar(r: float) -> NDArray[np.float64]:
    """Best sheared-hexagonal row packing of unit-radius disks with centers in [0, r)^2.

    Scans the row spacing: x-spacing s in [2, 2 sqrt 3] with rows offset by
    s/2 and row distance sqrt(4 - s^2/4), plus the square grid. Critical
    values of s where a count changes are included explicitly.
    """
    smax = 2.0 * math.sqrt(3.0)
    cands = set(np.linspace(2.0, smax, 2001).tolist())
    for k in range(1, int(r) + 2):
        for v in (r / k, r / (k + 0.5)):
            if 2.0 <= v <= smax:
                cands.add(v)
                cands.add(np.nextafter(v, np.inf))
        h = r / k
        if 1.0 <= h <= math.sqrt(3.0):
            v = 2.0 * math.sqrt(4.0 - h * h)
            cands.add(v)
            cands.add(np.nextafter(v, -np.inf))
    best = (-1, 0.0)
    for s in sorted(cands):
        if not 2.0 <= s <= smax:
            continue
        count, _ = _hex_rows(r, s)
        if count > best[0]:
            best = (count, s)
    s = best[1]
    options = [_row_lattice(r, s, math.sqrt(4.0 - 0.25 * s * s), 0.5 * s)]
    n = math.ceil(r / 2.0)
    g = 2.0 * np.arange(n)
    options.append(np.array(np.meshgrid(g, g, indexing="ij")).reshape(2, -1).T)
    return max(options, key=len)


def _best_spatial(r: float) -> NDArray[np.float64]:
    """Simple cubic grid or hexagonal layers in ABC stacking, whichever holds more."""
    n = math.ceil(r / 2.0)
    g = 2.0 * np.arange(n)
    options = [np.array(np.meshgrid(g, g, g, indexing="ij")).reshape(3, -1).T]
    lattice = LatticeSpec(3, 2.0)
    for shift in ((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (1.0, 1.0, 0.0), (1.0, 1.0, 1.0)):
        pts = lattice_points_in(lattice, Box(tuple(-np.array(shift)), tuple(r - np.array(shift))))
        options.append(pts + np.array(shift))
    return max(options, key=len)


def _seed_packing(d: int, r: float) -> NDArray[np.float64]:
    if d == 1:
        return 2.0 * np.arange(math.ceil(r / 2.0))[:, None]
    if d == 2:
        return _best_planar(r)
    return _best_spatial(r)


class _Grid:
    """Cell grid for incremental unit-separation checks (distance >= 2)."""

    def __init__(self, d: int):
        self.d = d
        self.cells: dict = {}
        self.offsets = np.array(np.meshgrid(*([[-1, 0, 1]] * d), indexing="ij")).reshape(d, -1).T

    def key(self, p):
        return tuple(np.floor(p / 2.0).astype(np.int64).tolist())

    def add(self, i, p):
        self.cells.setdefault(self.key(p), []).append(i)

    def remove(self, i, p):
        self.cells[self.key(p)].remove(i)

    def free(self, p, pts, skip=-1) -> bool:
        k = np.array(self.key(p))
        for off in self.offsets:
            for j in self.cells.get(tuple((k + off).tolist()), ()):
                if j != skip and np.sum((pts[j] - p) ** 2) < 4.0 * (1.0 - 1e-12) ** 2:
                    return False
        return True


def estimate_box_density(d: int, r: float, anneal_budget: int = 2000, seed: int = 0) -> Tuple[int, float]:
    """Certified lower bound for the finite-box packing density C_r^d.

    Counts unit-radius sphere centers in [0, r)^d at mutual distance >= 2.
    A lattice scan gives the starting packing; randomized insertion with
    shaking moves then tries to add further centers. Returns
    ``(count, count * omega_d / r^d)``.
    """
    d = check_dimension(d)
    if not r > 2.0:
        raise ParameterError("box side must exceed 2")
    base = _seed_packing(d, r)
    if len(base) == 0:
        raise BudgetTooSmall("no admissible configuration found")
    lower = len(base)
    rng = np.random.default_rng(seed)
    pts = [p.astype(np.float64) for p in base]
    grid = _Grid(d)
    for i, p in enumerate(pts):
        grid.add(i, p)
    for _ in range(int(anneal_budget)):
        if rng.random() < 0.5:
            q = rng.random(d) * r
            if grid.free(q, pts):
                grid.add(len(pts), q)
                pts.append(q)
        else:
            i = int(rng.integers(len(pts)))
            q = pts[i] + rng.normal(scale=0.25, size=d)
            if np.all(q >= 0.0) and np.all(q < r) and grid.free(q, pts, skip=i):
                grid.remove(i, pts[i])
                pts[i] = q
                grid.add(i, q)
    final = validate_configuration(np.array(pts), 1.0, d)
    count = len(final)
    assert count >= lower
    return count, count * unit_ball_volume(d) / r ** d


# -----------------------------
# Recovery configurations
# -----------------------------

@dataclass(frozen=True)
class UniformDensity:
    """The density level * indicator(region)."""

    level: float
    region: Region

    @property
    def d(self) -> int:
        return self.region.d


def _level_and_region(rho) -> Tuple[float, Region]:
    if isinstance(rho, UniformDensity):
        return float(rho.level), rho.region
    if isinstance(rho, DensityField):
        levels = np.unique(rho.values[rho.values > 0])
        if len(levels) == 0:
            raise LevelOutOfRange("density has no positive level")
        if len(levels) > 1:
            raise ParameterError("recovery needs a single-level density a * indicator(A)")
        return float(levels[0]), PixelSet(rho.h, rho.origin, rho.values > 0)
    raise TypeError(f"unsupported density {type(rho).__name__}")


def recovery_configuration(rho, epsilon: float) -> Configuration:
    """Points of the dilated lattice epsilon * a^{-1/d} * T^d inside A.

    ``rho`` is a single-level :class:`DensityField` or a
    :class:`UniformDensity`. T^d has unit-ball packing spacing 2, so the
    output spacing is 2 * epsilon * a^{-1/d} >= 2 * epsilon.
    """
    level, region = _level_and_region(rho)
    if not 0.0 < level <= 1.0:
        raise LevelOutOfRange(f"level must lie in (0, 1], got {level!r}")
    d = region.d
    spec = LatticeSpec(d, 2.0 * epsilon * level ** (-1.0 / d))
    pts, idx = lattice_points_with_indices(spec, region)
    return validate_configuration(pts, epsilon, d, lattice=LatticeTag(spec.basis(), idx))


def scaled_mass(config: Configuration) -> float:
    return len(config) * mass_weight(config.d, config.epsilon)


def box_density_envelope(d: int, r: float, density: float) -> float:
    """(density - C^d) * r, the quantity bounded uniformly in r."""
    return (density - packing_density(d)) * r
