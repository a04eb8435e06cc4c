"""Domain types shared across the package.

Everything here is immutable after construction: numpy arrays are copied
and flagged read-only, so instances can be handed to worker threads freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import _backend

SUPPORTED_DIMENSIONS = (1, 2, 3)

# Relative slack on the hard-sphere test; absorbs rounding for points
# generated from exact lattices (e.g. 0.2 written as 2 * 0.1).
HARD_SPHERE_RTOL = 1e-12


# -----------------------------
# Errors
# -----------------------------

class HsRieszError(Exception):
    """Base class for all package errors."""


class DimensionError(HsRieszError, ValueError):
    pass


class ParameterError(HsRieszError, ValueError):
    pass


class HardSphereViolation(HsRieszError):
    """Two points closer than twice the sphere radius."""

    def __init__(self, i: int, j: int, distance: float):
        self.i = int(i)
        self.j = int(j)
        self.distance = float(distance)
        super().__init__(f"points {self.i} and {self.j} at distance {self.distance!r} < 2*epsilon")

    def __eq__(self, other):
        if not isinstance(other, HardSphereViolation):
            return NotImplemented
        return (self.i, self.j, self.distance) == (other.i, other.j, other.distance)

    def __hash__(self):
        return hash((self.i, self.j, self.distance))


# -----------------------------
# Constants
# -----------------------------

def check_dimension(d: int) -> int:
    if int(d) != d or int(d) not in SUPPORTED_DIMENSIONS:
        raise DimensionError(f"dimension must be one of {SUPPORTED_DIMENSIONS}, got {d!r}")
    return int(d)


def unit_ball_volume(d: int) -> float:
    """Lebesgue measure of the unit ball in R^d."""
    d = check_dimension(d)
    return {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}[d]


def packing_density(d: int) -> float:
    """Optimal ball-packing density C^d.

    d=1: unit intervals tile the line, C^1 = 1.
    d=2: hexagonal packing, one disk per rhombus of area 2*sqrt(3), C^2 = pi/(2 sqrt 3).
    d=3: fcc/hcp, one ball per 4*sqrt(2) volume, C^3 = (4pi/3)/(4 sqrt 2) = pi/(3 sqrt 2).
    """
    d = check_dimension(d)
    return {1: 1.0, 2: math.pi / (2.0 * math.sqrt(3.0)), 3: math.pi / (3.0 * math.sqrt(2.0))}[d]


def mass_weight(d: int, epsilon: float) -> float:
    """Mass carried by one point: epsilon^d * omega_d / C^d."""
    return epsilon ** d * unit_ball_volume(d) / packing_density(d)


# -----------------------------
# Parameters
# -----------------------------

@dataclass(frozen=True)
class Params:
    """Physical parameters (d, sigma, epsilon, r_eps).

    The integrable regime is sigma in (-d, 0) with no mesoscale; the
    regularized regime is sigma in [0, 1) with a mesoscale r_eps > 2*epsilon.
    """

    d: int
    sigma: float
    epsilon: float
    r_eps: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "d", check_dimension(self.d))
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        if not 0.0 < self.epsilon < 1.0:
            raise ParameterError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
        if -self.d < self.sigma < 0.0:
            if self.r_eps is not None:
                raise ParameterError("r_eps must be absent for sigma in (-d, 0)")
        elif 0.0 <= self.sigma < 1.0:
            if self.r_eps is None:
                raise ParameterError("r_eps is required for sigma in [0, 1)")
            object.__setattr__(self, "r_eps", float(self.r_eps))
            if not self.r_eps > 2.0 * self.epsilon:
                raise ParameterError(f"r_eps={self.r_eps!r} must exceed 2*epsilon={2 * self.epsilon!r}")
        else:
            raise ParameterError(f"sigma must lie in (-d, 1), got {self.sigma!r}")

    @property
    def integrable(self) -> bool:
        return self.sigma < 0.0

    @property
    def weight(self) -> float:
        return mass_weight(self.d, self.epsilon)


# -----------------------------
# Configurations
# -----------------------------

@dataclass(frozen=True)
class LatticeTag:
    """Integer coordinates of a configuration in a lattice basis.

    ``points == indices @ basis`` holds exactly up to rounding; energies use
    this to replace the O(N^2) pair loop by an autocorrelation of lattice
    occupancy.
    """

    basis: NDArray[np.float64]
    indices: NDArray[np.int64]

    def __post_init__(self):
        basis = np.array(self.basis, dtype=np.float64)
        indices = np.array(self.indices, dtype=np.int64)
        basis.setflags(write=False)
        indices.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "indices", indices)


def _as_points(points: ArrayLike, d: Optional[int] = None) -> NDArray[np.float64]:
    arr = np.array(points, dtype=np.float64)
    if arr.size == 0:
        if d is None:
            raise DimensionError("cannot infer dimension of an empty point list")
        return np.zeros((0, d))
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if d in (None, 1) else arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionError("points must be a list of d-vectors")
    check_dimension(arr.shape[1])
    if d is not None and arr.shape[1] != d:
        raise DimensionError(f"expected {d}-vectors, got {arr.shape[1]}-vectors")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("points must be finite")
    return np.ascontiguousarray(arr)


@dataclass(frozen=True, eq=False)
class Configuration:
    """Finite set of sphere centers with pairwise distance >= 2*epsilon.

    Build through :func:`validate_configuration`; the constructor itself only
    normalizes shapes.
    """

    points: NDArray[np.float64]
    epsilon: float
    lattice: Optional[LatticeTag] = field(default=None, compare=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def d(self) -> int:
        return int(self.points.shape[1])

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.epsilon == other.epsilon and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.epsilon, self.points.tobytes()))


def find_hard_sphere_violation(points: ArrayLike, epsilon: float) -> Optional[Tuple[int, int, float]]:
    """Lexicographically smallest pair (i, j), i < j, with |x_i - x_j| < 2*epsilon.

    Uses a cell grid of side 2*epsilon, so the cost is O(N) for well spread
    points.
    """
    pts = _as_points(points)
    if len(pts) < 2:
        return None
    hit = _backend.first_violation(pts, 2.0 * float(epsilon) * (1.0 - HARD_SPHERE_RTOL))
    if hit is None:
        return None
    i, j = hit
    return i, j, float(np.linalg.norm(pts[i] - pts[j]))


def validate_configuration(points: ArrayLike, epsilon: float, d: Optional[int] = None,
                           lattice: Optional[LatticeTag] = None) -> Configuration:
    """Return a :class:`Configuration` or raise :class:`HardSphereViolation`.

    Distance exactly 2*epsilon is admissible.
    """
    epsilon = float(epsilon)
    if not epsilon > 0.0:
        raise ParameterError("epsilon must be positive")
    pts = _as_points(points, d)
    hit = find_hard_sphere_violation(pts, epsilon) if len(pts) else None
    if hit is not None:
        raise HardSphereViolation(*hit)
    return Configuration(pts, epsilon, lattice)


@dataclass(frozen=True)
class ScaledEmpiricalMeasure:
    """A configuration carrying mass epsilon^d * omega_d / C^d per point."""

    config: Configuration

    @property
    def d(self) -> int:
        return self.config.d

    @property
    def epsilon(self) -> float:
        return self.config.epsilon

    @property
    def mass_weight(self) -> float:
        return mass_weight(self.config.d, self.config.epsilon)

    def __len__(self) -> int:
        return len(self.config)


def total_mass(m: ScaledEmpiricalMeasure) -> float:
    return len(m.config) * m.mass_weight


# -----------------------------
# Grid sets and densities
# -----------------------------

def _grid_array(values: ArrayLike, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    check_dimension(arr.ndim)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PixelSet:
    """Union of grid cells; cell k occupies k*h + [0, h)^d.

    Stored densely as a boolean ``mask`` whose element ``[0, ..., 0]`` is
    the cell with integer index ``origin``.
    """

    h: float
    origin: Tuple[int, ...]
    mask: NDArray[np.bool_]

    def __post_init__(self):
        object.__setattr__(self, "h", float(self.h))
        if not self.h > 0:
            raise ParameterError("resolution must be positive")
        mask = _grid_array(self.mask, bool)
        object.__setattr__(self, "mask", mask)
        origin = tuple(int(o) for o in self.origin)
        if len(origin) != mask.ndim:
            raise DimensionError("origin length must match the grid dimension")
        object.__setattr__(self, "origin", origin)

    @classmethod
    def from_cells(cls, h: float, cells: Iterable[Sequence[int]], d: Optional[int] = None) -> "PixelSet":
        idx = np.array(list(cells), dtype=np.int64)
        if idx.size == 0:
            if d is None:
                raise DimensionError("cannot infer dimension of an empty cell list")
            return cls(h, (0,) * d, np.zeros((0,) * d, dtype=bool))
        if idx.ndim == 1:
            idx = idx.reshape(-1, 1)
        lo = idx.min(axis=0)
        shape = idx.max(axis=0) - lo + 1
        mask = np.zeros(tuple(shape), dtype=bool)
        mask[tuple((idx - lo).T)] = True
        return cls(h, tuple(lo), mask)

    @classmethod
    def empty(cls, h: float, d: int) -> "PixelSet":
        return cls(h, (0,) * check_dimension(d), np.zeros((0,) * d, dtype=bool))

    @property
    def d(self) -> int:
        return self.mask.ndim

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def measure(self) -> float:
        return self.count * self.h ** self.d

    def cells(self) -> Iterator[Tuple[int, ...]]:
        for idx in np.argwhere(self.mask):
            yield tuple(int(i + o) for i, o in zip(idx, self.origin))

    def cell_array(self) -> NDArray[np.int64]:
        return np.argwhere(self.mask).astype(np.int64) + np.array(self.origin, dtype=np.int64)

    def cell_centers(self) -> NDArray[np.float64]:
        return (self.cell_array() + 0.5) * self.h

    def translated(self, shift: Sequence[int]) -> "PixelSet":
        return PixelSet(self.h, tuple(o + int(s) for o, s in zip(self.origin, shift)), self.mask)

    def to_density(self) -> "DensityField":
        return DensityField(self.h, self.origin, self.mask.astype(np.float64))

    def __eq__(self, other):
        if not isinstance(other, PixelSet):
            return NotImplemented
        return self.h == other.h and set(self.cells()) == set(other.cells())

    def __hash__(self):
        return hash((self.h, frozenset(self.cells())))


@dataclass(frozen=True, eq=False)
class DensityField:
    """Grid function with values in [0, 1], constant on each cell."""

    h: float
    origin: Tuple[int, ...]
    values: NDArray[np.float64]

    def __post_init__(self):
        object.__setattr__(self, "h", float(self.h))
        if not self.h > 0:
            raise ParameterError("resolution must be positive")
        values = _grid_array(self.values, np.float64)
        if values.size and not (np.all(values >= 0.0) and np.all(values <= 1.0)):
            raise ParameterError("density values must lie in [0, 1]")
        object.__setattr__(self, "values", values)
        origin = tuple(int(o) for o in self.origin)
        if len(origin) != values.ndim:
            raise DimensionError("origin length must match the grid dimension")
        object.__setattr__(self, "origin", origin)

    @property
    def d(self) -> int:
        return self.values.ndim

    @property
    def mass(self) -> float:
        return float(self.values.sum()) * self.h ** self.d

    def cell_centers(self) -> NDArray[np.float64]:
        """Centers of all cells of the dense array, shape values.shape + (d,)."""
        axes = [(np.arange(n) + o + 0.5) * self.h for n, o in zip(self.values.shape, self.origin)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def items(self) -> Iterator[Tuple[Tuple[int, ...], float]]:
        for idx in np.argwhere(self.values != 0.0):
            key = tuple(int(i + o) for i, o in zip(idx, self.origin))
            yield key, float(self.values[tuple(idx)])

    def threshold(self, level: float = 0.5) -> PixelSet:
        return PixelSet(self.h, self.origin, self.values > level)

    def __eq__(self, other):
        if not isinstance(other, DensityField):
            return NotImplemented
        return self.h == other.h and dict(self.items()) == dict(other.items())

    def __hash__(self):
        return hash((self.h, tuple(sorted(self.items()))))


# -----------------------------
# Regions
# -----------------------------

@dataclass(frozen=True)
class Box:
    """Half-open axis-aligned box prod [lo_i, hi_i)."""

    lo: Tuple[float, ...]
    hi: Tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi):
            raise DimensionError("box corners differ in dimension")
        check_dimension(len(lo))
        if any(b <= a for a, b in zip(lo, hi)):
            raise ParameterError("box must have positive side lengths")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, d: int, side: float, lo: float = 0.0) -> "Box":
        return cls((lo,) * d, (lo + side,) * d)

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def measure(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    def bounds(self) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        return np.array(self.lo), np.array(self.hi)

    def contains(self, points: ArrayLike) -> NDArray[np.bool_]:
        p = np.asarray(points, dtype=np.float64)
        return np.all((p >= np.array(self.lo)) & (p < np.array(self.hi)), axis=-1)


@dataclass(frozen=True)
class Ball:
    """Open ball {|x - center| < radius}."""

    center: Tuple[float, ...]
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        check_dimension(len(c))
        if not self.radius > 0:
            raise ParameterError("radius must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @classmethod
    def centered(cls, d: int, radius: float) -> "Ball":
        return cls((0.0,) * d, radius)

    @property
    def d(self) -> int:
        return len(self.center)

    @property
    def measure(self) -> float:
        return unit_ball_volume(self.d) * self.radius ** self.d

    def bounds(self) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        c = np.array(self.center)
        return c - self.radius, c + self.radius

    def contains(self, points: ArrayLike) -> NDArray[np.bool_]:
        p = np.asarray(points, dtype=np.float64) - np.array(self.center)
        return np.sum(p * p, axis=-1) < self.radius ** 2


def pixel_region_contains(E: PixelSet, points: ArrayLike) -> NDArray[np.bool_]:
    """Half-open cell membership of points in a pixel set."""
    p = np.asarray(points, dtype=np.float64)
    if p.size == 0 or E.mask.size == 0:
        return np.zeros(p.shape[:-1], dtype=bool)
    idx = np.floor(p / E.h).astype(np.int64) - np.array(E.origin, dtype=np.int64)
    inside = np.all((idx >= 0) & (idx < np.array(E.mask.shape)), axis=-1)
    out = np.zeros(p.shape[:-1], dtype=bool)
    sel = idx[inside]
    out[inside] = E.mask[tuple(sel.T)]
    return out


def region_bounds(region) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    if isinstance(region, PixelSet):
        lo = np.array(region.origin, dtype=np.float64) * region.h
        return lo, lo + np.array(region.mask.shape) * region.h
    return region.bounds()


def region_contains(region, points: ArrayLike) -> NDArray[np.bool_]:
    if isinstance(region, PixelSet):
        return pixel_region_contains(region, points)
    return region.contains(points)


def region_measure(region) -> float:
    return region.measure
