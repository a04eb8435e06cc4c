"""Continuum functionals on pixel sets and density fields.

Every functional is a sum over cell offsets delta of (pair count at offset
delta) x (exact cell-pair integral at offset delta). Pair counts are
autocorrelations of the cell values, computed by FFT; cell-pair integrals
come from :mod:`hsriesz.cell_integrals`. Because grid sets are exact unions
of cells, the only approximation is the quadrature inside the cell-pair
table, which is accurate to about 1e-13 relative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import fft as sfft

from .cell_integrals import cube_log_constant, cube_self_perimeter, kernel_table
from .core import DensityField, HsRieszError, ParameterError, PixelSet, unit_ball_volume
from .kernels import ConfinementSpec, NonIntegrableSigma, gamma_r_sigma, gamma_sigma


class ResolutionTooCoarse(ParameterError):
    pass


class SigmaOutOfRange(ParameterError):
    pass


class NoPlateau(HsRieszError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    """Near-diagonal refinement of the cell-pair table.

    Boxes of the tent support closer than ``diagonal_radius`` cells to the
    origin get at least ``3 * subdivision + 2`` Gauss points per axis (14 by
    default). Raising ``subdivision`` is how error estimates are formed.
    """

    subdivision: int = 4
    diagonal_radius: float = 2.0

    def __post_init__(self):
        if int(self.subdivision) != self.subdivision or self.subdivision < 1:
            raise ParameterError("subdivision must be a positive integer")
        if not self.diagonal_radius > 0:
            raise ParameterError("diagonal_radius must be positive")

    @property
    def near(self) -> Tuple[float, int]:
        return float(self.diagonal_radius), 3 * int(self.subdivision) + 2

    def refined(self) -> "QuadratureSpec":
        return QuadratureSpec(self.subdivision + 2, self.diagonal_radius + 2.0)


DEFAULT_QUADRATURE = QuadratureSpec()


@dataclass(frozen=True)
class ResidualField:
    """Real-valued grid function on the cells of a density field's array."""

    h: float
    origin: Tuple[int, ...]
    values: np.ndarray


Grid = Union[PixelSet, DensityField]


def _values(E: Grid) -> np.ndarray:
    if isinstance(E, PixelSet):
        return E.mask.astype(np.float64)
    return np.asarray(E.values, dtype=np.float64)


def _check_dim(d: int, E: Grid):
    if E.d != d:
        raise ParameterError(f"grid has dimension {E.d}, expected {d}")


def autocorrelation(values: np.ndarray, integer: bool = False) -> np.ndarray:
    """A(delta) = sum_a v_a v_{a+delta}, shape 2n-1 per axis, delta = 0 at the centre."""
    shape = values.shape
    full = tuple(2 * n - 1 for n in shape)
    fshape = tuple(sfft.next_fast_len(n, real=True) for n in full)
    f = sfft.rfftn(values, fshape)
    corr = sfft.irfftn(f * np.conj(f), fshape)
    idx = [np.r_[m - (n - 1):m, 0:n] for n, m in zip(shape, fshape)]
    out = corr[np.ix_(*idx)]
    return np.rint(out) if integer else out


def _trim(E: Grid) -> Tuple[np.ndarray, Tuple[int, ...]]:
    """Cell values cropped to their nonzero bounding box."""
    v = _values(E)
    if v.size == 0 or not np.any(v):
        return np.zeros((0,) * E.d), tuple(E.origin)
    nz = np.nonzero(v)
    lo = [int(a.min()) for a in nz]
    hi = [int(a.max()) + 1 for a in nz]
    sl = tuple(slice(a, b) for a, b in zip(lo, hi))
    return v[sl], tuple(o + a for o, a in zip(E.origin, lo))


def _pair_total(v: np.ndarray, table: np.ndarray, integer: bool, skip_zero: bool) -> float:
    A = autocorrelation(v, integer)
    centre = tuple(n - 1 for n in v.shape)
    ext = tuple(n - 1 for n in v.shape)
    tc = tuple(slice(0, 2 * n + 1) for n in ext)
    T = table[tc]
    if skip_zero:
        A = A.copy()
        A[centre] = 0.0
        T = np.where(np.isnan(T), 0.0, T)
    return float(np.sum(A * T))


# -----------------------------
# Integrable regime
# -----------------------------

def riesz_energy(d: int, sigma: float, rho: Grid, quad: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """-int int rho(x) rho(y) |x - y|^{-(d + sigma)} dx dy for sigma in (-d, 0)."""
    if not -d < sigma < 0:
        raise NonIntegrableSigma(f"sigma must lie in (-d, 0), got {sigma!r}")
    _check_dim(d, rho)
    v, _ = _trim(rho)
    if v.size == 0:
        return 0.0
    s = d + sigma
    table = kernel_table(d, s, tuple(n - 1 for n in v.shape), near=quad.near)
    return -rho.h ** (d - sigma) * _pair_total(v, table, isinstance(rho, PixelSet), False)


def _cell_centers(shape, origin, h):
    axes = [(np.arange(n) + o + 0.5) * h for n, o in zip(shape, origin)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def confinement_integral(rho: Grid, g: Optional[ConfinementSpec]) -> float:
    """sum over cells of g(cell centre) * rho * h^d."""
    if g is None:
        return 0.0
    v, origin = _trim(rho)
    if v.size == 0:
        return 0.0
    gv = g(_cell_centers(v.shape, origin, rho.h))
    return float(np.sum(gv * v)) * rho.h ** rho.d


def riesz_energy_confined(d: int, sigma: float, rho: Grid, g: Optional[ConfinementSpec],
                          quad: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    return riesz_energy(d, sigma, rho, quad) + confinement_integral(rho, g)


def potential_field(d: int, sigma: float, rho: DensityField, quad: QuadratureSpec = DEFAULT_QUADRATURE) -> np.ndarray:
    """Cell averages of int rho(y) |x - y|^{-(d + sigma)} dy on the array of ``rho``."""
    v = _values(rho)
    s = d + sigma
    ext = tuple(n - 1 for n in v.shape)
    table = kernel_table(d, s, ext, near=quad.near)
    full = tuple(n + 2 * e for n, e in zip(v.shape, ext))
    fshape = tuple(sfft.next_fast_len(n, real=True) for n in full)
    conv = sfft.irfftn(sfft.rfftn(v, fshape) * sfft.rfftn(table, fshape), fshape)
    sl = tuple(slice(e, e + n) for e, n in zip(ext, v.shape))
    return rho.h ** (-sigma) * conv[sl]


def first_variation_residual(d: int, sigma: float, rho: DensityField, g: Optional[ConfinementSpec],
                             quad: QuadratureSpec = DEFAULT_QUADRATURE) -> ResidualField:
    """g(x) - 2 int rho(y) |x - y|^{-(d + sigma)} dy per cell of the density array.

    At a minimizer the residual vanishes where 0 < rho < 1, is >= 0 where
    rho = 0 and <= 0 where rho = 1.
    """
    if not -d < sigma < 0:
        raise NonIntegrableSigma(f"sigma must lie in (-d, 0), got {sigma!r}")
    _check_dim(d, rho)
    v = _values(rho)
    if v.size == 0:
        return ResidualField(rho.h, rho.origin, v)
    gv = g(_cell_centers(v.shape, rho.origin, rho.h)) if g is not None else np.zeros(v.shape)
    pot = potential_field(d, sigma, rho, quad) if np.any(v) else np.zeros(v.shape)
    return ResidualField(rho.h, rho.origin, gv - 2.0 * pot)


# -----------------------------
# Regularized regime
# -----------------------------

def j_truncated(d: int, sigma: float, r: float, E: PixelSet, quad: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """-int_E int_{E \\ B_r(x)} |x - y|^{-(d + sigma)} dy dx; needs r > 2h."""
    if not 0.0 <= sigma < 1.0:
        raise SigmaOutOfRange(f"sigma must lie in [0, 1), got {sigma!r}")
    _check_dim(d, E)
    if not r > 2.0 * E.h:
        raise ResolutionTooCoarse(f"r={r!r} must exceed 2h={2 * E.h!r}")
    v, _ = _trim(E)
    if v.size == 0:
        return 0.0
    ext = tuple(n - 1 for n in v.shape)
    if math.sqrt(sum((n + 1) ** 2 for n in ext)) * E.h <= r:
        return 0.0
    table = kernel_table(d, d + sigma, ext, R=r / E.h, near=quad.near)
    return -E.h ** (d - sigma) * _pair_total(v, table, True, False)


def j_renormalized(d: int, sigma: float, r: float, E: PixelSet, quad: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """J_r(E) - gamma_r^sigma |E|."""
    return j_truncated(d, sigma, r, E, quad) - gamma_r_sigma(d, sigma, r) * E.measure


def fractional_perimeter(d: int, sigma: float, E: PixelSet, quad: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """int_E int_{R^d \\ E} |x - y|^{-(d + sigma)} for sigma in (0, 1).

    Each cell's full perimeter (an exact per-cube constant including the
    whole unbounded complement) minus its interactions with the other cells
    of E, so no truncation window is needed.
    """
    if not 0.0 < sigma < 1.0:
        raise SigmaOutOfRange(f"sigma must lie in (0, 1), got {sigma!r}; use p0_perimeter at 0")
    _check_dim(d, E)
    v, _ = _trim(E)
    if v.size == 0:
        return 0.0
    M = float(np.sum(v))
    table = kernel_table(d, d + sigma, tuple(n - 1 for n in v.shape), near=quad.near)
    cross = _pair_total(v, table, True, True)
    return E.h ** (d - sigma) * (M * cube_self_perimeter(d, sigma) - cross)


def p0_value(d: int, E: PixelSet, R: float, quad: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """int_E int_{B_R(x) \\ E} |x - y|^{-d} dy dx - gamma_R^0 |E| at one radius R."""
    _check_dim(d, E)
    v, _ = _trim(E)
    if v.size == 0:
        return 0.0
    Rc = R / E.h
    if Rc * Rc <= d:
        raise ResolutionTooCoarse("R must exceed sqrt(d) cells")
    ext = tuple(n - 1 for n in v.shape)
    full = kernel_table(d, float(d), ext, near=quad.near)
    outer = kernel_table(d, float(d), ext, R=Rc, near=quad.near)
    inside = np.where(np.isnan(full), 0.0, full) - outer
    M = float(np.sum(v))
    area = d * unit_ball_volume(d)
    per_cell = cube_log_constant(d) - area * math.log(E.h)
    return E.h ** d * (M * per_cell - _pair_total(v, inside, True, True))


def diameter(E: PixelSet) -> float:
    v, _ = _trim(E)
    if v.size == 0:
        return 0.0
    return E.h * math.sqrt(sum(n * n for n in v.shape))


def p0_perimeter(d: int, E: PixelSet, R_list: Sequence[float], rtol: float = 1e-4,
                 quad: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """0-fractional perimeter as the plateau of p0_value over increasing R.

    Values at radii R >= diam(E) must agree to ``rtol`` (relative to
    max(|value|, |E|)); the last one is returned.
    """
    _check_dim(d, E)
    if E.count == 0:
        return 0.0
    R_list = sorted(float(R) for R in R_list)
    diam = diameter(E)
    usable = [R for R in R_list if R >= diam]
    if len(usable) < 2:
        raise NoPlateau(f"need two radii beyond diam(E)={diam!r}, got {R_list!r}")
    vals = [p0_value(d, E, R, quad) for R in usable]
    scale = max(abs(vals[-1]), E.measure)
    for a, b in zip(vals[:-1], vals[1:]):
        if abs(a - b) > rtol * scale:
            raise NoPlateau(f"values {vals!r} differ by more than {rtol} relative")
    return vals[-1]


def renormalized_limit(d: int, sigma: float, perimeter: float, measure: float) -> float:
    """P^sigma(E) - gamma^sigma |E|, the limit of the renormalized functionals."""
    return perimeter - gamma_sigma(d, sigma) * measure


def with_error_estimate(func, *args, quad: QuadratureSpec = DEFAULT_QUADRATURE, **kwargs) -> Tuple[float, float]:
    """(value, |value - value with refined quadrature|)."""
    v = func(*args, quad=quad, **kwargs)
    v2 = func(*args, quad=quad.refined(), **kwargs)
    return v, abs(v2 - v)
