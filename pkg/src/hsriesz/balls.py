"""Exact continuum functionals of balls via the covariogram.

For a ball B of radius R the set covariogram c(t) = |B cap (B + z)|, |z| = t,
is explicit, and every functional here is a one-dimensional radial integral
against it:

    int_B int_B k(|x - y|) dx dy = d omega_d int_0^{2R} t^{d-1} k(t) c(t) dt.

These values are the continuum references for recovery and bridge
experiments, independent of the grid quadrature.
"""

from __future__ import annotations

import math

from scipy import integrate

from .core import check_dimension, unit_ball_volume
from .kernels import ParameterError


def covariogram(d: int, R: float, t: float) -> float:
    """|B_R cap (B_R + z)| for |z| = t."""
    d = check_dimension(d)
    if t >= 2.0 * R:
        return 0.0
    if d == 1:
        return 2.0 * R - t
    if d == 2:
        return 2.0 * R * R * math.acos(t / (2.0 * R)) - 0.5 * t * math.sqrt(4.0 * R * R - t * t)
    return math.pi / 12.0 * (4.0 * R + t) * (2.0 * R - t) ** 2


def covariogram_deficit(d: int, R: float, t: float) -> float:
    """|B_R| - covariogram(d, R, t), written without cancellation at small t."""
    d = check_dimension(d)
    t = min(t, 2.0 * R)
    if d == 1:
        return t
    if d == 2:
        return 2.0 * R * R * math.asin(t / (2.0 * R)) + 0.5 * t * math.sqrt(4.0 * R * R - t * t)
    return math.pi * t * (R * R - t * t / 12.0)


def _radial(d, fn, a, b, breaks=()):
    pts = [p for p in breaks if a < p < b]
    val, _ = integrate.quad(fn, a, b, points=pts or None, epsabs=0.0, epsrel=1e-13, limit=400)
    return val


def ball_riesz_energy(d: int, sigma: float, R: float) -> float:
    """-int_B int_B |x - y|^{-(d + sigma)} for sigma in (-d, 0)."""
    if not -d < sigma < 0:
        raise ParameterError("sigma must lie in (-d, 0)")
    s = d + sigma
    area = d * unit_ball_volume(d)
    # t^{d-1-s} is integrable at 0; substitute t = u^k to smooth the endpoint
    k = 1.0 / (d - s)
    val = _radial(d, lambda u: k * u ** (k - 1.0) * (u ** k) ** (d - 1 - s) * covariogram(d, R, u ** k),
                  0.0, (2.0 * R) ** (d - s))
    return -area * val


def ball_fractional_perimeter(d: int, sigma: float, R: float) -> float:
    """int_B int_{R^d \\ B} |x - y|^{-(d + sigma)} for sigma in (0, 1)."""
    if not 0 < sigma < 1:
        raise ParameterError("sigma must lie in (0, 1)")
    s = d + sigma
    vol = unit_ball_volume(d) * R ** d
    area = d * unit_ball_volume(d)
    # vol - c(t) ~ t near 0, so the integrand behaves like t^{-sigma}
    k = 1.0 / (1.0 - sigma)
    inner = _radial(d, lambda u: k * u ** (k - 1.0) * (u ** k) ** (d - 1 - s) * covariogram_deficit(d, R, u ** k),
                    0.0, (2.0 * R) ** (1.0 - sigma))
    tail = vol * (2.0 * R) ** (-sigma) / sigma
    return area * (inner + tail)


def ball_j_truncated(d: int, sigma: float, r: float, R: float) -> float:
    """-int_B int_{B \\ B_r(x)} |x - y|^{-(d + sigma)}."""
    s = d + sigma
    if r >= 2.0 * R:
        return 0.0
    area = d * unit_ball_volume(d)
    return -area * _radial(d, lambda t: t ** (d - 1 - s) * covariogram(d, R, t), r, 2.0 * R)


def ball_p0_perimeter(d: int, R: float) -> float:
    """int_B [int_{B_1(x) \\ B} - int_{B \\ B_1(x)}] |x - y|^{-d}."""
    area = d * unit_ball_volume(d)

    def f(t):
        if t < 1.0:
            return covariogram_deficit(d, R, t) / t
        return -covariogram(d, R, t) / t

    top = max(1.0, 2.0 * R)
    return area * _radial(d, f, 0.0, top, breaks=(1.0, 2.0 * R))
