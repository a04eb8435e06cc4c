"""Pixel-set builders for test shapes.

Every builder ranks grid cells by a gauge function (a homogeneous "radius"
of the shape, equal to 1 on its boundary) and keeps the ``count`` cells with
the smallest gauge. Shapes built with the same ``count`` have exactly equal
measure, which is what the isoperimetric comparisons need.
"""

from __future__ import annotations

import math
from typing import Callable, Dict, Optional

import numpy as np

from .core import ParameterError, PixelSet, check_dimension, unit_ball_volume

Gauge = Callable[[np.ndarray], np.ndarray]


def _ball_gauge(x):
    return np.sqrt(np.sum(x * x, axis=-1))


def _cube_gauge(x):
    return np.max(np.abs(x), axis=-1)


def _rectangle_gauge(x):
    # 2:1 along the first axis
    scaled = x.copy()
    scaled[..., 0] = 0.5 * scaled[..., 0]
    return np.max(np.abs(scaled), axis=-1)


def _l_gauge(x):
    # [-1,1]^2 minus the open quadrant (0,1)x(0,1) in the first two axes
    box = np.max(np.abs(x), axis=-1)
    notch = np.minimum(x[..., 0], x[..., 1])
    return np.where(notch > 0, np.maximum(box, 1.0 + notch), box)


def _annulus_gauge(x, ratio=0.5):
    # shell ratio <= |x| <= 1; inside the hole the gauge grows toward the centre
    r = _ball_gauge(x)
    return np.where(r >= ratio, r, 1.0 + (ratio - r))


GAUGES: Dict[str, Gauge] = {
    "ball": _ball_gauge,
    "square": _cube_gauge,
    "rectangle": _rectangle_gauge,
    "l-shape": _l_gauge,
    "annulus": _annulus_gauge,
}


def _gauge_area(name: str, d: int) -> float:
    """Measure of the gauge unit ball {gauge <= 1}."""
    if name == "ball":
        return unit_ball_volume(d)
    if name == "square":
        return 2.0 ** d
    if name == "rectangle":
        return 2.0 ** (d + 1)
    if name == "l-shape":
        return 2.0 ** d * (1.0 - 0.5 ** d)
    if name == "annulus":
        return unit_ball_volume(d) * (1.0 - 0.5 ** d)
    raise ParameterError(f"unknown shape {name!r}")


def shape_by_count(name: str, d: int, h: float, count: int) -> PixelSet:
    """The ``count`` cells of side h with smallest gauge, centred at the origin.

    Ties are broken by lexicographic cell order, so the result is deterministic.
    """
    d = check_dimension(d)
    if name not in GAUGES:
        raise ParameterError(f"unknown shape {name!r}; choose from {sorted(GAUGES)}")
    if name in ("rectangle", "l-shape") and d < 2:
        raise ParameterError(f"{name} needs d >= 2")
    if count <= 0:
        return PixelSet.empty(h, d)
    scale = (count * h ** d / _gauge_area(name, d)) ** (1.0 / d)
    reach = 2.0 * scale * (2.0 if name == "rectangle" else 1.0) + 2.0 * h
    n = int(math.ceil(reach / h))
    axes = [(np.arange(-n, n) + 0.5) * h for _ in range(d)]
    centres = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    gauge = GAUGES[name](centres / scale).ravel()
    if count > gauge.size:
        raise ParameterError("count exceeds the search window")
    keep = np.argsort(gauge, kind="stable")[:count]
    mask = np.zeros(gauge.size, dtype=bool)
    mask[keep] = True
    return PixelSet(h, (-n,) * d, mask.reshape((2 * n,) * d))


def shape(name: str, d: int, h: float, measure: float) -> PixelSet:
    """Shape with measure rounded to a whole number of cells."""
    return shape_by_count(name, d, h, int(round(measure / h ** d)))


def pixel_ball(d: int, h: float, radius: float, center: Optional[np.ndarray] = None) -> PixelSet:
    """Cells whose centres lie in the open ball."""
    d = check_dimension(d)
    c = np.zeros(d) if center is None else np.asarray(center, dtype=np.float64)
    lo = np.floor((c - radius) / h).astype(int) - 1
    hi = np.ceil((c + radius) / h).astype(int) + 1
    axes = [(np.arange(a, b) + 0.5) * h for a, b in zip(lo, hi)]
    centres = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    mask = np.sum((centres - c) ** 2, axis=-1) < radius * radius
    return PixelSet(h, tuple(int(v) for v in lo), mask)


def pixel_box(h: float, lo, hi) -> PixelSet:
    """Cells whose centres lie in the half-open box [lo, hi)."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    a = np.floor(lo / h).astype(int) - 1
    b = np.ceil(hi / h).astype(int) + 1
    axes = [(np.arange(p, q) + 0.5) * h for p, q in zip(a, b)]
    centres = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    mask = np.all((centres >= lo) & (centres < hi), axis=-1)
    return PixelSet(h, tuple(int(v) for v in a), mask)
