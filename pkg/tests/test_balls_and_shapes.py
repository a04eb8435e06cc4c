import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import interval_pair_integral

from hsriesz import balls, optimizer, shapes
from hsriesz.core import ParameterError


@given(st.integers(1, 3), st.floats(0.2, 3.0), st.floats(0.0, 1.0))
def test_deficit_is_volume_minus_covariogram(d, R, frac):
    t = 2 * R * frac
    vol = {1: 2.0, 2: math.pi, 3: 4 * math.pi / 3}[d] * R ** d
    assert balls.covariogram_deficit(d, R, t) == pytest.approx(vol - balls.covariogram(d, R, t), rel=1e-9, abs=1e-12)


def test_covariogram_by_counting_cells():
    E = shapes.pixel_ball(2, 1 / 200, 1.0)
    cells = set(E.cells())
    shift = 100  # 0.5 in cell units
    overlap = sum(1 for c in cells if (c[0] + shift, c[1]) in cells)
    assert overlap * E.h ** 2 == pytest.approx(balls.covariogram(2, 1.0, 0.5), rel=2e-3)


@pytest.mark.parametrize("R", [0.5, 1.3])
def test_one_dimensional_balls_are_intervals(R):
    L = 2 * R
    assert balls.ball_riesz_energy(1, -0.5, R) == pytest.approx(-interval_pair_integral(L, 0.5), rel=1e-11)
    for s in (0.25, 0.5, 0.75):
        assert balls.ball_fractional_perimeter(1, s, R) == pytest.approx(2 * L ** (1 - s) / (s * (1 - s)), rel=1e-11)


def test_unit_interval_p0_and_truncated():
    assert balls.ball_p0_perimeter(1, 0.5) == pytest.approx(2.0, rel=1e-11)
    r = 0.5
    ref = -2 * (math.log(1 / r) - (1 - r))
    assert balls.ball_j_truncated(1, 0.0, r, 0.5) == pytest.approx(ref, rel=1e-11)
    assert balls.ball_j_truncated(2, 0.5, 3.0, 1.0) == 0.0


def test_disk_riesz_energy_closed_form():
    # sigma = -1 in the plane: -int_B int_B |x-y|^{-1} = -16 pi R^3 / 3
    assert balls.ball_riesz_energy(2, -1.0, 1.0) == pytest.approx(-16 * math.pi / 3, rel=1e-11)


def test_bad_sigma():
    with pytest.raises(ParameterError):
        balls.ball_riesz_energy(2, 0.5, 1.0)
    with pytest.raises(ParameterError):
        balls.ball_fractional_perimeter(2, 1.0, 1.0)


@pytest.mark.parametrize("name", sorted(shapes.GAUGES))
def test_shapes_have_exactly_the_requested_count(name):
    E = shapes.shape_by_count(name, 2, 1 / 32, 1234)
    assert E.count == 1234
    assert shapes.shape(name, 2, 1 / 32, 1.0).count == 1024


def test_gauge_shapes_look_right():
    h = 1 / 64
    sq = shapes.shape_by_count("square", 2, h, 64 * 64)
    assert sq.mask.sum(axis=0).max() == 64 and sq.mask.sum(axis=1).max() == 64
    rect = shapes.shape_by_count("rectangle", 2, h, 2 * 32 * 32)
    # long side along the first axis
    assert rect.mask.sum(axis=0).max() == 64 and rect.mask.sum(axis=1).max() == 32
    ann = shapes.shape_by_count("annulus", 2, h, 4000)
    n = ann.mask.shape[0]
    assert not ann.mask[n // 2, n // 2]


def test_square_ball_deficit_matches_geometry():
    # square of side 2 vs concentric disk of equal area: a = sqrt(pi) / 2
    a = math.sqrt(math.pi) / 2
    exact = 8 * (math.acos(a) - a * math.sqrt(1 - a * a)) / math.pi
    E = shapes.shape_by_count("square", 2, 1 / 256, 512 * 512)
    assert optimizer.shape_diagnostics(E).ball_deficit == pytest.approx(exact, abs=3e-3)


def test_pixel_box_and_errors():
    B = shapes.pixel_box(0.25, (0.0, 0.0), (1.0, 0.5))
    assert B.count == 8
    with pytest.raises(ParameterError):
        shapes.shape_by_count("triangle", 2, 0.1, 10)
    with pytest.raises(ParameterError):
        shapes.shape_by_count("rectangle", 1, 0.1, 10)
    assert shapes.shape_by_count("ball", 2, 0.1, 0).count == 0
