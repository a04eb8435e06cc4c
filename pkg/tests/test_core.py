import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hsriesz import core
from hsriesz.core import (
    Ball,
    Box,
    DensityField,
    DimensionError,
    HardSphereViolation,
    ParameterError,
    Params,
    PixelSet,
    ScaledEmpiricalMeasure,
    find_hard_sphere_violation,
    validate_configuration,
)


def test_unit_ball_volumes_from_gamma_function():
    for d in (1, 2, 3):
        ref = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
        assert core.unit_ball_volume(d) == pytest.approx(ref, rel=1e-15)


def test_packing_densities_from_cell_geometry():
    # interval tiling, one disk per hexagon of area 2 sqrt(3), four balls per fcc cube of side 2 sqrt(2)
    assert core.packing_density(1) == 1.0
    assert core.packing_density(2) == pytest.approx(math.pi / (2 * math.sqrt(3)), rel=1e-15)
    assert core.packing_density(3) == pytest.approx(4 * (4 * math.pi / 3) / (2 * math.sqrt(2)) ** 3, rel=1e-15)


def test_mass_weight():
    assert core.mass_weight(2, 0.1) == pytest.approx(0.01 * math.pi / core.packing_density(2))


@pytest.mark.parametrize("d", [0, 4, 2.5])
def test_bad_dimensions(d):
    with pytest.raises(DimensionError):
        core.check_dimension(d)


def test_params_regimes():
    assert Params(2, -1.0, 0.1).integrable
    assert not Params(2, 0.5, 0.1, 0.3).integrable
    with pytest.raises(ParameterError):
        Params(2, -1.0, 0.1, 0.3)
    with pytest.raises(ParameterError):
        Params(2, 0.5, 0.1)
    with pytest.raises(ParameterError):
        Params(2, 0.5, 0.1, 0.2)  # r_eps must exceed 2 epsilon strictly
    with pytest.raises(ParameterError):
        Params(2, -2.0, 0.1)
    with pytest.raises(ParameterError):
        Params(2, 1.0, 0.1, 0.5)
    with pytest.raises(ParameterError):
        Params(2, 0.5, 1.5, 4.0)


def test_contact_is_admissible():
    c = validate_configuration([[0.0, 0.0], [0.2, 0.0]], 0.1)
    assert len(c) == 2


def test_overlap_reports_smallest_pair():
    pts = [[0.0, 0.0], [5.0, 5.0], [0.1, 0.0], [5.05, 5.0]]
    with pytest.raises(HardSphereViolation):
        validate_configuration(pts, 0.1)
    i, j, dist = find_hard_sphere_violation(pts, 0.1)
    assert (i, j) == (0, 2)
    assert dist == pytest.approx(0.1)


def _naive_first_violation(pts, dmin):
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if np.linalg.norm(pts[i] - pts[j]) < dmin:
                return i, j
    return None


@given(st.integers(1, 3), st.integers(2, 40), st.integers(0, 10 ** 6))
def test_violation_search_matches_double_loop(d, n, seed):
    rng = np.random.default_rng(seed)
    pts = rng.random((n, d)) * 2.0
    hit = find_hard_sphere_violation(pts, 0.1)
    ref = _naive_first_violation(pts, 0.2 * (1 - core.HARD_SPHERE_RTOL))
    assert (hit[:2] if hit else None) == ref


@given(st.lists(st.tuples(st.integers(-5, 5), st.integers(-5, 5)), min_size=1, max_size=12, unique=True),
       st.tuples(st.floats(-3, 3), st.floats(-3, 3)))
def test_translation_preserves_admissibility(cells, shift):
    pts = np.array(cells, dtype=float) * 0.25
    c = validate_configuration(pts, 0.1)
    moved = validate_configuration(c.points + np.array(shift), 0.1)
    assert len(moved) == len(c)


def test_configuration_is_immutable_and_hashable():
    c = validate_configuration([[0.0], [1.0]], 0.1)
    with pytest.raises(ValueError):
        c.points[0, 0] = 3.0
    assert c == validate_configuration([[0.0], [1.0]], 0.1)
    assert hash(c) == hash(validate_configuration([[0.0], [1.0]], 0.1))


def test_empty_configuration_needs_dimension():
    with pytest.raises(DimensionError):
        validate_configuration([], 0.1)
    assert len(validate_configuration([], 0.1, d=2)) == 0


def test_scaled_measure_mass():
    c = validate_configuration([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 0.05)
    m = ScaledEmpiricalMeasure(c)
    assert core.total_mass(m) == pytest.approx(3 * core.mass_weight(2, 0.05))


def test_pixel_set_cells_and_measure():
    E = PixelSet.from_cells(0.5, [(0, 0), (2, 1), (-1, 3)])
    assert E.count == 3
    assert E.measure == pytest.approx(0.75)
    assert sorted(E.cells()) == [(-1, 3), (0, 0), (2, 1)]
    assert E.translated((1, 1)) == PixelSet.from_cells(0.5, [(1, 1), (3, 2), (0, 4)])
    assert PixelSet.empty(0.5, 2).count == 0


def test_density_field_bounds_and_threshold():
    with pytest.raises(ParameterError):
        DensityField(0.1, (0, 0), [[0.5, 1.2]])
    rho = DensityField(0.1, (0, 0), [[0.2, 0.7], [1.0, 0.0]])
    assert rho.mass == pytest.approx(1.9 * 0.01)
    assert rho.threshold().count == 2
    assert dict(rho.items())[(1, 0)] == 1.0


def test_regions():
    b = Ball.centered(2, 1.0)
    assert b.contains([[0.5, 0.5], [1.0, 0.0]]).tolist() == [True, False]
    box = Box.cube(2, 1.0)
    assert box.contains([[0.0, 0.0], [1.0, 0.5]]).tolist() == [True, False]
    E = PixelSet.from_cells(0.5, [(0, 0)])
    assert core.pixel_region_contains(E, [[0.25, 0.25], [0.5, 0.25]]).tolist() == [True, False]
