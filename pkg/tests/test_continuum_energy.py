import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import interval_pair_integral

from hsriesz import balls, continuum_energy as ce, shapes
from hsriesz.core import DensityField, PixelSet
from hsriesz.kernels import ConfinementSpec, gamma_r_sigma, gamma_sigma


def _refine(E: PixelSet) -> PixelSet:
    mask = E.mask
    for axis in range(E.d):
        mask = np.repeat(mask, 2, axis=axis)
    return PixelSet(E.h / 2, tuple(2 * o for o in E.origin), mask)


masks_2d = st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=1, max_size=14, unique=True)


@given(masks_2d, st.sampled_from([-1.5, -0.5, 0.25, 0.75]))
def test_refinement_leaves_functionals_unchanged(cells, sigma):
    # splitting every cell into four describes the same set
    E = PixelSet.from_cells(0.25, cells)
    F = _refine(E)
    if sigma < 0:
        assert ce.riesz_energy(2, sigma, F) == pytest.approx(ce.riesz_energy(2, sigma, E), rel=1e-10)
    else:
        assert ce.fractional_perimeter(2, sigma, F) == pytest.approx(ce.fractional_perimeter(2, sigma, E), rel=1e-10)
        r = 0.61
        assert ce.j_truncated(2, sigma, r, F) == pytest.approx(ce.j_truncated(2, sigma, r, E), rel=1e-10, abs=1e-12)


@given(masks_2d)
def test_refinement_leaves_p0_unchanged(cells):
    E = PixelSet.from_cells(0.25, cells)
    assert ce.p0_value(2, _refine(E), 3.3) == pytest.approx(ce.p0_value(2, E, 3.3), rel=1e-10, abs=1e-12)


@given(masks_2d, st.tuples(st.integers(-50, 50), st.integers(-50, 50)))
def test_translation_invariance(cells, shift):
    E = PixelSet.from_cells(0.25, cells)
    assert ce.fractional_perimeter(2, 0.5, E.translated(shift)) == ce.fractional_perimeter(2, 0.5, E)


@pytest.mark.parametrize("L,h", [(1.0, 1 / 16), (0.75, 1 / 8), (3.0, 1 / 4)])
def test_interval_riesz_energy(L, h):
    n = int(round(L / h))
    E = PixelSet(h, (0,), np.ones(n, dtype=bool))
    assert ce.riesz_energy(1, -0.5, E) == pytest.approx(-interval_pair_integral(L, 0.5), rel=1e-12)


def test_interval_perimeter_and_gap():
    # two unit intervals at distance g: P = 2 P(I) - 2 int_I int_J |x-y|^{-1-s}
    s = 0.5
    E = PixelSet.from_cells(0.125, [(k,) for k in list(range(8)) + list(range(12, 20))])
    single = 2.0 / (s * (1 - s))
    F = lambda z: z ** (1 - s) / (s * (1 - s))  # second antiderivative of z^{-1-s} up to sign
    cross = -(F(2.5) - 2 * F(1.5) + F(0.5))
    assert ce.fractional_perimeter(1, s, E) == pytest.approx(2 * single - 2 * cross, rel=1e-12)


def test_truncated_interval():
    E = PixelSet(0.05, (0,), np.ones(20, dtype=bool))
    for r, sigma in ((0.5, 0.0), (0.3, 0.5)):
        s = 1 + sigma
        G = lambda t: t ** (1 - s) / (1 - s) if s != 1 else math.log(t)
        H = lambda t: t ** (2 - s) / (2 - s)
        ref = -2 * ((G(1.0) - G(r)) - (H(1.0) - H(r)))
        assert ce.j_truncated(1, sigma, r, E) == pytest.approx(ref, rel=1e-12)
        assert ce.j_renormalized(1, sigma, r, E) == pytest.approx(ref - gamma_r_sigma(1, sigma, r))


def test_truncated_vanishes_beyond_diameter():
    E = shapes.pixel_ball(2, 1 / 8, 0.5)
    assert ce.j_truncated(2, 0.5, 5.0, E) == 0.0
    with pytest.raises(ce.ResolutionTooCoarse):
        ce.j_truncated(2, 0.5, 0.2, E)


@pytest.mark.parametrize("sigma", [0.25, 0.5, 0.75])
def test_disk_perimeter_approaches_exact_value(sigma):
    # staircase boundaries converge slowly (about h^{1 - sigma}), but monotonically here
    exact = balls.ball_fractional_perimeter(2, sigma, 1.0)
    errors = [ce.fractional_perimeter(2, sigma, shapes.pixel_ball(2, 1 / n, 1.0)) / exact - 1 for n in (16, 32, 64)]
    assert all(0 < b < a for a, b in zip(errors, errors[1:]))
    assert errors[-1] < 0.07


def test_disk_riesz_and_p0_approach_exact_values():
    E = shapes.pixel_ball(2, 1 / 64, 1.0)
    assert ce.riesz_energy(2, -1.0, E) == pytest.approx(balls.ball_riesz_energy(2, -1.0, 1.0), rel=0.01)
    assert ce.p0_perimeter(2, E, [4.0, 8.0]) == pytest.approx(balls.ball_p0_perimeter(2, 1.0), rel=0.05)


def test_p0_plateau_and_errors():
    E = shapes.pixel_ball(2, 1 / 16, 0.5)
    a, b = ce.p0_value(2, E, 2.0), ce.p0_value(2, E, 6.0)
    assert a == pytest.approx(b, rel=1e-10)
    with pytest.raises(ce.NoPlateau):
        ce.p0_perimeter(2, E, [0.5, 2.0])
    with pytest.raises(ce.ResolutionTooCoarse):
        ce.p0_value(2, E, 0.05)


def test_sigma_ranges():
    E = shapes.pixel_ball(2, 1 / 8, 0.5)
    with pytest.raises(ce.SigmaOutOfRange):
        ce.fractional_perimeter(2, 0.0, E)
    with pytest.raises(Exception):
        ce.riesz_energy(2, 0.5, E)


def test_density_energy_is_quadratic():
    E = shapes.pixel_ball(2, 1 / 16, 0.5)
    rho = DensityField(E.h, E.origin, 0.3 * E.mask)
    assert ce.riesz_energy(2, -1.0, rho) == pytest.approx(0.09 * ce.riesz_energy(2, -1.0, E), rel=1e-12)


def test_residual_is_the_gradient():
    # the objective is quadratic in each cell value, so central differences are exact
    rng = np.random.default_rng(0)
    h = 1 / 8
    vals = 0.25 + 0.5 * rng.random((6, 6))
    rho = DensityField(h, (-3, -3), vals)
    g = ConfinementSpec.for_sigma(-1.0, 4.0, -1.0)
    res = ce.first_variation_residual(2, -1.0, rho, g).values
    t = 0.1
    for idx in [(0, 0), (2, 3), (5, 1)]:
        up, down = vals.copy(), vals.copy()
        up[idx] += t
        down[idx] -= t
        fu = ce.riesz_energy_confined(2, -1.0, DensityField(h, rho.origin, up), g)
        fd = ce.riesz_energy_confined(2, -1.0, DensityField(h, rho.origin, down), g)
        assert (fu - fd) / (2 * t) == pytest.approx(h ** 2 * res[idx], rel=1e-9)


def test_confinement_integral():
    rho = DensityField(0.5, (0, 0), [[1.0]])
    g = ConfinementSpec.for_sigma(1.0, 2.0, -1.0)
    centre = math.hypot(0.25, 0.25)
    assert ce.confinement_integral(rho, g) == pytest.approx(0.25 * (1 + 2 * centre))
    assert ce.confinement_integral(rho, None) == 0.0


def test_error_estimate_and_limit():
    E = shapes.pixel_ball(2, 1 / 16, 0.5)
    value, err = ce.with_error_estimate(ce.fractional_perimeter, 2, 0.5, E)
    assert err < 1e-9 * value
    assert ce.renormalized_limit(2, 0.5, 3.0, 2.0) == pytest.approx(3.0 - 2.0 * gamma_sigma(2, 0.5))


def test_quadrature_spec_validation():
    with pytest.raises(Exception):
        ce.QuadratureSpec(0)
    assert ce.QuadratureSpec(4).near == (2.0, 14)
    assert ce.QuadratureSpec(4).refined() == ce.QuadratureSpec(6, 4.0)


def test_empty_set():
    E = PixelSet.empty(0.1, 2)
    assert ce.fractional_perimeter(2, 0.5, E) == 0.0
    assert ce.riesz_energy(2, -1.0, E) == 0.0
