import math
import pickle

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from hsriesz import kernels
from hsriesz.kernels import (
    FORBIDDEN,
    ConfinementSpec,
    KernelSpec,
    NonIntegrableSigma,
    RegimeMismatch,
    gamma_r_sigma,
    gamma_sigma,
    is_forbidden,
    mesoscale_schedule,
    potential,
)


def test_forbidden_sentinel_does_not_mix_with_numbers():
    assert is_forbidden(potential(KernelSpec.make(2, -1.0, 0.1), 0.1))
    with pytest.raises(TypeError):
        FORBIDDEN + 1.0
    assert pickle.loads(pickle.dumps(FORBIDDEN)) is FORBIDDEN


def test_potential_pieces():
    spec = KernelSpec.make(2, 0.5, 0.1, 0.5)
    assert is_forbidden(potential(spec, 0.19))
    assert potential(spec, 0.2) == 0.0
    assert potential(spec, 0.49) == 0.0
    assert potential(spec, 0.5) == pytest.approx(-(0.5 ** -2.5))
    integ = KernelSpec.make(2, -1.0, 0.1)
    assert potential(integ, 0.2) == pytest.approx(-(0.2 ** -1.0))
    assert integ.regime == "integrable" and spec.regime == "regularized"


def test_potential_values_rejects_inadmissible():
    spec = KernelSpec.make(2, -1.0, 0.1)
    with pytest.raises(Exception):
        kernels.potential_values(spec, np.array([0.1]))


@given(st.integers(1, 3), st.floats(0.0, 0.99), st.floats(0.001, 1.0))
def test_gamma_r_matches_quadrature(d, sigma, r):
    val, _ = integrate.quad(lambda t: t ** (-1.0 - sigma), r, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)
    ref = -2.0 * math.pi ** (d / 2) / math.gamma(d / 2) * val
    assert gamma_r_sigma(d, sigma, r) == pytest.approx(ref, rel=1e-9, abs=1e-13)


@given(st.integers(1, 3), st.floats(0.001, 0.9))
def test_gamma_r_continuous_at_sigma_zero(d, r):
    assert gamma_r_sigma(d, 1e-12, r) == pytest.approx(gamma_r_sigma(d, 0.0, r), rel=1e-8, abs=1e-12)


@given(st.integers(1, 3), st.floats(0.05, 0.95))
def test_gamma_r_tends_to_minus_gamma(d, sigma):
    # gamma_r + r^{-sigma} gamma^sigma = gamma^sigma, exactly
    r = 1e-3
    assert gamma_r_sigma(d, sigma, r) + r ** -sigma * gamma_sigma(d, sigma) == pytest.approx(gamma_sigma(d, sigma))


def test_gamma_requires_regularized_regime():
    with pytest.raises(RegimeMismatch):
        KernelSpec.make(2, -1.0, 0.1).gamma()


def test_default_schedule_is_admissible_along_a_sweep():
    for sigma in (0.0, 0.25, 0.5, 0.75):
        s = mesoscale_schedule(sigma)
        eps = [10.0 ** -k for k in range(2, 9)]
        a = [s.admissibility(e) for e in eps]
        assert all(x[0] > y[0] for x, y in zip(a, a[1:]))
        assert a[-1][1] < a[0][1]
        assert all(s(e) > 2 * e for e in eps)


def test_confinement_spec():
    g = ConfinementSpec.for_sigma(-1.0, 10.0, -1.0)
    assert g.radial(np.array([0.5])) == pytest.approx([4.0])
    with pytest.raises(NonIntegrableSigma):
        ConfinementSpec.for_sigma(-1.0, 10.0, 0.5)
    with pytest.raises(Exception):
        ConfinementSpec(0.0, -1.0, 1.0)
