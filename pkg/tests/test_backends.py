"""The compiled extension and the numpy fallback agree routine by routine."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

import hsriesz
from hsriesz import _fallback
from hsriesz.discrete_energy import _cell_layout

compiled = pytest.importorskip("hsriesz._kernels")


def test_compiled_backend_selected():
    assert hsriesz.BACKEND == "compiled"


@given(st.integers(1, 3), st.integers(2, 300), st.floats(0.0, 0.5), st.floats(0.5, 3.5), st.integers(0, 10 ** 6))
def test_pair_sum_agrees(d, n, r_zero, s, seed):
    rng = np.random.default_rng(seed)
    pts = rng.random((n, d))
    size = max(r_zero, 0.1)
    sorted_pts, starts, coords = _cell_layout(pts, size)
    a = compiled.pair_sum(sorted_pts, starts, coords, size, s, r_zero, 1)
    b = _fallback.pair_sum(sorted_pts, starts, coords, size, s, r_zero, 1)
    assert a == pytest.approx(b, rel=1e-12)
    assert compiled.pair_sum(sorted_pts, starts, coords, size, s, r_zero, 4) == a


@given(st.integers(1, 3), st.integers(0, 200), st.floats(0.01, 0.2), st.integers(0, 10 ** 6))
def test_first_violation_agrees(d, n, dmin, seed):
    pts = np.random.default_rng(seed).random((n, d))
    assert compiled.first_violation(pts, dmin) == _fallback.first_violation(pts, dmin)


def _epoch_inputs(seed, n=25, moves=400, d=2, eps=0.05):
    rng = np.random.default_rng(seed)
    x = np.ascontiguousarray(np.argwhere(np.ones((5, 5))) * 2.5 * eps, dtype=np.float64)
    who = rng.integers(0, n, moves).astype(np.int64)
    step = rng.normal(scale=0.5 * eps, size=(moves, d))
    teleport = (rng.random(moves) < 0.05).astype(np.uint8)
    partner = rng.integers(0, n, moves).astype(np.int64)
    direction = rng.normal(size=(moves, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    uniform = rng.random(moves)
    return x, who, step, teleport, partner, direction, uniform


@pytest.mark.parametrize("g_mode", [0, 1])
def test_anneal_epoch_agrees(g_mode):
    runs = []
    for impl in (compiled, _fallback):
        x, who, step, teleport, partner, direction, uniform = _epoch_inputs(7)
        best_x = x.copy()
        out = impl.anneal_epoch(x, who, step, teleport, partner, direction, uniform, 1e-3, 0.1, 1.0, 0.0,
                                2e-4, 1e-2, g_mode, -1.0, 10.0, 1.0, 0.0, 0.0, best_x)
        runs.append((out, x.copy(), best_x.copy()))
    (ea, ba, na), xa, bxa = runs[0]
    (eb, bb, nb), xb, bxb = runs[1]
    assert na == nb and na > 0
    np.testing.assert_allclose(xa, xb, rtol=0, atol=1e-12)
    np.testing.assert_allclose(bxa, bxb, rtol=0, atol=1e-12)
    assert ea == pytest.approx(eb, rel=1e-10, abs=1e-14)
