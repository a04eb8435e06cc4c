import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hsriesz import continuum_energy as ce, optimizer
from hsriesz.core import Ball, DensityField, ParameterError, find_hard_sphere_violation, validate_configuration
from hsriesz.discrete_energy import energy_confined, energy_renormalized
from hsriesz.kernels import ConfinementSpec, KernelSpec, RegimeMismatch
from hsriesz.packing import LatticeSpec, lattice_points_in

G = ConfinementSpec.for_sigma(-1.0, 10.0, -1.0)


def test_lattice_seed_is_compact_and_admissible():
    spec = KernelSpec.make(2, -1.0, 0.05)
    c = optimizer.lattice_seed(spec, 19)
    assert len(c) == 19
    r = np.sqrt(np.sum(c.points ** 2, axis=1))
    assert r.max() == pytest.approx(0.2 * math.sqrt(3), rel=1e-12) or r.max() <= 0.4 + 1e-12


def test_random_admissible_and_infeasible():
    spec = KernelSpec.make(2, -1.0, 0.05)
    c = optimizer.random_admissible(spec, 30, 1.0, seed=1)
    assert len(c) == 30 and np.all(np.abs(c.points) <= 0.5)
    with pytest.raises(optimizer.InfeasibleInit):
        optimizer.random_admissible(spec, 500, 0.3, seed=1, max_tries=2000)


@given(st.integers(0, 10 ** 6))
@settings(max_examples=8)
def test_anneal_never_worse_and_always_admissible(seed):
    spec = KernelSpec.make(2, -1.0, 0.05)
    init = optimizer.random_admissible(spec, 25, 1.0, seed=seed)
    out, trace = optimizer.anneal_discrete("confined", spec, init=init, g=G,
                                           schedule=optimizer.AnnealSchedule(epochs=10, seed=seed))
    assert find_hard_sphere_violation(out.points, 0.05) is None
    assert energy_confined(spec, G, out) <= energy_confined(spec, G, init) + 1e-15
    assert len(trace) == 10
    best = [row.best_energy for row in trace]
    assert all(b <= a for a, b in zip(best, best[1:]))


def test_anneal_is_deterministic_per_seed():
    spec = KernelSpec.make(2, 0.5, 0.05, 0.2)
    sched = optimizer.AnnealSchedule(epochs=5, seed=11)
    a, ta = optimizer.anneal_discrete("renormalized", spec, n=20, schedule=sched)
    b, tb = optimizer.anneal_discrete("renormalized", spec, n=20, schedule=sched)
    assert a == b and ta == tb
    assert energy_renormalized(spec, a) <= energy_renormalized(spec, optimizer.lattice_seed(spec, 20))


def test_anneal_with_custom_profile_uses_the_profile():
    spec = KernelSpec.make(2, -1.0, 0.05)
    g = ConfinementSpec(0.0, 1.0, 1.0, profile=lambda t: 5.0 * t * t)
    out, _ = optimizer.anneal_discrete("confined", spec, n=10, g=g, schedule=optimizer.AnnealSchedule(epochs=3))
    assert len(out) == 10


def test_anneal_argument_checks():
    integ = KernelSpec.make(2, -1.0, 0.05)
    reg = KernelSpec.make(2, 0.5, 0.05, 0.2)
    with pytest.raises(ParameterError):
        optimizer.anneal_discrete("magic", integ, n=3)
    with pytest.raises(RegimeMismatch):
        optimizer.anneal_discrete("confined", reg, n=3, g=G)
    with pytest.raises(RegimeMismatch):
        optimizer.anneal_discrete("renormalized", integ, n=3)
    with pytest.raises(ParameterError):
        optimizer.anneal_discrete("energy", integ)
    with pytest.raises(ParameterError):
        optimizer.AnnealSchedule(cooling=1.0)


def test_density_descent_decreases_and_stays_in_range():
    rho, trace = optimizer.minimize_density(2, -1.0, G, ((-1, -1), (1, 1)), 1 / 16, steps=30)
    objs = [row.objective for row in trace]
    assert all(b <= a + 1e-15 for a, b in zip(objs, objs[1:]))
    assert rho.values.min() >= 0.0 and rho.values.max() <= 1.0


def test_density_descent_fixed_point_satisfies_kkt():
    h = 1 / 32
    rho, _ = optimizer.minimize_density(2, -1.0, G, ((-1, -1), (1, 1)), h, steps=300)
    assert optimizer.kkt_check(2, -1.0, rho, G, 10 * h).satisfied
    sd = optimizer.shape_diagnostics(rho)
    assert sd.bang_bang_index < 0.1 and sd.ball_deficit < 0.1
    # about 2h above the continuum optimum 1/2 from the discrete self-interaction
    radius = math.sqrt(sd.support_measure / math.pi)
    assert abs(radius - optimizer.optimal_ball_radius(-1.0, -1.0, 10.0)) < 3 * h


def test_density_descent_boundary_and_sigma_errors():
    with pytest.raises(optimizer.SupportTouchesBoundary):
        optimizer.minimize_density(2, -1.0, G, ((-0.3, -0.3), (0.3, 0.3)), 1 / 16, steps=20)
    with pytest.raises(Exception):
        optimizer.minimize_density(2, 0.5, G, ((-1, -1), (1, 1)), 1 / 16)


def test_kkt_check_flags_a_bad_density():
    h = 1 / 16
    rho = optimizer.box_density(h, (-1, -1), (1, 1), 0.5)
    report = optimizer.kkt_check(2, -1.0, rho, G, 10 * h)
    assert not report.satisfied and report.transition_cells > 0


def test_diagnostics_of_pixel_disk_and_soft_profile():
    h = 1 / 64
    axes = (np.arange(-64, 64) + 0.5) * h
    X, Y = np.meshgrid(axes, axes, indexing="ij")
    r = np.hypot(X, Y)
    disk = DensityField(h, (-64, -64), (r < 0.5).astype(float))
    # only the staircase boundary differs from the continuous reference ball
    assert optimizer.shape_diagnostics(disk).ball_deficit < 0.01
    soft = DensityField(h, (-64, -64), np.clip(1.5 - 2 * r, 0, 1))
    assert optimizer.shape_diagnostics(soft).bang_bang_index > 0.3
    with pytest.raises(optimizer.EmptySubject):
        optimizer.shape_diagnostics(DensityField(h, (0, 0), np.zeros((3, 3))))


def test_configuration_diagnostics_of_a_lattice_disk():
    eps = 0.02
    pts = lattice_points_in(LatticeSpec(2, 2 * eps), Ball.centered(2, 0.5))
    sd = optimizer.shape_diagnostics(validate_configuration(pts, eps))
    assert sd.ball_deficit < 0.05
    assert sd.support_measure == pytest.approx(math.pi * 0.25, rel=0.05)


def test_optimal_ball_radius():
    assert optimizer.optimal_ball_radius(-1.0, -1.0, 10.0) == pytest.approx(0.5)
    assert optimizer.optimal_ball_radius(-1.0, 1.0, 10.0) == 0.0
    assert optimizer.optimal_ball_radius(-0.5, -1.0, 10.0) is None


def test_optimal_ball_radius_agrees_with_continuum_energy():
    # Phi(B_R) is minimized at R*: compare neighbours on a fine pixel grid
    from hsriesz import shapes

    h = 1 / 64
    vals = {}
    for R in (0.4, 0.5, 0.6):
        E = shapes.pixel_ball(2, h, R)
        vals[R] = ce.riesz_energy_confined(2, -1.0, E, G)
    assert vals[0.5] < vals[0.4] and vals[0.5] < vals[0.6]
