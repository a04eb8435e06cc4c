"""Minimization: annealing of hard-sphere configurations, projected descent on densities.

Also shape diagnostics: distance of a set or density from the
equal-measure ball at its barycenter, and how far a density is from being
a characteristic function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import signal

from . import _backend
from .bridge import MeasureGrid, smoothed_measure
from .continuum_energy import (
    DEFAULT_QUADRATURE,
    QuadratureSpec,
    first_variation_residual,
    riesz_energy_confined,
)
from .core import (
    Ball,
    Configuration,
    DensityField,
    HsRieszError,
    ParameterError,
    PixelSet,
    ScaledEmpiricalMeasure,
    find_hard_sphere_violation,
    mass_weight,
    unit_ball_volume,
    validate_configuration,
)
from .discrete_energy import energy_breakdown
from .kernels import ConfinementSpec, KernelSpec, NonIntegrableSigma, RegimeMismatch, is_forbidden
from .packing import LatticeSpec, lattice_points_in


class InfeasibleInit(HsRieszError):
    pass


class SupportTouchesBoundary(HsRieszError):
    pass


class EmptySubject(HsRieszError):
    pass


OBJECTIVES = ("energy", "confined", "renormalized")


# -----------------------------
# Annealing
# -----------------------------

@dataclass(frozen=True)
class AnnealSchedule:
    """Metropolis schedule; ``None`` fields resolve from the initial state.

    ``initial_temperature`` defaults to the median |pair energy| of the
    initial configuration and ``moves_per_epoch`` to 50 N.
    """

    initial_temperature: Optional[float] = None
    cooling: float = 0.95
    moves_per_epoch: Optional[int] = None
    epochs: int = 200
    move_scale: float = 0.5
    seed: int = 0
    teleport_rate: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.cooling < 1.0:
            raise ParameterError("cooling must lie in (0, 1)")
        if self.initial_temperature is not None and not self.initial_temperature > 0:
            raise ParameterError("initial_temperature must be positive")
        if self.epochs < 0 or (self.moves_per_epoch is not None and self.moves_per_epoch < 0):
            raise ParameterError("epochs and moves_per_epoch must be nonnegative")
        if not self.move_scale > 0:
            raise ParameterError("move_scale must be positive")
        if not 0.0 <= self.teleport_rate <= 1.0:
            raise ParameterError("teleport_rate must lie in [0, 1]")


@dataclass(frozen=True)
class TraceRow:
    epoch: int
    temperature: float
    best_energy: float
    acceptance_rate: float

    CSV_HEADER = ("epoch", "temperature", "best_energy", "acceptance_rate")

    def csv_row(self) -> tuple:
        return (self.epoch, repr(self.temperature), repr(self.best_energy), repr(self.acceptance_rate))


def lattice_seed(spec: KernelSpec, n: int) -> Configuration:
    """The n points of the contact lattice (spacing 2 epsilon) nearest the origin."""
    d, eps = spec.d, spec.epsilon
    if n <= 0:
        return validate_configuration(np.zeros((0, d)), eps, d)
    radius = 2.0 * eps * ((n / unit_ball_volume(d)) ** (1.0 / d) + 2.0)
    pts = lattice_points_in(LatticeSpec(d, 2.0 * eps), Ball(tuple([0.0] * d), radius))
    r2 = np.sum(pts * pts, axis=1)
    keep = np.argsort(r2, kind="stable")[:n]
    return validate_configuration(pts[np.sort(keep)], eps, d)


def random_admissible(spec: KernelSpec, n: int, side: float, seed: int = 0, max_tries: int = 1000000) -> Configuration:
    """Random sequential insertion of n hard spheres with centres in the cube [-side/2, side/2)^d."""
    d, eps = spec.d, spec.epsilon
    rng = np.random.default_rng(seed)
    pts = np.zeros((0, d))
    tries = 0
    while len(pts) < n:
        tries += 1
        if tries > max_tries:
            raise InfeasibleInit(f"placed only {len(pts)} of {n} spheres")
        q = (rng.random(d) - 0.5) * side
        if len(pts) == 0 or np.min(np.sum((pts - q) ** 2, axis=1)) >= (2.0 * eps) ** 2:
            pts = np.vstack([pts, q])
    return validate_configuration(pts, eps, d)


def _objective_value(objective: str, spec: KernelSpec, g: Optional[ConfinementSpec], config: Configuration) -> float:
    br = energy_breakdown(spec, config, g=g if objective == "confined" else None,
                          renormalize=objective == "renormalized")
    if is_forbidden(br.total):
        raise InfeasibleInit("configuration violates the hard-sphere constraint")
    return float(br.total)


def _median_pair_energy(spec: KernelSpec, config: Configuration, g: Optional[ConfinementSpec]) -> float:
    pts = config.points
    w = mass_weight(spec.d, spec.epsilon)
    if len(pts) >= 2:
        iu = np.triu_indices(len(pts), k=1)
        r = np.sqrt(np.sum((pts[iu[0]] - pts[iu[1]]) ** 2, axis=1))
        vals = np.where(r >= spec.plateau_radius, r ** (-spec.exponent), 0.0) * 2.0 * w * w
        vals = vals[vals > 0]
        if len(vals):
            return float(np.median(vals))
    if g is not None and len(pts):
        v = float(np.median(np.abs(g(pts)))) * w
        if v > 0:
            return v
    return w


def anneal_discrete(objective: str, spec: KernelSpec, n: Optional[int] = None,
                    init: Optional[Configuration] = None, g: Optional[ConfinementSpec] = None,
                    schedule: AnnealSchedule = AnnealSchedule()) -> Tuple[Configuration, List[TraceRow]]:
    """Best configuration seen by a Metropolis chain, with a per-epoch trace.

    Moves displace one sphere by a Gaussian step (std move_scale * epsilon)
    or, with probability teleport_rate, place it in contact with a random
    partner. Moves that violate the hard-sphere constraint are rejected, so
    every state is admissible.
    """
    if objective not in OBJECTIVES:
        raise ParameterError(f"objective must be one of {OBJECTIVES}")
    if objective == "confined" and not spec.params.integrable:
        raise RegimeMismatch("the confined objective needs sigma < 0")
    if objective == "renormalized" and spec.params.integrable:
        raise RegimeMismatch("the renormalized objective needs sigma in [0, 1)")
    if objective != "confined":
        g = None
    if init is None:
        if n is None or n < 1:
            raise ParameterError("give N >= 1 or an initial configuration")
        init = lattice_seed(spec, n)
    if init.epsilon != spec.epsilon or init.d != spec.d:
        raise InfeasibleInit("initial configuration does not match the kernel")
    if find_hard_sphere_violation(init.points, init.epsilon) is not None:
        raise InfeasibleInit("initial configuration violates the hard-sphere constraint")
    if n is not None and n != len(init):
        raise ParameterError("N differs from the initial configuration size")
    N, d = len(init), spec.d
    x = np.ascontiguousarray(init.points, dtype=np.float64).copy()
    best_x = x.copy()
    energy = _objective_value(objective, spec, g, init)
    best = energy
    temp = schedule.initial_temperature or _median_pair_energy(spec, init, g)
    moves = schedule.moves_per_epoch if schedule.moves_per_epoch is not None else 50 * N
    w = mass_weight(d, spec.epsilon)
    g_mode, c1, c2, power, g_func = 0, 0.0, 0.0, 1.0, None
    if g is not None:
        if g.profile is None:
            g_mode, c1, c2, power = 1, g.c1, g.c2, g.power
        else:
            g_func = g
    rng = np.random.default_rng(schedule.seed)
    trace: List[TraceRow] = []
    for epoch in range(schedule.epochs if N > 0 else 0):
        who = rng.integers(0, N, size=moves).astype(np.int64)
        step = rng.normal(scale=schedule.move_scale * spec.epsilon, size=(moves, d))
        teleport = (rng.random(moves) < schedule.teleport_rate).astype(np.uint8)
        partner = rng.integers(0, N, size=moves).astype(np.int64)
        direction = rng.normal(size=(moves, d))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        uniform = rng.random(moves)
        energy, best, accepted = _backend.anneal_epoch(
            x, who, np.ascontiguousarray(step), teleport, partner, np.ascontiguousarray(direction), uniform,
            float(temp), 2.0 * spec.epsilon, float(spec.exponent), float(spec.plateau_radius), 2.0 * w * w, w,
            g_mode, float(c1), float(c2), float(power), float(energy), float(best), best_x, g_func=g_func)
        trace.append(TraceRow(epoch, float(temp), float(best), accepted / moves if moves else 0.0))
        temp *= schedule.cooling
    out = validate_configuration(best_x, spec.epsilon, d)
    # incremental bookkeeping drifts; never return something worse than the start
    if N > 0 and _objective_value(objective, spec, g, out) > _objective_value(objective, spec, g, init):
        out = init
    return out, trace


# -----------------------------
# Density descent
# -----------------------------

@dataclass(frozen=True)
class DescentRow:
    step: int
    objective: float
    max_change: float

    CSV_HEADER = ("step", "objective", "max_change")

    def csv_row(self) -> tuple:
        return (self.step, repr(self.objective), repr(self.max_change))


def box_density(h: float, lo: Sequence[float], hi: Sequence[float], level: float) -> DensityField:
    """Constant density on the cells of the box [lo, hi)."""
    a = [int(math.floor(v / h + 1e-9)) for v in lo]
    b = [int(math.ceil(v / h - 1e-9)) for v in hi]
    return DensityField(h, tuple(a), np.full(tuple(q - p for p, q in zip(a, b)), float(level)))


def minimize_density(d: int, sigma: float, g: ConfinementSpec, domain: Tuple[Sequence[float], Sequence[float]],
                     h: float, steps: int = 200, step_size: float = 50.0, init: Optional[DensityField] = None,
                     tol: float = 0.0, quad: QuadratureSpec = DEFAULT_QUADRATURE) -> Tuple[DensityField, List[DescentRow]]:
    """Projected gradient descent of the confined Riesz energy over rho in [0, 1] per cell.

    The gradient with respect to a cell value is h^d times the first
    variation residual. The objective is concave in rho, so every clamped
    step decreases it; iteration stops at a fixed point or after ``steps``.
    Raises SupportTouchesBoundary if the result has mass on the outer
    layer of the domain.
    """
    if not -d < sigma < 0:
        raise NonIntegrableSigma("density descent is for sigma in (-d, 0)")
    rho = init if init is not None else box_density(h, domain[0], domain[1], 0.5)
    values = rho.values.copy()
    trace: List[DescentRow] = []
    field = DensityField(h, rho.origin, values)
    current = riesz_energy_confined(d, sigma, field, g, quad)
    for k in range(steps):
        res = first_variation_residual(d, sigma, field, g, quad).values
        proposal = np.clip(values - step_size * res, 0.0, 1.0)
        change = float(np.max(np.abs(proposal - values))) if values.size else 0.0
        if change <= tol:
            trace.append(DescentRow(k, current, change))
            break
        cand = DensityField(h, rho.origin, proposal)
        value = riesz_energy_confined(d, sigma, cand, g, quad)
        trial = step_size
        while value > current and trial > 1e-12:
            # guards against rounding only: concavity makes full steps descend
            trial *= 0.5
            proposal = np.clip(values - trial * res, 0.0, 1.0)
            cand = DensityField(h, rho.origin, proposal)
            value = riesz_energy_confined(d, sigma, cand, g, quad)
        if value > current:
            trace.append(DescentRow(k, current, 0.0))
            break
        values, field, current = proposal, cand, value
        trace.append(DescentRow(k, current, change))
    if values.ndim and values.size:
        edge = np.zeros(values.shape, dtype=bool)
        for axis in range(values.ndim):
            sl = [slice(None)] * values.ndim
            sl[axis] = 0
            edge[tuple(sl)] = True
            sl[axis] = -1
            edge[tuple(sl)] = True
        if np.any(values[edge] > 0):
            raise SupportTouchesBoundary("minimizer reaches the domain boundary; enlarge the box")
    return field, trace


@dataclass(frozen=True)
class KKTReport:
    max_violation: float
    transition_cells: int
    satisfied: bool


def kkt_check(d: int, sigma: float, rho: DensityField, g: ConfinementSpec, tol: float,
              quad: QuadratureSpec = DEFAULT_QUADRATURE) -> KKTReport:
    """Sign conditions of the residual: >= -tol where rho = 0, <= tol where rho = 1, |.| <= tol between."""
    res = first_variation_residual(d, sigma, rho, g, quad).values
    v = rho.values
    zero = v <= 0.0
    one = v >= 1.0
    mid = ~(zero | one)
    viol = np.concatenate([np.maximum(-res[zero], 0.0), np.maximum(res[one], 0.0), np.abs(res[mid])])
    worst = float(viol.max()) if viol.size else 0.0
    return KKTReport(worst, int(mid.sum()), worst <= tol)


# -----------------------------
# Shape diagnostics
# -----------------------------

@dataclass(frozen=True)
class ShapeDiagnostics:
    ball_deficit: float
    bang_bang_index: float
    support_measure: float


def _grid_values(subject) -> Tuple[float, Tuple[int, ...], np.ndarray]:
    if isinstance(subject, PixelSet):
        return subject.h, subject.origin, subject.mask.astype(np.float64)
    if isinstance(subject, (DensityField, MeasureGrid)):
        return subject.h, subject.origin, np.asarray(subject.values, dtype=np.float64)
    raise TypeError(f"unsupported subject {type(subject).__name__}")


def configuration_profile(config: Union[Configuration, ScaledEmpiricalMeasure], smoothing: float = 2.0) -> MeasureGrid:
    """Smoothed measure averaged over discs of radius ``smoothing`` * epsilon.

    The raw smoothed measure is a union of disjoint balls; averaging over a
    few sphere radii fills the gaps between them so a threshold at 1/2
    recovers the occupied region.
    """
    m = config if isinstance(config, ScaledEmpiricalMeasure) else ScaledEmpiricalMeasure(config)
    grid = smoothed_measure(m)
    d = grid.d
    k = int(math.ceil(smoothing * m.epsilon / grid.h))
    ax = np.arange(-k, k + 1)
    c = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1)
    kernel = (np.sum(c * c, axis=-1) <= k * k).astype(np.float64)
    kernel /= kernel.sum()
    padded = np.pad(grid.values, k)
    vals = signal.fftconvolve(padded, kernel, mode="same")
    vals = np.maximum(vals, 0.0)
    return MeasureGrid(grid.h, tuple(o - k for o in grid.origin), vals)


def shape_diagnostics(subject, level: float = 0.5) -> ShapeDiagnostics:
    """Ball deficit and bang-bang index of a set, density or configuration.

    The support is {value > level}; the reference ball has the support's
    measure and is centred at the barycenter of the support. Configurations
    are first turned into a profile by :func:`configuration_profile`.
    """
    if isinstance(subject, (Configuration, ScaledEmpiricalMeasure)):
        if len(subject) == 0:
            raise EmptySubject("empty configuration")
        subject = configuration_profile(subject)
    h, origin, vals = _grid_values(subject)
    if vals.size == 0 or not np.any(vals > 0):
        raise EmptySubject("subject has no mass")
    d = vals.ndim
    support = vals > level
    cells = int(support.sum())
    if cells == 0:
        raise EmptySubject("no cell exceeds the threshold")
    axes = [(np.arange(n) + o + 0.5) * h for n, o in zip(vals.shape, origin)]
    centres = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    bary = centres[support].mean(axis=0)
    measure = cells * h ** d
    radius = (measure / unit_ball_volume(d)) ** (1.0 / d)
    # reference ball rasterized by cell centres on a window covering both
    lo = np.minimum(np.floor((bary - radius) / h).astype(int) - 1, np.array(origin))
    hi = np.maximum(np.ceil((bary + radius) / h).astype(int) + 1, np.array(origin) + np.array(vals.shape))
    shape = tuple(hi - lo)
    S = np.zeros(shape, dtype=bool)
    S[tuple(slice(o - a, o - a + n) for o, a, n in zip(origin, lo, vals.shape))] = support
    wax = [(np.arange(a, b) + 0.5) * h for a, b in zip(lo, hi)]
    wc = np.stack(np.meshgrid(*wax, indexing="ij"), axis=-1)
    B = np.sum((wc - bary) ** 2, axis=-1) < radius * radius
    deficit = float(np.sum(S ^ B)) / cells
    clipped = np.clip(vals, 0.0, 1.0)
    mass = float(clipped.sum())
    soft = (clipped > 0.05) & (clipped < 0.95)
    bang = float(clipped[soft].sum()) / mass if mass > 0 else 0.0
    return ShapeDiagnostics(deficit, bang, measure)


def optimal_ball_radius(sigma: float, c1: float, c2: float, d: int = 2) -> Optional[float]:
    """Radius of the best ball for G(t) = c1 + c2 t^{-sigma} in d=2 with sigma=-1 (closed form)."""
    if d != 2 or sigma != -1.0:
        return None
    # Phi(B_R) = -(16 pi / 3) R^3 + pi c1 R^2 + (2 pi c2 / 3) R^3
    if c2 <= 8.0 or c1 >= 0.0:
        return 0.0
    return -c1 / (c2 - 8.0)
