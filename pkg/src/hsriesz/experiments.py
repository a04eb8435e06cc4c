"""Built-in experiments and the manifest-driven runner.

A manifest is an INI file::

    [experiment]
    name = bridge-sweep
    seed = 0
    threads = 1

    [parameters]
    epsilons = 0.02, 0.01, 0.005

Unknown parameters are rejected; every default is written back to
``manifest.resolved.ini`` in the output directory together with
``results.csv`` and ``summary.ini``. The run passes iff every assertion
passes. Output files do not depend on the thread count.
"""

from __future__ import annotations

import configparser
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import _backend, balls, bridge, continuum_energy as ce, optimizer, shapes
from .core import Ball, ParameterError, packing_density
from .discrete_energy import energy, energy_renormalized
from .kernels import (
    ConfinementSpec,
    KernelSpec,
    gamma_R_zero,
    gamma_r_sigma,
    gamma_sigma,
    mesoscale_schedule,
    radial_quadrature,
)
from .packing import UniformDensity, estimate_box_density, recovery_configuration
from .serialization import format_value, write_csv, write_ini


@dataclass
class Assertion:
    name: str
    passed: bool
    detail: str


@dataclass
class ExperimentResult:
    header: Tuple[str, ...]
    rows: List[tuple]
    assertions: List[Assertion] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    defaults: Mapping[str, object]
    run: Callable[[Dict[str, object], "Context"], ExperimentResult]
    kernel: Optional[Tuple[str, str]] = None  # parameter names of (d, sigma) for the regime tag


@dataclass
class Context:
    seed: int
    threads: int
    pool: ThreadPoolExecutor

    def map(self, fn, items):
        """Results in the order of ``items`` regardless of completion order."""
        return list(self.pool.map(fn, items))


def _f(v: float) -> str:
    return repr(float(v))


def _strictly_decreasing(xs: Sequence[float]) -> bool:
    return all(b < a for a, b in zip(xs[:-1], xs[1:]))


# -----------------------------
# gamma-constants
# -----------------------------

def _gamma_constants(p, ctx) -> ExperimentResult:
    jobs = []
    for d in p["dims"]:
        for s in p["sigmas"]:
            for r in p["radii"]:
                jobs.append(("gamma_r", int(d), float(s), float(r)))
        for R in p["big_radii"]:
            jobs.append(("gamma_R0", int(d), 0.0, float(R)))

    def one(job):
        kind, d, s, r = job
        if kind == "gamma_r":
            closed = gamma_r_sigma(d, s, r)
            quad = -radial_quadrature(d, d + s, r, 1.0)
        else:
            closed = gamma_R_zero(d, r)
            quad = radial_quadrature(d, float(d), 1.0, r)
        rel = abs(closed - quad) / max(abs(quad), 1e-300) if closed != quad else 0.0
        return (kind, d, _f(s), _f(r), _f(closed), _f(quad), _f(rel)), rel

    out = ctx.map(one, jobs)
    worst = max(o[1] for o in out)
    n_r = sum(1 for j in jobs if j[0] == "gamma_r")
    return ExperimentResult(
        ("constant", "d", "sigma", "radius", "closed_form", "quadrature", "relative_error"),
        [o[0] for o in out],
        [Assertion("closed_forms_match_quadrature", worst <= p["tolerance"],
                   f"max relative error {worst:.3e} over {n_r} gamma_r and {len(jobs) - n_r} gamma_R0 points")])


# -----------------------------
# packing-rate
# -----------------------------

def _packing_rate(p, ctx) -> ExperimentResult:
    d = int(p["d"])
    sides = [float(r) for r in p["sides"]]
    res = ctx.map(lambda r: estimate_box_density(d, r, int(p["anneal_budget"]), ctx.seed), sides)
    C = packing_density(d)
    rows, excess = [], []
    for r, (count, dens) in zip(sides, res):
        e = (dens - C) * r
        excess.append(e)
        rows.append((_f(r), count, _f(dens), _f(C), _f(e)))
    lower_ok = all(dens >= C - 1e-12 for _, dens in res)
    ratio = max(excess) / min(excess) if min(excess) > 0 else math.inf
    return ExperimentResult(
        ("side", "count", "density", "optimal_density", "excess_times_side"), rows,
        [Assertion("density_at_least_optimal", lower_ok, f"min density {min(x[1] for x in res)!r}, C = {C!r}"),
         Assertion("excess_envelope_ratio", ratio < p["ratio_limit"], f"max/min of (density - C) r = {ratio:.4f}")])


# -----------------------------
# gamma-convergence-integrable
# -----------------------------

def _gamma_integrable(p, ctx) -> ExperimentResult:
    d, sigma, R = int(p["d"]), float(p["sigma"]), float(p["radius"])
    limit = balls.ball_riesz_energy(d, sigma, R)
    region = Ball.centered(d, R)

    def one(eps):
        spec = KernelSpec.make(d, sigma, eps)
        config = recovery_configuration(UniformDensity(1.0, region), eps)
        return len(config), float(energy(spec, config))

    epsilons = [float(e) for e in p["epsilons"]]
    res = ctx.map(one, epsilons)
    gaps = [abs(v - limit) for _, v in res]
    rows = [(_f(e), n, _f(v), _f(limit), _f(g), _f(g / abs(limit))) for e, (n, v), g in zip(epsilons, res, gaps)]
    final = gaps[-1] / abs(limit)
    return ExperimentResult(
        ("epsilon", "N", "discrete_energy", "continuum_energy", "gap", "relative_gap"), rows,
        [Assertion("gap_strictly_decreasing", _strictly_decreasing(gaps), "gaps " + ", ".join(f"{g:.6g}" for g in gaps)),
         Assertion("final_relative_gap", final < p["final_tolerance"], f"{final:.4%}")])


# -----------------------------
# confined-minimizer-shape and first-variation
# -----------------------------

def _confinement(p) -> ConfinementSpec:
    return ConfinementSpec.for_sigma(p["c1"], p["c2"], p["sigma"])


def _density_minimizer(p):
    w = float(p["half_width"])
    return optimizer.minimize_density(2, float(p["sigma"]), _confinement(p), ((-w, -w), (w, w)), float(p["h"]),
                                      steps=int(p["steps"]), step_size=float(p["step_size"]))


def _minimizer_shape(p, ctx) -> ExperimentResult:
    sigma, h = float(p["sigma"]), float(p["h"])
    g = _confinement(p)
    rho, trace = _density_minimizer(p)
    sd = optimizer.shape_diagnostics(rho)
    kkt = optimizer.kkt_check(2, sigma, rho, g, float(p["kkt_factor"]) * h)
    spec = KernelSpec.make(2, sigma, float(p["epsilon"]))
    sched_args = dict(epochs=int(p["epochs"]))

    def chain(seed):
        init = optimizer.random_admissible(spec, int(p["n_particles"]), float(p["init_side"]), seed=100 + seed)
        out, tr = optimizer.anneal_discrete("confined", spec, init=init, g=g,
                                            schedule=optimizer.AnnealSchedule(seed=seed, **sched_args))
        return optimizer.shape_diagnostics(out).ball_deficit, tr[-1].best_energy if tr else math.nan

    seeds = [int(s) for s in p["seeds"]]
    chains = ctx.map(chain, seeds)
    radius = math.sqrt(sd.support_measure / math.pi)
    rows = [("density", "", _f(sd.ball_deficit), _f(sd.bang_bang_index), _f(radius), _f(trace[-1].objective))]
    rows += [("anneal", s, _f(dfc), "", "", _f(e)) for s, (dfc, e) in zip(seeds, chains)]
    med = float(np.median([c[0] for c in chains]))
    return ExperimentResult(
        ("subject", "seed", "ball_deficit", "bang_bang_index", "support_radius", "objective"), rows,
        [Assertion("density_bang_bang", sd.bang_bang_index < p["bang_limit"], f"{sd.bang_bang_index:.4g}"),
         Assertion("density_ball_deficit", sd.ball_deficit < p["deficit_limit"], f"{sd.ball_deficit:.4g}"),
         Assertion("density_kkt", kkt.satisfied, f"max violation {kkt.max_violation:.4g} vs tolerance {p['kkt_factor'] * h:.4g}"),
         Assertion("anneal_median_deficit", med < p["anneal_deficit_limit"], f"median {med:.4g}")])


def _first_variation(p, ctx) -> ExperimentResult:
    sigma, h = float(p["sigma"]), float(p["h"])
    g = _confinement(p)
    rho, _ = _density_minimizer(p)
    res = ce.first_variation_residual(2, sigma, rho, g).values
    v = rho.values
    classes = [("rho_zero", v <= 0.0), ("rho_one", v >= 1.0), ("transition", (v > 0.0) & (v < 1.0))]
    rows = []
    for name, sel in classes:
        r = res[sel]
        rows.append((name, int(sel.sum()), _f(r.min()) if r.size else "", _f(r.max()) if r.size else ""))
    kkt = optimizer.kkt_check(2, sigma, rho, g, float(p["kkt_factor"]) * h)
    return ExperimentResult(
        ("cell_class", "cells", "min_residual", "max_residual"), rows,
        [Assertion("kkt_sign_conditions", kkt.satisfied,
                   f"max violation {kkt.max_violation:.4g} vs tolerance {p['kkt_factor'] * h:.4g}")])


# -----------------------------
# bridge-sweep
# -----------------------------

def _schedule(p):
    exp = p["schedule_exponent"]
    return mesoscale_schedule(float(p["sigma"]), None if exp == "default" else float(exp), float(p["schedule_scale"]))


def _bridge_sweep(p, ctx) -> ExperimentResult:
    d, sigma, R = int(p["d"]), float(p["sigma"]), float(p["radius"])
    sched = _schedule(p)

    def one(eps):
        spec = KernelSpec.make(d, sigma, eps, sched(eps))
        m = bridge.set_to_measure(Ball.centered(d, R), spec)
        return bridge.energy_bridge_report(m, spec), abs(spec.gamma())

    epsilons = [float(e) for e in p["epsilons"]]
    reps = ctx.map(one, epsilons)
    mass_ratio = [r.mass_gap / r.scale for r, _ in reps]
    energy_ratio = [r.energy_gap / (gam * r.scale) for r, gam in reps]
    ren = [r.renormalized_gap for r, _ in reps]
    rows = [r.csv_row() + (_f(a), _f(b)) for (r, _), a, b in zip(reps, mass_ratio, energy_ratio)]
    lim = float(p["ratio_limit"])

    def stable(xs):
        return all(1.0 / lim <= x / xs[0] <= lim for x in xs)

    return ExperimentResult(
        bridge.BridgeReport.CSV_HEADER + ("mass_ratio", "energy_ratio"), rows,
        [Assertion("mass_ratio_stable", stable(mass_ratio), "ratios " + ", ".join(f"{x:.4g}" for x in mass_ratio)),
         Assertion("energy_ratio_stable", stable(energy_ratio), "ratios " + ", ".join(f"{x:.4g}" for x in energy_ratio)),
         Assertion("renormalized_gap_decreasing", _strictly_decreasing(ren), "gaps " + ", ".join(f"{x:.4g}" for x in ren))])


# -----------------------------
# gamma-convergence-regularized
# -----------------------------

def _gamma_regularized(p, ctx) -> ExperimentResult:
    d, sigma, R = int(p["d"]), float(p["sigma"]), float(p["radius"])
    sched = _schedule(p)
    area = math.pi * R * R if d == 2 else Ball.centered(d, R).measure
    limit = balls.ball_fractional_perimeter(d, sigma, R) - gamma_sigma(d, sigma) * area

    def one(eps):
        spec = KernelSpec.make(d, sigma, eps, sched(eps))
        m = bridge.set_to_measure(Ball.centered(d, R), spec)
        j_hat = balls.ball_j_truncated(d, sigma, spec.tail_start, R) - spec.gamma() * area
        return spec.tail_start, len(m), float(energy_renormalized(spec, m.config)), j_hat

    epsilons = [float(e) for e in p["epsilons"]]
    res = ctx.map(one, epsilons)
    gaps = [abs(v - limit) for _, _, v, _ in res]
    rows = [(_f(e), _f(r), n, _f(v), _f(j), _f(limit), _f(g / abs(limit)))
            for e, (r, n, v, j), g in zip(epsilons, res, gaps)]
    final = gaps[-1] / abs(limit)
    return ExperimentResult(
        ("epsilon", "r_eps", "N", "renormalized_discrete", "renormalized_truncated_continuum", "limit", "relative_gap"), rows,
        [Assertion("gap_monotone", _strictly_decreasing(gaps), "relative gaps " + ", ".join(f"{g / abs(limit):.5f}" for g in gaps)),
         Assertion("final_relative_gap", final < p["final_tolerance"], f"{final:.4%}")])


# -----------------------------
# isoperimetry
# -----------------------------

def _isoperimetry(p, ctx) -> ExperimentResult:
    d, h = int(p["d"]), float(p["h"])
    ref = shapes.pixel_ball(d, h, float(p["radius"]))
    count = ref.count
    names = list(p["shapes"])
    family = {n: shapes.shape_by_count(n, d, h, count) for n in names}
    functionals = [("riesz", float(p["riesz_sigma"]))] + [("perimeter", float(s)) for s in p["sigmas"]] + [("p0", 0.0)]
    radii = [float(r) for r in p["p0_radii"]]

    def evaluate(job):
        kind, s, name = job
        E = family[name]
        if kind == "riesz":
            return ce.with_error_estimate(ce.riesz_energy, d, s, E)
        if kind == "perimeter":
            return ce.with_error_estimate(ce.fractional_perimeter, d, s, E)
        return ce.with_error_estimate(ce.p0_perimeter, d, E, radii)

    jobs = [(k, s, n) for k, s in functionals for n in names]
    vals = dict(zip(jobs, ctx.map(evaluate, jobs)))
    rows, asserts = [], []
    for k, s in functionals:
        ball_v, ball_e = vals[(k, s, "ball")]
        worst = math.inf
        for n in names:
            v, e = vals[(k, s, n)]
            rows.append((k, _f(s), n, count, _f(v), _f(e)))
            if n != "ball":
                worst = min(worst, (v - ball_v) - (e + ball_e))
        asserts.append(Assertion(f"ball_minimal_{k}_{s:g}", worst > 0.0, f"smallest margin beyond error estimates {worst:.6g}"))
    return ExperimentResult(("functional", "sigma", "shape", "cells", "value", "quadrature_error"), rows, asserts)


# -----------------------------
# Registry
# -----------------------------

MINIMIZER_DEFAULTS = dict(sigma=-1.0, c1=-1.0, c2=10.0, h=0.015625, half_width=1.0, steps=300, step_size=50.0,
                          kkt_factor=10.0)

EXPERIMENTS: Dict[str, Experiment] = {e.name: e for e in [
    Experiment("gamma-constants", "renormalization constants vs radial quadrature",
               dict(dims=[1, 2, 3], sigmas=[0.0, 0.25, 0.5, 0.75], radii=[0.5, 0.1, 0.01],
                    big_radii=[2.0, 10.0, 100.0], tolerance=1e-8), _gamma_constants),
    Experiment("packing-rate", "finite-box packing density excess times side",
               dict(d=2, sides=[10.0, 20.0, 40.0], anneal_budget=2000, ratio_limit=4.0), _packing_rate),
    Experiment("gamma-convergence-integrable", "recovery lattice energies vs the disk Riesz energy",
               dict(d=2, sigma=-1.0, radius=1.0, epsilons=[0.04, 0.02, 0.01], final_tolerance=0.05),
               _gamma_integrable, ("d", "sigma")),
    Experiment("confined-minimizer-shape", "density descent and annealing under radial confinement",
               dict(MINIMIZER_DEFAULTS, epsilon=0.02, n_particles=200, init_side=1.6, seeds=[0, 1, 2, 3, 4],
                    epochs=200, bang_limit=0.1, deficit_limit=0.05, anneal_deficit_limit=0.15),
               _minimizer_shape),
    Experiment("first-variation", "residual sign conditions at the density minimizer",
               dict(MINIMIZER_DEFAULTS), _first_variation),
    Experiment("bridge-sweep", "measure-to-set gaps against their envelopes",
               dict(d=2, sigma=0.5, radius=1.0, epsilons=[0.02, 0.01, 0.005], schedule_exponent="default",
                    schedule_scale=1.0, ratio_limit=3.0), _bridge_sweep, ("d", "sigma")),
    Experiment("gamma-convergence-regularized", "renormalized lattice energies vs P - gamma |E| of a disk",
               dict(d=2, sigma=0.5, radius=10.0, epsilons=[0.02, 0.01, 0.005], schedule_exponent="default",
                    schedule_scale=1.0, final_tolerance=0.1), _gamma_regularized, ("d", "sigma")),
    Experiment("isoperimetry", "equal-measure ball vs other shapes for Riesz energy and perimeters",
               dict(d=2, h=0.0078125, radius=1.0, riesz_sigma=-1.0, sigmas=[0.25, 0.5, 0.75], p0_radii=[4.0, 8.0, 16.0],
                    shapes=["ball", "square", "rectangle", "l-shape", "annulus"]), _isoperimetry),
]}


def _parse_like(raw: str, default):
    raw = raw.strip()
    if isinstance(default, list):
        items = [x.strip() for x in raw.split(",") if x.strip()]
        proto = default[0] if default else ""
        return [_parse_like(x, proto) for x in items]
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def resolve(name: str, overrides: Mapping[str, str]) -> Dict[str, object]:
    if name not in EXPERIMENTS:
        raise ParameterError(f"unknown experiment {name!r}; known: {', '.join(EXPERIMENTS)}")
    defaults = EXPERIMENTS[name].defaults
    unknown = set(overrides) - set(defaults)
    if unknown:
        raise ParameterError(f"unknown parameters for {name}: {sorted(unknown)}")
    params = {k: (_parse_like(overrides[k], v) if k in overrides else (list(v) if isinstance(v, list) else v))
              for k, v in defaults.items()}
    return params


def read_manifest(path) -> Tuple[str, Dict[str, str], Dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None)
    if not parser.read(path):
        raise ParameterError(f"cannot read manifest {path}")
    if "experiment" not in parser or "name" not in parser["experiment"]:
        raise ParameterError("manifest needs an [experiment] section with a name")
    exp = dict(parser["experiment"])
    params = dict(parser["parameters"]) if "parameters" in parser else {}
    return exp.pop("name"), exp, params


def run_experiment(name: str, overrides: Mapping[str, str], out_dir, seed: int = 0, threads: int = 1) -> int:
    """Run one experiment into ``out_dir``; returns the exit code (0 iff all assertions pass)."""
    params = resolve(name, overrides)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    exp = EXPERIMENTS[name]
    # thread count is an execution setting, not an input: leaving it out keeps outputs identical across it
    resolved = {"experiment": {"name": name, "seed": seed},
                "parameters": {k: format_value(v) for k, v in params.items()}}
    if exp.kernel is not None:
        sigma = float(params[exp.kernel[1]])
        resolved["parameters"]["regime"] = "integrable" if sigma < 0 else "regularized"
    write_ini(out / "manifest.resolved.ini", resolved)
    previous = _backend.get_num_threads()
    _backend.set_num_threads(threads)
    try:
        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            result = exp.run(params, Context(seed, threads, pool))
    except Exception as exc:  # report, do not crash the runner
        write_ini(out / "summary.ini", {"summary": {"experiment": name, "passed": False, "error": f"{type(exc).__name__}: {exc}"}})
        return 2
    finally:
        _backend.set_num_threads(previous)
    write_csv(out / "results.csv", result.header, result.rows)
    summary = {"summary": {"experiment": name, "passed": result.passed,
                           "failed": ", ".join(a.name for a in result.assertions if not a.passed) or "none"},
               "assertions": {a.name: ("pass" if a.passed else "fail") + " | " + a.detail for a in result.assertions}}
    write_ini(out / "summary.ini", summary)
    return 0 if result.passed else 1


def run_manifest(path, out_dir, seed: Optional[int] = None, threads: Optional[int] = None) -> int:
    name, exp, params = read_manifest(path)
    s = seed if seed is not None else int(exp.get("seed", 0))
    t = threads if threads is not None else int(exp.get("threads", 1))
    return run_experiment(name, params, out_dir, s, t)
