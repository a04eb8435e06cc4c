"""Command line entry point: ``hsriesz <verb> ...`` or ``python -m hsriesz``.

Exit codes: 0 success, 1 failed experiment assertions, 2 experiment or
input error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from . import _backend, bridge, continuum_energy as ce, experiments, optimizer, serialization as ser
from .core import Configuration, DensityField, HsRieszError, PixelSet, ScaledEmpiricalMeasure
from .discrete_energy import EnergyBreakdown, energy_breakdown
from .kernels import ConfinementSpec, KernelSpec, mesoscale_schedule


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _confinement(args) -> Optional[ConfinementSpec]:
    if args.c1 is None and args.c2 is None:
        return None
    if args.c1 is None or args.c2 is None:
        raise HsRieszError("--c1 and --c2 go together")
    return ConfinementSpec.for_sigma(args.c1, args.c2, args.sigma)


def _kernel(d: int, sigma: float, epsilon: float, r_eps: Optional[float]) -> KernelSpec:
    if r_eps is None and sigma >= 0:
        r_eps = mesoscale_schedule(sigma)(epsilon)
    return KernelSpec.make(d, sigma, epsilon, r_eps)


def _print_table(header, rows) -> None:
    sys.stdout.write(ser.csv_text(header, rows))


def cmd_energy(args) -> int:
    obj = ser.load(args.input)
    if isinstance(obj, Configuration):
        spec = _kernel(obj.d, args.sigma, obj.epsilon, args.r_eps)
        br = energy_breakdown(spec, obj, g=_confinement(args), renormalize=not spec.params.integrable)
        _print_table(EnergyBreakdown.CSV_HEADER, [br.csv_row()])
        return 0
    d = obj.d
    if args.sigma < 0:
        value = ce.riesz_energy_confined(d, args.sigma, obj, _confinement(args))
        _print_table(("d", "sigma", "energy"), [(d, repr(args.sigma), repr(value))])
        return 0
    if args.r_eps is None:
        raise HsRieszError("--r-eps is required for the truncated energy of a set")
    E = obj if isinstance(obj, PixelSet) else obj.threshold()
    j = ce.j_truncated(d, args.sigma, args.r_eps, E)
    _print_table(("d", "sigma", "r", "j_truncated", "j_renormalized"),
                 [(d, repr(args.sigma), repr(args.r_eps), repr(j), repr(ce.j_renormalized(d, args.sigma, args.r_eps, E)))])
    return 0


def cmd_perimeter(args) -> int:
    obj = ser.load(args.input)
    E = obj if isinstance(obj, PixelSet) else obj.threshold()
    if args.sigma == 0.0:
        value, err = ce.with_error_estimate(ce.p0_perimeter, E.d, E, args.radii)
    else:
        value, err = ce.with_error_estimate(ce.fractional_perimeter, E.d, args.sigma, E)
    _print_table(("d", "sigma", "cells", "perimeter", "quadrature_error"),
                 [(E.d, repr(args.sigma), E.count, repr(value), repr(err))])
    return 0


def cmd_bridge(args) -> int:
    config = ser.load(args.input)
    if not isinstance(config, Configuration):
        raise HsRieszError("bridge expects a configuration file")
    spec = _kernel(config.d, args.sigma, config.epsilon, args.r_eps)
    m = ScaledEmpiricalMeasure(config)
    E = bridge.measure_to_set(m, spec)
    rep = bridge.energy_bridge_report(m, spec, E)
    _print_table(bridge.BridgeReport.CSV_HEADER + ("within_envelope",), [rep.csv_row() + (str(rep.within_envelope).lower(),)])
    if args.out:
        ser.save(E, _out_dir(args) / "set.txt")
    return 0


def cmd_anneal(args) -> int:
    spec = _kernel(args.d, args.sigma, args.epsilon, args.r_eps)
    g = _confinement(args)
    init = ser.load(args.init) if args.init else None
    sched = optimizer.AnnealSchedule(epochs=args.epochs, seed=args.seed)
    config, trace = optimizer.anneal_discrete(args.objective, spec, n=args.n, init=init, g=g, schedule=sched)
    final = trace[-1].best_energy if trace else float("nan")
    _print_table(("N", "best_energy"), [(len(config), repr(final))])
    if args.out:
        out = _out_dir(args)
        ser.save(config, out / "configuration.txt")
        ser.write_csv(out / "trace.csv", optimizer.TraceRow.CSV_HEADER, [r.csv_row() for r in trace])
    return 0


def cmd_minimize(args) -> int:
    g = ConfinementSpec.for_sigma(args.c1, args.c2, args.sigma)
    w = args.half_width
    lo, hi = (-w,) * args.d, (w,) * args.d
    rho, trace = optimizer.minimize_density(args.d, args.sigma, g, (lo, hi), args.h, steps=args.steps,
                                            step_size=args.step_size)
    sd = optimizer.shape_diagnostics(rho)
    kkt = optimizer.kkt_check(args.d, args.sigma, rho, g, 10 * args.h)
    _print_table(("steps", "objective", "ball_deficit", "bang_bang_index", "kkt_max_violation"),
                 [(len(trace), repr(trace[-1].objective), repr(sd.ball_deficit), repr(sd.bang_bang_index),
                   repr(kkt.max_violation))])
    if args.out:
        out = _out_dir(args)
        ser.save(rho, out / "density.txt")
        ser.write_csv(out / "trace.csv", optimizer.DescentRow.CSV_HEADER, [r.csv_row() for r in trace])
    return 0


def cmd_experiment(args) -> int:
    if args.action == "list":
        for name, exp in experiments.EXPERIMENTS.items():
            print(f"{name}\t{exp.description}")
        return 0
    if args.target is None:
        raise HsRieszError("experiment run needs a manifest path or a built-in name")
    out = args.out or "results"
    if Path(args.target).is_file():
        return experiments.run_manifest(args.target, out, args.seed, args.threads)
    return experiments.run_experiment(args.target, {}, out, args.seed or 0, args.threads or 1)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default 1)")
    common.add_argument("--out", default=None, help="output directory")

    p = argparse.ArgumentParser(prog="hsriesz", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__import__('hsriesz').__version__}")
    sub = p.add_subparsers(dest="verb", required=True)

    def kernel_args(sp, need_eps=False):
        sp.add_argument("--sigma", type=float, required=True)
        sp.add_argument("--r-eps", type=float, default=None, help="tail start (default schedule if omitted)")
        if need_eps:
            sp.add_argument("--d", type=int, default=2)
            sp.add_argument("--epsilon", type=float, required=True)

    def confinement_args(sp, required=False):
        sp.add_argument("--c1", type=float, default=None, required=required)
        sp.add_argument("--c2", type=float, default=None, required=required)

    sp = sub.add_parser("energy", parents=[common], help="energy of a configuration, pixel set or density")
    sp.add_argument("input")
    kernel_args(sp)
    confinement_args(sp)
    sp.set_defaults(func=cmd_energy)

    sp = sub.add_parser("perimeter", parents=[common], help="fractional or zero-order perimeter of a set")
    sp.add_argument("input")
    sp.add_argument("--sigma", type=float, required=True)
    sp.add_argument("--radii", type=lambda s: [float(x) for x in s.split(",")], default=[4.0, 8.0, 16.0])
    sp.set_defaults(func=cmd_perimeter)

    sp = sub.add_parser("bridge", parents=[common], help="measure-to-set gaps for a configuration")
    sp.add_argument("input")
    kernel_args(sp)
    sp.set_defaults(func=cmd_bridge)

    sp = sub.add_parser("anneal", parents=[common], help="simulated annealing of a hard-sphere configuration")
    kernel_args(sp, need_eps=True)
    confinement_args(sp)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--init", default=None, help="initial configuration file")
    sp.add_argument("--objective", choices=optimizer.OBJECTIVES, default="energy")
    sp.add_argument("--epochs", type=int, default=200)
    sp.set_defaults(func=cmd_anneal)

    sp = sub.add_parser("minimize-density", parents=[common], help="projected descent over densities in [0, 1]")
    sp.add_argument("--sigma", type=float, required=True)
    sp.add_argument("--d", type=int, default=2)
    confinement_args(sp, required=True)
    sp.add_argument("--h", type=float, default=1.0 / 64)
    sp.add_argument("--half-width", type=float, default=1.0)
    sp.add_argument("--steps", type=int, default=300)
    sp.add_argument("--step-size", type=float, default=50.0)
    sp.set_defaults(func=cmd_minimize)

    sp = sub.add_parser("experiment", parents=[common], help="run or list experiments")
    sp.add_argument("action", choices=("run", "list"))
    sp.add_argument("target", nargs="?", default=None, help="manifest file or built-in experiment name")
    sp.set_defaults(func=cmd_experiment)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verb != "experiment":
        if args.seed is None:
            args.seed = 0
        if args.threads is not None:
            _backend.set_num_threads(args.threads)
    try:
        return args.func(args)
    except (HsRieszError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
