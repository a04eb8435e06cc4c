"""Time the compiled kernels against the numpy fallback.

Usage::

    python3 benchmarks/bench_backends.py [--n 4000] [--repeat 3]

Each workload runs through the public API once per backend; the fallback is
selected by temporarily hiding the compiled module from the dispatcher.
"""

from __future__ import annotations

import argparse
import contextlib
import timeit

from hsriesz import _backend, optimizer
from hsriesz.core import Ball
from hsriesz.discrete_energy import energy
from hsriesz.kernels import ConfinementSpec, KernelSpec, mesoscale_schedule
from hsriesz.packing import UniformDensity, recovery_configuration


@contextlib.contextmanager
def backend(name: str):
    saved = _backend._compiled
    if name == "python":
        _backend._compiled = None
    try:
        yield
    finally:
        _backend._compiled = saved


def workloads(n: int):
    eps = (0.45 ** 2 * 3.14159 / n) ** 0.5 / 2
    config = recovery_configuration(UniformDensity(1.0, Ball.centered(2, 0.45)), eps)
    integrable = KernelSpec.make(2, -1.0, eps)
    regularized = KernelSpec.make(2, 0.5, eps, mesoscale_schedule(0.5)(eps))
    g = ConfinementSpec.for_sigma(-1.0, 10.0, -1.0)
    small = KernelSpec.make(2, -1.0, 0.05)
    sched = optimizer.AnnealSchedule(epochs=5, seed=0)
    return len(config), {
        "pair sum, integrable": lambda: energy(integrable, config),
        "pair sum, regularized tail": lambda: energy(regularized, config),
        "anneal, 5 epochs of N=60": lambda: optimizer.anneal_discrete("confined", small, n=60, g=g, schedule=sched),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4000, help="approximate particle count for pair sums")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _backend._compiled is None:
        raise SystemExit("compiled extension not built; nothing to compare")
    n, jobs = workloads(args.n)
    print(f"N = {n} particles for pair sums, best of {args.repeat}")
    print(f"{'workload':<28}{'compiled (s)':>14}{'python (s)':>14}{'speedup':>10}")
    for label, job in jobs.items():
        times = {}
        for name in ("compiled", "python"):
            with backend(name):
                times[name] = min(timeit.repeat(job, number=1, repeat=args.repeat))
        print(f"{label:<28}{times['compiled']:>14.4f}{times['python']:>14.4f}{times['python'] / times['compiled']:>10.1f}")


if __name__ == "__main__":
    main()
