"""Select the compiled kernels or the numpy fallback at import time.

Set ``HSRIESZ_BACKEND=python`` to force the fallback (used by the benchmark
and by cross-backend tests).
"""

from __future__ import annotations

import os

from . import _fallback

_forced = os.environ.get("HSRIESZ_BACKEND", "").lower()

_compiled = None
if _forced != "python":
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        _compiled = None

NAME = "compiled" if _compiled is not None else "python"

_threads = 1


def set_num_threads(n: int) -> None:
    global _threads
    _threads = max(1, int(n))


def get_num_threads() -> int:
    return _threads


def _impl(name: str):
    return getattr(_compiled if _compiled is not None else _fallback, name)


def pair_sum(points, cell_start, cell_coord, cell_size, s, r_zero, n_threads=None):
    fn = _impl("pair_sum")
    return float(fn(points, cell_start, cell_coord, float(cell_size), float(s), float(r_zero),
                    int(n_threads or _threads)))


def first_violation(points, dmin):
    return _impl("first_violation")(points, float(dmin))


def anneal_epoch(*args, g_func=None):
    if g_func is not None:
        return _fallback.anneal_epoch(*args, g_func=g_func)
    return _impl("anneal_epoch")(*args)
