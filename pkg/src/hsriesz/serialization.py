"""Plain-text formats: configurations, pixel sets and density fields; CSV and key-value tables.

Text format: header lines ``key value`` (kind, d, epsilon or h, n), a blank
line, then one record per line. Floats are written with ``repr`` so every
finite value round-trips exactly.
"""

from __future__ import annotations

import configparser
import csv
import io
from pathlib import Path
from typing import Dict, Iterable, Mapping, Sequence, Union

import numpy as np

from .core import Configuration, DensityField, HsRieszError, PixelSet, validate_configuration
from .kernels import KernelSpec

PathLike = Union[str, Path]


class FormatError(HsRieszError, ValueError):
    pass


def _fmt(v: float) -> str:
    return repr(float(v))


def dumps(obj) -> str:
    """Serialize a Configuration, PixelSet or DensityField."""
    lines = []
    if isinstance(obj, Configuration):
        lines += ["kind configuration", f"d {obj.d}", f"epsilon {_fmt(obj.epsilon)}", f"n {len(obj)}", ""]
        lines += [" ".join(_fmt(v) for v in p) for p in obj.points]
    elif isinstance(obj, PixelSet):
        cells = obj.cell_array()
        lines += ["kind pixelset", f"d {obj.d}", f"h {_fmt(obj.h)}", f"n {len(cells)}", ""]
        lines += [" ".join(str(int(v)) for v in c) for c in cells]
    elif isinstance(obj, DensityField):
        items = list(obj.items())
        lines += ["kind density", f"d {obj.d}", f"h {_fmt(obj.h)}", f"n {len(items)}", ""]
        lines += [" ".join(str(v) for v in key) + " " + _fmt(val) for key, val in items]
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    return "\n".join(lines) + "\n"


def loads(text: str):
    head, _, body = text.partition("\n\n")
    header: Dict[str, str] = {}
    for line in head.splitlines():
        if not line.strip():
            continue
        key, _, value = line.strip().partition(" ")
        header[key] = value.strip()
    try:
        kind, d, n = header["kind"], int(header["d"]), int(header["n"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad header: {exc}") from None
    rows = [r.split() for r in body.splitlines() if r.strip()]
    if len(rows) != n:
        raise FormatError(f"expected {n} records, found {len(rows)}")
    if kind == "configuration":
        pts = np.array([[float(v) for v in r] for r in rows], dtype=np.float64).reshape(n, d)
        return validate_configuration(pts, float(header["epsilon"]), d)
    h = float(header["h"])
    if kind == "pixelset":
        return PixelSet.from_cells(h, [tuple(int(v) for v in r) for r in rows], d=d)
    if kind == "density":
        if n == 0:
            return DensityField(h, (0,) * d, np.zeros((0,) * d))
        keys = np.array([[int(v) for v in r[:d]] for r in rows], dtype=np.int64)
        vals = np.array([float(r[d]) for r in rows])
        lo = keys.min(axis=0)
        grid = np.zeros(tuple(keys.max(axis=0) - lo + 1))
        grid[tuple((keys - lo).T)] = vals
        return DensityField(h, tuple(int(v) for v in lo), grid)
    raise FormatError(f"unknown kind {kind!r}")


def save(obj, path: PathLike) -> None:
    Path(path).write_text(dumps(obj))


def load(path: PathLike):
    return loads(Path(path).read_text())


# -----------------------------
# Tables and key-value files
# -----------------------------

def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """CSV with a header row, minimal RFC 4180 quoting and LF line ends."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(r)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def read_csv(path: PathLike):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_ini(path: PathLike, sections: Mapping[str, Mapping[str, object]]) -> None:
    """Sections of key = value pairs, written in the given order."""
    parser = configparser.ConfigParser(interpolation=None)
    for name, items in sections.items():
        parser[name] = {k: format_value(v) for k, v in items.items()}
    with open(path, "w") as fh:
        parser.write(fh)


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ", ".join(format_value(x) for x in v)
    if v is None:
        return "none"
    return str(v)


def kernel_to_dict(spec: KernelSpec) -> Dict[str, object]:
    p = spec.params
    return {"regime": spec.regime, "d": p.d, "sigma": p.sigma, "epsilon": p.epsilon, "r_eps": p.r_eps}


def kernel_from_dict(data: Mapping[str, object]) -> KernelSpec:
    r = data.get("r_eps")
    r = None if r in (None, "none", "") else float(r)
    spec = KernelSpec.make(int(data["d"]), float(data["sigma"]), float(data["epsilon"]), r)
    regime = data.get("regime")
    if regime is not None and regime != spec.regime:
        raise FormatError(f"regime tag {regime!r} does not match parameters ({spec.regime})")
    return spec
