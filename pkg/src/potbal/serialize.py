"""Structured-text I/O: reports, field dumps, measures, domains, zero lists.

Reports are canonical JSON (sorted keys, two-space indent, shortest-repr
floats) with no timestamps, so identical inputs and seeds give
byte-identical files. Field dumps are a one-line JSON header followed by
row-major node values with inf/-inf sentinels and a 0/1 mask section.
"""

from __future__ import annotations

import json
import math
from typing import Union

import numpy as np

from .fields import Grid, ScalarField
from .geometry import CompactSet, Domain
from .measures import DiscreteMeasure

__all__ = [
    "dump_report",
    "dumps_report",
    "write_field",
    "read_field",
    "write_measure",
    "read_measure",
    "write_domain",
    "read_domain",
    "write_compact_set",
    "read_compact_set",
    "write_zeros",
    "read_zeros",
]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return str(obj)


def dumps_report(doc: dict) -> str:
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"


def dump_report(doc: dict, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_report(doc))


def _fmt(x: float) -> str:
    if x == np.inf:
        return "inf"
    if x == -np.inf:
        return "-inf"
    return repr(float(x))


def write_field(f: ScalarField, path) -> None:
    header = {"origin": list(f.grid.origin), "h": f.grid.h,
              "shape": list(f.grid.shape), "d": f.d}
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        fh.write("values\n")
        flat = f.values.ravel()
        for i in range(0, len(flat), 8):
            fh.write(" ".join(_fmt(v) for v in flat[i:i + 8]) + "\n")
        fh.write("mask\n")
        bits = f.mask.ravel().astype(int)
        for i in range(0, len(bits), 64):
            fh.write("".join(str(b) for b in bits[i:i + 64]) + "\n")


def read_field(path) -> ScalarField:
    with open(path) as fh:
        header = json.loads(fh.readline())
        rest = fh.read().split()
    grid = Grid(tuple(header["origin"]), float(header["h"]),
                tuple(header["shape"]))
    n = int(np.prod(grid.shape))
    assert rest[0] == "values"
    vals = np.array([float(tok) for tok in rest[1:1 + n]])
    idx = 1 + n
    assert rest[idx] == "mask"
    bits = "".join(rest[idx + 1:])
    mask = np.array([ch == "1" for ch in bits[:n]])
    return ScalarField(grid, vals.reshape(grid.shape),
                       mask.reshape(grid.shape))


def write_measure(mu: DiscreteMeasure, path,
                  density_path: Union[str, None] = None) -> None:
    """Atoms array plus an optional density-grid reference (the density
    field is dumped separately under that reference)."""
    doc = {"d": mu.d,
           "atoms": [[*map(float, p), float(m)]
                     for p, m in zip(mu.points, mu.masses)],
           "meta": mu.meta}
    if mu.density is not None and density_path is not None:
        write_field(mu.density, density_path)
        doc["density_ref"] = str(density_path)
    with open(path, "w") as fh:
        fh.write(dumps_report(doc))


def read_measure(path) -> DiscreteMeasure:
    with open(path) as fh:
        doc = json.load(fh)
    atoms = np.asarray(doc.get("atoms", []), float)
    d = int(doc["d"])
    density = None
    if doc.get("density_ref"):
        density = read_field(doc["density_ref"])
    if atoms.size:
        mu = DiscreteMeasure(d, atoms[:, :d], atoms[:, d], density=density)
    else:
        mu = DiscreteMeasure(d, density=density)
    mu.meta = doc.get("meta", {}) or {}
    return mu


def write_compact_set(S: CompactSet, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_report(S.to_dict()))


def read_compact_set(path) -> CompactSet:
    with open(path) as fh:
        return CompactSet.from_dict(json.load(fh))


def write_domain(dom: Domain, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_report(dom.to_dict()))


def read_domain(path) -> Domain:
    with open(path) as fh:
        return Domain.from_dict(json.load(fh))


def write_zeros(zeros, path) -> None:
    """Zero list: one 're im multiplicity' line per zero."""
    with open(path, "w") as fh:
        for z, m in zeros:
            z = np.atleast_1d(np.asarray(z, float))
            im = z[1] if len(z) > 1 else 0.0
            fh.write(f"{_fmt(z[0])} {_fmt(im)} {int(m)}\n")


def read_zeros(path) -> list:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            re_, im_, mult = line.split()
            out.append(((float(re_), float(im_)), int(mult)))
    return out
