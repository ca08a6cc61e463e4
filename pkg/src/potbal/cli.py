"""Command-line surface: reproducible experiments over serialized inputs.

Exit codes: 0 consistent/pass, 1 violation/fail (with witness in the
report), 2 usage or input error, 3 numerical/solver error. Reports are
canonical JSON with a full config echo; identical inputs and seeds give
byte-identical output regardless of POTBAL_THREADS.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import serialize
from .fields import ScalarField, SolverError
from .geometry import CompactSet, Domain
from .gluing import (ConstructionError, GluingConfig,
                     glue_test_function, potential_approx_sequence)
from .green import EstimateResult, EstimatorError, GreenSpec, green, \
    green_values, harmonic_measure_integral
from .potentials import Potential, jensen_measure_check, potential_eval
from .zeros import (HoloFunction, ResolutionError, ZeroSet, crit3_roundtrip,
                    poincare_lelong_check, zero_margin_check)

USAGE_ERROR, NUMERICAL_ERROR = 2, 3


def _parse_point(s: str):
    return tuple(float(t) for t in s.split(","))


def _parse_domain(s: str) -> Domain:
    if s == "disc":
        return Domain.ball([0.0, 0.0], 1.0)
    if s.endswith(".json"):
        return serialize.read_domain(s)
    kind, _, rest = s.partition(":")
    vals = [float(t) for t in rest.split(",")] if rest else []
    if kind == "ball":
        return Domain.ball(vals[:-1], vals[-1])
    if kind == "annulus":
        return Domain.annulus(vals[:-2], vals[-2], vals[-1])
    if kind == "halfspace":
        return Domain.half_space(vals[:-1], vals[-1])
    raise ValueError(f"cannot parse domain {s!r}")


def _parse_field(s: str, grid) -> ScalarField:
    """Field input: a dump file, 'zero', 'quad:a,c' for a|x|^2 + c, or
    'logabs:re,im;re,im;...' for ln|poly| with the given complex zeros."""
    if s == "zero":
        return ScalarField(grid, np.zeros(grid.shape))
    if s.startswith("quad:"):
        a, c = (float(t) for t in s[5:].split(","))
        pts = grid.points()
        return ScalarField(
            grid, (a * np.sum(pts**2, axis=1) + c).reshape(grid.shape))
    if s.startswith("logabs:"):
        zs = []
        for tok in s[7:].split(";"):
            re_, im_ = (float(t) for t in tok.split(","))
            zs.append(complex(re_, im_))
        pts = grid.points()
        z = pts[:, 0] + 1j * pts[:, 1]
        with np.errstate(divide="ignore"):
            vals = np.sum(np.log(np.abs(z[:, None] - np.array(zs))), axis=1)
        return ScalarField(grid, np.where(np.isfinite(vals), vals,
                                          -np.inf).reshape(grid.shape))
    fld = serialize.read_field(s)
    if fld.grid != grid:
        raise ValueError(f"field {s!r} does not match the run grid")
    return fld


def _parse_test_function(s: str, cfg: GluingConfig):
    if s.startswith("scaled-green:"):
        a, c = (float(t) for t in s.split(":")[1].split(","))
        spec = GreenSpec(cfg.domain, cfg.o,
                         "closed_form" if cfg.domain.kind == "ball" else "grid")

        def fn(pts):
            return np.maximum(0.0, a * (green_values(spec, pts) - c))

        return fn
    raise ValueError(f"cannot parse test function {s!r}")


def _emit(doc: dict, args) -> None:
    text = serialize.dumps_report(doc)
    out = getattr(args, "out", None)
    if out:
        out_dir = os.environ.get("POTBAL_OUT_DIR", "")
        path = os.path.join(out_dir, out) if out_dir else out
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_csv(report: dict, path: str) -> None:
    rows = ["member,parameter,margin"]
    for k, (p, m) in enumerate(zip(report.get("params", []),
                                   report.get("margins", []))):
        rows.append(f"{k},{'' if p is None else repr(float(p))},{repr(float(m))}")
    with open(path, "w") as fh:
        fh.write("\n".join(rows) + "\n")


def _add_core_args(p):
    p.add_argument("--core", default="0,0,0.1",
                   help="core compact set cx,cy,radius")
    p.add_argument("--origin", default="0,0")
    p.add_argument("--r", type=float, default=0.05)
    p.add_argument("--b-minus", type=float, default=-1.0)
    p.add_argument("--b-plus", type=float, default=1.0)


def _config_from(args) -> GluingConfig:
    cx, cy, rad = _parse_point(args.core + (",0" * (3 - args.core.count(",") - 1)))
    S = CompactSet.closed_ball([cx, cy], rad)
    return GluingConfig(S, _parse_point(args.origin), args.r, args.b_minus,
                        args.b_plus, _parse_domain(args.domain), h=args.h)


def _echo(args) -> dict:
    skip = {"func", "out", "csv"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="potbal",
        description="numerical potential theory: Green functions, balayage "
                    "margins, gluing certificates and zero-set criteria")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--h", type=float, default=1.0 / 128.0,
                    help="grid spacing for grid-backed commands")
    ap.add_argument("--out", help="report path (default: stdout)")
    ap.add_argument("--csv", help="margin sweep CSV path")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("green", help="Green's function value")
    p.add_argument("--domain", default="disc")
    p.add_argument("--pole", default="0,0")
    p.add_argument("--point", required=True)
    p.add_argument("--method", default="closed_form",
                   choices=["closed_form", "wos", "grid"])
    p.add_argument("--samples", type=int, default=100000)
    p.set_defaults(func=cmd_green)

    p = sub.add_parser("harmonic-measure", help="boundary integral at a point")
    p.add_argument("--domain", default="disc")
    p.add_argument("--pole", default="0,0")
    p.add_argument("--boundary-function", default="one",
                   help="one | cos | indicator-right")
    p.add_argument("--samples", type=int, default=100000)
    p.set_defaults(func=cmd_harmonic_measure)

    p = sub.add_parser("potential", help="potential of a measure at a point")
    p.add_argument("--measure", required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--pole-subtraction")
    p.set_defaults(func=cmd_potential)

    p = sub.add_parser("jensen-verify", help="randomized Jensen/AS check")
    p.add_argument("--measure", required=True)
    p.add_argument("--origin", default="0,0")
    p.add_argument("--domain", default="disc")
    p.add_argument("--probes", type=int, default=64)
    p.set_defaults(func=cmd_jensen_verify)

    p = sub.add_parser("glue", help="Green gluing with certificate")
    p.add_argument("--domain", default="disc")
    _add_core_args(p)
    p.add_argument("--test-function", default="scaled-green:0.3,0.05")
    p.set_defaults(func=cmd_glue)

    p = sub.add_parser("approx-sequence", help="potential approximation")
    p.add_argument("--domain", default="disc")
    _add_core_args(p)
    p.add_argument("--test-function", default="scaled-green:0.3,0.05")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--positive", action="store_true")
    p.set_defaults(func=cmd_approx_sequence)

    p = sub.add_parser("balayage-check", help="affine margins of two measures")
    p.add_argument("--domain", default="disc")
    _add_core_args(p)
    p.add_argument("--theta", required=True, help="measure file")
    p.add_argument("--mu", required=True, help="measure file")
    p.add_argument("--family", default="G_o")
    p.add_argument("--count", type=int, default=8)
    p.set_defaults(func=cmd_balayage_check)

    p = sub.add_parser("crit-consistency", help="statement-wise margins")
    p.add_argument("--domain", default="disc")
    _add_core_args(p)
    p.add_argument("--u", required=True)
    p.add_argument("--M", required=True)
    p.add_argument("--h-witness")
    p.add_argument("--version", default="subharmonic",
                   choices=["subharmonic", "harmonic"])
    p.add_argument("--count", type=int, default=6)
    p.set_defaults(func=cmd_crit_consistency)

    p = sub.add_parser("pl-check", help="Riesz mass vs zero multiplicity")
    p.add_argument("--zeros", help="zero list file")
    p.add_argument("--poly", help="roots as re,im;re,im;...")
    p.add_argument("--box", type=float, default=1.0)
    p.set_defaults(func=cmd_pl_check)

    p = sub.add_parser("zeros-check", help="zero-set margin inequality")
    p.add_argument("--domain", default="disc")
    _add_core_args(p)
    p.add_argument("--variant", default="Z3", choices=["Z1", "Z2", "Z3"])
    p.add_argument("--zeros", required=True)
    p.add_argument("--M", default="zero")
    p.add_argument("--M-minus", default="zero")
    p.add_argument("--count", type=int, default=6)
    p.set_defaults(func=cmd_zeros_check)

    p = sub.add_parser("crit3", help="all four zero-set criteria on the disc")
    p.add_argument("--domain", default="disc")
    _add_core_args(p)
    p.add_argument("--zeros", required=True)
    p.add_argument("--M", default="zero")
    p.add_argument("--M-minus", default="zero")
    p.add_argument("--count", type=int, default=6)
    p.set_defaults(func=cmd_crit3)
    return ap


def cmd_green(args) -> int:
    dom = _parse_domain(args.domain)
    spec = GreenSpec(dom, _parse_point(args.pole), args.method,
                     samples=args.samples, seed=args.seed, grid_h=args.h)
    res = green(spec, _parse_point(args.point))
    if isinstance(res, EstimateResult):
        doc = res.to_dict()
    else:
        doc = {"value": res, "std_error": 0.0, "samples": 0,
               "seed": args.seed, "method": args.method}
    doc["config"] = _echo(args)
    _emit(doc, args)
    return 0


_BOUNDARY_FUNCTIONS = {
    "one": lambda p: np.ones(len(p)),
    "cos": lambda p: p[:, 0] / np.linalg.norm(p, axis=1),
    "indicator-right": lambda p: (p[:, 0] > 0).astype(float),
}


def cmd_harmonic_measure(args) -> int:
    dom = _parse_domain(args.domain)
    f = _BOUNDARY_FUNCTIONS[args.boundary_function]
    res = harmonic_measure_integral(dom, _parse_point(args.pole), f,
                                    args.samples, args.seed)
    doc = res.to_dict()
    doc["config"] = _echo(args)
    _emit(doc, args)
    return 0


def cmd_potential(args) -> int:
    mu = serialize.read_measure(args.measure)
    pole = _parse_point(args.pole_subtraction) if args.pole_subtraction else None
    P = Potential(mu, pole_subtraction=pole)
    val = potential_eval(P, _parse_point(args.point))
    _emit({"value": val, "config": _echo(args)}, args)
    return 0


def cmd_jensen_verify(args) -> int:
    mu = serialize.read_measure(args.measure)
    rep = jensen_measure_check(mu, _parse_point(args.origin),
                               _parse_domain(args.domain),
                               probe_count=args.probes, seed=args.seed)
    doc = rep.to_dict()
    doc["config"] = _echo(args)
    _emit(doc, args)
    return 0 if rep.ok else 1


def cmd_glue(args) -> int:
    cfg = _config_from(args)
    fn = _parse_test_function(args.test_function, cfg)
    res = glue_test_function(fn, cfg)
    doc = res.to_dict()
    doc["config"] = _echo(args)
    _emit(doc, args)
    return 0 if res.ok else 1


def cmd_approx_sequence(args) -> int:
    cfg = _config_from(args)
    fn = _parse_test_function(args.test_function, cfg)
    out = potential_approx_sequence(fn, cfg, args.n, positive=args.positive)
    ok = all(c.get("status") == "pass" for c in out["certificate"].values())
    doc = {"B": out["B"], "certificate": out["certificate"],
           "n": args.n, "config": _echo(args)}
    _emit(doc, args)
    return 0 if ok else 1


def cmd_balayage_check(args) -> int:
    from .balayage import affine_margin, generate_family

    cfg = _config_from(args)
    theta = serialize.read_measure(args.theta)
    mu = serialize.read_measure(args.mu)
    fam = generate_family(args.family, cfg, args.count, args.seed)
    rep = affine_margin(theta, mu, fam)
    doc = rep.to_dict()
    doc["config"] = _echo(args)
    _emit(doc, args)
    if args.csv:
        _emit_csv(doc, args.csv)
    return 0 if rep.consistent else 1


def cmd_crit_consistency(args) -> int:
    from .balayage import crit_consistency

    cfg = _config_from(args)
    u = _parse_field(args.u, cfg.grid)
    M = _parse_field(args.M, cfg.grid)
    hw = _parse_field(args.h_witness, cfg.grid) if args.h_witness else None
    rep = crit_consistency(u, M, cfg, h=hw, count=args.count, seed=args.seed,
                           version=args.version)
    rep["config"] = _echo(args)
    _emit(rep, args)
    if args.csv and rep["statements"]:
        worst = max(rep["statements"].values(),
                    key=lambda r: r["max_margin"])
        _emit_csv(worst, args.csv)
    return 0 if rep["verdict"] == "consistent" else 1


def _zeros_from_args(args) -> ZeroSet:
    if args.zeros.endswith(".txt") or os.path.exists(args.zeros):
        return ZeroSet.from_points(serialize.read_zeros(args.zeros))
    zs = []
    for tok in args.zeros.split(";"):
        parts = [float(t) for t in tok.split(",")]
        zs.append((complex(parts[0], parts[1] if len(parts) > 1 else 0.0),
                   int(parts[2]) if len(parts) > 2 else 1))
    return ZeroSet(zs)


def cmd_pl_check(args) -> int:
    from .fields import Grid
    from .geometry import Box

    if not args.poly and not args.zeros:
        raise ValueError("pl-check needs --poly or --zeros")
    if args.poly:
        roots = []
        for tok in args.poly.split(";"):
            re_, im_ = (float(t) for t in tok.split(","))
            roots.append(complex(re_, im_))
        f = HoloFunction.polynomial(np.poly(roots))
    else:
        zs = ZeroSet.from_points(serialize.read_zeros(args.zeros))
        f = HoloFunction.blaschke(zs.zeros)
    b = args.box
    grid = Grid.from_box(Box((-b + args.h / 3, -b + args.h / 2.7),
                             (b, b)), args.h)
    rep = poincare_lelong_check(f, grid)
    rep["config"] = _echo(args)
    _emit(rep, args)
    worst_rel = max((z["error"] / z["multiplicity"] for z in rep["per_zero"]),
                    default=0.0)
    return 0 if worst_rel < 0.05 else 1


def cmd_zeros_check(args) -> int:
    from .balayage import generate_family

    cfg = _config_from(args)
    Z = _zeros_from_args(args)
    Mp = _parse_field(args.M, cfg.grid)
    Mm = _parse_field(args.M_minus, cfg.grid)
    tag = {"Z1": "sbh_plus0_circ", "Z2": "sbh_plus0_r",
           "Z3": "sbh0_plus"}[args.variant]
    fam = generate_family(tag, cfg, args.count, args.seed)
    rep = zero_margin_check(Z, Mp, Mm, cfg, fam, args.variant)
    doc = rep.to_dict()
    doc["config"] = _echo(args)
    _emit(doc, args)
    if args.csv:
        _emit_csv(doc, args.csv)
    return 0 if rep.consistent else 1


def cmd_crit3(args) -> int:
    cfg = _config_from(args)
    Z = _zeros_from_args(args)
    Mp = _parse_field(args.M, cfg.grid)
    Mm = _parse_field(args.M_minus, cfg.grid)
    rep = crit3_roundtrip(Z, Mp, Mm, cfg, count=args.count, seed=args.seed)
    rep["config"] = _echo(args)
    _emit(rep, args)
    return 0 if rep["verdict"] == "consistent" else 1


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code else 0
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError, KeyError) as exc:
        # gluing preconditions count as input errors: the supplied data
        # violates the hypotheses of the construction
        sys.stderr.write(f"input error: {exc}\n")
        sys.stderr.write(serialize.dumps_report(
            {"error": str(exc), "reason": "input"}))
        return USAGE_ERROR
    except (SolverError, EstimatorError, ResolutionError,
            ConstructionError, np.linalg.LinAlgError, RuntimeError) as exc:
        sys.stderr.write(f"numerical error: {exc}\n")
        sys.stderr.write(serialize.dumps_report(
            {"error": str(exc), "reason": "numerical"}))
        return NUMERICAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
