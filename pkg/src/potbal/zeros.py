"""Zero sets of holomorphic functions on planar domains.

Holomorphic test functions (polynomials, Blaschke products, zero-free
exponentials and finite products), multiplicity counting, the
Riesz-measure-vs-counting-measure consistency check, and the margin
inequalities tying zero sets to growth majorants. All atom sums evaluate
the test functions analytically; the grid enters only through the Riesz
measures of the majorant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .balayage import (DEFAULT_CEILING, DEFAULT_SLOPE_THRESHOLD, MarginReport,
                       TestFamily, _verdict, generate_family)
from .fields import Grid, ScalarField
from .geometry import Domain
from .gluing import GluingConfig
from .measures import DiscreteMeasure, counting_measure, restrict, riesz_measure

__all__ = [
    "HoloFunction",
    "ZeroSet",
    "multiplicity",
    "winding_number",
    "poincare_lelong_check",
    "zero_margin_check",
    "crit3_roundtrip",
    "ResolutionError",
    "blaschke_sum",
]


class ResolutionError(RuntimeError):
    pass


def _as_complex(pts):
    pts = np.atleast_2d(np.asarray(pts, float))
    return pts[:, 0] + 1j * pts[:, 1]


@dataclass
class ZeroSet:
    """Indexed zeros with multiplicities, locally finite in the box."""

    zeros: List[Tuple[complex, int]]

    @classmethod
    def from_points(cls, pts_mults) -> "ZeroSet":
        out = []
        for z, m in pts_mults:
            if np.ndim(z) >= 1:
                a = np.atleast_1d(np.asarray(z, float))
                z = complex(a[0], a[1] if len(a) > 1 else 0.0)
            out.append((complex(z), int(m)))
        return cls(out)

    def counting(self) -> DiscreteMeasure:
        return counting_measure(
            [((z.real, z.imag), m) for z, m in self.zeros])

    def points(self) -> np.ndarray:
        return np.array([[z.real, z.imag] for z, _ in self.zeros]) \
            if self.zeros else np.empty((0, 2))

    def mults(self) -> np.ndarray:
        return np.array([m for _, m in self.zeros], dtype=float)

    def prefix(self, k: int) -> "ZeroSet":
        return ZeroSet(self.zeros[:k])

    def __len__(self):
        return len(self.zeros)


def blaschke_sum(Z: ZeroSet) -> float:
    """sum of (1 - |z_k|) with multiplicity: the disc zero-set criterion."""
    return float(sum(m * (1.0 - abs(z)) for z, m in Z.zeros))


class HoloFunction:
    """Holomorphic function given structurally.

    kinds: "polynomial" (coeffs, highest power first), "blaschke"
    (zeros with multiplicities inside the unit disc, truncation length),
    "exp_field" (zero-free, log-modulus given as a field or callable),
    "product" (list of factors).
    """

    def __init__(self, kind, coeffs=None, zeros=None, truncation=None,
                 log_modulus=None, factors=None, domain: Optional[Domain] = None):
        self.kind = kind
        self.coeffs = None if coeffs is None else np.asarray(coeffs, complex)
        self.zeros = zeros or []
        self.truncation = truncation
        self.log_modulus = log_modulus
        self.factors = factors or []
        self.domain = domain or Domain.ball([0.0, 0.0], 1.0)
        if kind == "blaschke":
            pts = [z for z, _ in self.zeros]
            if any(abs(z) >= 1 for z in pts):
                raise ValueError("Blaschke zeros must lie inside the unit disc")
            n_listed = sum(m for _, m in self.zeros)
            if truncation is not None and truncation < n_listed:
                raise ValueError("truncation shorter than the listed zeros")

    @classmethod
    def polynomial(cls, coeffs, domain=None) -> "HoloFunction":
        return cls("polynomial", coeffs=coeffs, domain=domain)

    @classmethod
    def blaschke(cls, zeros, truncation=None, domain=None) -> "HoloFunction":
        zs = [(complex(z), int(m)) for z, m in zeros]
        return cls("blaschke", zeros=zs,
                   truncation=truncation or sum(m for _, m in zs),
                   domain=domain)

    @classmethod
    def exp_of(cls, log_modulus, domain=None) -> "HoloFunction":
        return cls("exp_field", log_modulus=log_modulus, domain=domain)

    @classmethod
    def product(cls, factors, domain=None) -> "HoloFunction":
        return cls("product", factors=list(factors), domain=domain)

    # -- evaluation --------------------------------------------------------

    def eval_complex(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, complex)
        if self.kind == "polynomial":
            return np.polyval(self.coeffs, z)
        if self.kind == "blaschke":
            out = np.ones_like(z)
            for a, m in self.zeros:
                if a == 0:
                    fac = z
                else:
                    fac = (abs(a) / a) * (a - z) / (1.0 - np.conj(a) * z)
                out = out * fac**m
            return out
        if self.kind == "product":
            out = np.ones_like(z)
            for f in self.factors:
                out = out * f.eval_complex(z)
            return out
        raise ValueError(f"{self.kind!r} has no complex evaluation")

    def log_abs(self, pts) -> np.ndarray:
        if self.kind == "exp_field":
            if isinstance(self.log_modulus, ScalarField):
                return np.atleast_1d(self.log_modulus.sample(pts))
            return np.atleast_1d(np.asarray(self.log_modulus(
                np.atleast_2d(pts)), float))
        if self.kind == "product":
            return sum(f.log_abs(pts) for f in self.factors)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.eval_complex(_as_complex(pts))))

    def zero_list(self, merge_tol: float = 1e-9) -> List[Tuple[complex, int]]:
        if self.kind == "polynomial":
            roots = np.roots(self.coeffs)
            out: List[Tuple[complex, int]] = []
            for r in roots:
                for i, (z, m) in enumerate(out):
                    if abs(z - r) < max(merge_tol, 1e-7 * max(1, abs(r))):
                        out[i] = ((z * m + r) / (m + 1), m + 1)
                        break
                else:
                    out.append((complex(r), 1))
            return out
        if self.kind == "blaschke":
            return list(self.zeros)
        if self.kind == "exp_field":
            return []
        if self.kind == "product":
            out = []
            for f in self.factors:
                out.extend(f.zero_list(merge_tol))
            return out
        return []


def winding_number(f: HoloFunction, center, radius: float,
                   n: int = 512) -> float:
    """Winding of f around a circle via summed phase increments."""
    ang = 2 * np.pi * np.arange(n + 1) / n
    z = complex(*np.atleast_1d(center)[:2]) + radius * np.exp(1j * ang)
    vals = f.eval_complex(z)
    if np.any(vals == 0):
        raise ResolutionError("function vanishes on the test circle")
    phases = np.angle(vals[1:] / vals[:-1])
    return float(np.sum(phases) / (2 * np.pi))


def multiplicity(f: HoloFunction, z, grid_h: float = 1.0 / 256.0) -> int:
    """Zero multiplicity at a point.

    Polynomials and Blaschke products are counted algebraically; product
    and other evaluable kinds fall back to the winding number on a circle
    of radius 5 * grid_h, certified to be integral within 0.1.
    """
    z = complex(*np.atleast_1d(z)[:2]) if not isinstance(z, complex) else z
    if f.kind == "polynomial":
        c = f.coeffs
        scale = float(np.max(np.abs(c))) * max(1.0, abs(z)) ** (len(c) - 1)
        for k in range(len(c)):
            val = np.polyval(c, z)
            if abs(val) > 1e-8 * max(scale, 1e-300):
                return k
            c = np.polyder(c)
        return len(f.coeffs) - 1
    if f.kind == "blaschke":
        return sum(m for a, m in f.zeros if abs(a - z) < 1e-9)
    if f.kind == "exp_field":
        return 0
    w = winding_number(f, (z.real, z.imag), 5 * grid_h)
    k = round(w)
    if abs(w - k) > 0.1:
        raise ResolutionError(
            f"winding number {w:.3f} not integral at {z}: refine the grid")
    return int(k)


def poincare_lelong_check(f: HoloFunction, grid: Grid,
                          ball_factor: float = 5.0) -> dict:
    """Mass of the Riesz measure of ln|f| near each zero vs multiplicity.

    Requires pairwise zero separation of at least 10 h. Reports the worst
    absolute mass error and the total-mass comparison over the grid box.
    """
    zl = f.zero_list()
    pts = np.array([[z.real, z.imag] for z, _ in zl]) if zl else np.empty((0, 2))
    h = grid.h
    if len(pts) > 1:
        d2 = np.linalg.norm(pts[:, None] - pts[None, :], axis=-1)
        np.fill_diagonal(d2, np.inf)
        if d2.min() < 10 * h:
            raise ResolutionError(
                f"zeros closer than 10h = {10 * h:.3g}: refine the grid")
    vals = f.log_abs(grid.points()).reshape(grid.shape)
    fld = ScalarField(grid, np.where(np.isfinite(vals), vals, -np.inf))
    mu, flags = riesz_measure(fld)
    cm = mu.cell_masses
    gpts = grid.points().reshape(*grid.shape, 2)
    per_zero = []
    worst = 0.0
    for z, m in zl:
        dist = np.linalg.norm(gpts - np.array([z.real, z.imag]), axis=-1)
        mass = float(cm[dist < ball_factor * h].sum())
        err = abs(mass - m)
        worst = max(worst, err)
        per_zero.append({"zero": [z.real, z.imag], "multiplicity": m,
                         "mass": mass, "error": err})
    return {"per_zero": per_zero, "max_error": worst,
            "total_mass": float(cm.sum()),
            "total_multiplicity": float(sum(m for _, m in zl)),
            "h": h, "flags": flags}


# tags admissible per variant: a subset class is always admissible
VARIANT_FAMILIES = {
    "Z1": {"sbh_plus0_circ", "sbh_plus0_r", "sbh00_r", "smooth_00",
           "sbh0_plus", "sbh00_plus"},
    "Z2": {"sbh_plus0_r", "sbh00_r", "smooth_00", "sbh0_plus", "sbh00_plus"},
    "Z3": {"sbh0_plus", "sbh00_plus"},
}


def zero_margin_check(Z: ZeroSet, M_plus: ScalarField, M_minus: ScalarField,
                      cfg: GluingConfig, family: TestFamily, variant: str,
                      ceiling: float = DEFAULT_CEILING,
                      slope_threshold: float = DEFAULT_SLOPE_THRESHOLD
                      ) -> MarginReport:
    """Margins of the zero-distribution inequalities.

    Z1: sum of v over zeros off the core vs the majorant Riesz charge off
    the 4r-parallel set plus the band term of the negative part;
    Z2: vs the charge off the core; Z3: the same for a subdivisor with a
    positive family. The family tag must match the variant.
    """
    variant = variant.upper()
    if variant not in VARIANT_FAMILIES:
        raise ValueError("variant must be one of Z1, Z2, Z3")
    if family.class_tag not in VARIANT_FAMILIES[variant]:
        raise ValueError(
            f"variant {variant} needs one of {sorted(VARIANT_FAMILIES[variant])},"
            f" got {family.class_tag!r}")
    d_plus, _ = riesz_measure(M_plus)
    d_minus, _ = riesz_measure(M_minus)
    o = np.asarray(cfg.o)

    def off_core(pts):
        pts = np.atleast_2d(pts)
        return np.atleast_1d(cfg.domain.contains(pts)) \
            & (cfg.S_o.dist_to(pts) > 0)

    def off_4r(pts):
        pts = np.atleast_2d(pts)
        return np.atleast_1d(cfg.domain.contains(pts)) \
            & (cfg.S_o.dist_to(pts) >= 4 * cfg.r)

    def band(pts):
        pts = np.atleast_2d(pts)
        dd = cfg.S_o.dist_to(pts)
        return np.atleast_1d(cfg.domain.contains(pts)) \
            & (dd > 0) & (dd < 4 * cfg.r)

    zpts = Z.points()
    zm = Z.mults()
    keep = off_core(zpts) if len(zpts) else np.zeros(0, bool)
    margins, params, labels = [], [], []
    excluded = 0
    dp_off4, dm_off4 = restrict(d_plus, off_4r), restrict(d_minus, off_4r)
    dp_core, dm_core = restrict(d_plus, off_core), restrict(d_minus, off_core)
    dm_band = restrict(d_minus, band)
    from .measures import integrate

    for member in family.members:
        try:
            lhs = float(np.sum(zm[keep] * np.asarray(
                member(zpts[keep]), float))) if keep.any() else 0.0
            if variant == "Z1":
                rhs = (integrate(member, dp_off4)
                       - integrate(member, dm_off4)
                       - integrate(member, dm_band))
            else:
                rhs = integrate(member, dp_core) - integrate(member, dm_core)
            margins.append(lhs - rhs)
        except (ValueError, FloatingPointError):
            excluded += 1
            continue
        params.append(member.param)
        labels.append(member.label)
    verdict, witness, max_margin, slope = _verdict(
        margins, params, ceiling, slope_threshold)
    return MarginReport(f"{variant}:{family.class_tag}", margins, params,
                        labels, verdict, witness, max_margin, slope, ceiling,
                        excluded)


def crit3_roundtrip(Z: ZeroSet, M_plus: ScalarField, M_minus: ScalarField,
                    cfg: GluingConfig, count: int = 6, seed: int = 0,
                    ceiling: float = DEFAULT_CEILING) -> dict:
    """All four zero-set criteria on the disc.

    Forward: a truncated Blaschke-type product for Z times the constant
    majorant surrogate exp(inf(M - ln|B|)) witnesses feasibility; the
    certificate samples |f| exp(-M) on the grid. Backward: the three
    margin inequalities with their matched families. Non-Blaschke zero
    sets surface as forward infeasibility (the surrogate constant
    collapses) paired with margin divergence.
    """
    if cfg.domain.kind != "ball":
        raise ValueError("the supported simply connected case is the disc")
    out: dict = {"seed": seed}
    B = HoloFunction.blaschke([(z, int(m)) for z, m in Z.zeros])
    pts = cfg.grid.points()
    inside = np.atleast_1d(cfg.domain.contains(pts))
    sample = pts[inside]
    with np.errstate(divide="ignore"):
        logB = B.log_abs(sample)
    M_vals = (M_plus.values - M_minus.values).ravel()[inside.ravel()]
    gap = M_vals - logB
    c = float(np.min(gap[np.isfinite(gap)]))
    excess = float(np.max(logB + c - M_vals))
    bsum = blaschke_sum(Z)
    o_val = float(np.abs(B.eval_complex(np.array([complex(*cfg.o)]))[0]))
    out["z1"] = {
        "blaschke_sum": bsum,
        "surrogate_constant": c,
        "sup_log_ratio": excess,
        "feasible": bool(excess <= 1e-6),
        "product_modulus_max": float(np.exp(np.max(logB))),
        # local collapse of the truncated product: -> 0 for non-Blaschke sets
        "product_modulus_at_o": o_val,
    }
    fams = {
        "z2": generate_family("sbh_plus0_circ", cfg, count, seed),
        "z3": generate_family("sbh_plus0_r", cfg, count, seed + 1),
        "z4": generate_family("smooth_00", cfg, count, seed + 2),
    }
    variants = {"z2": "Z1", "z3": "Z2", "z4": "Z2"}
    for key, fam in fams.items():
        rep = zero_margin_check(Z, M_plus, M_minus, cfg, fam, variants[key],
                                ceiling=ceiling)
        out[key] = rep.to_dict()
    verdicts = [out["z1"]["feasible"]] + \
        [out[k]["verdict"] == "consistent" for k in ("z2", "z3", "z4")]
    out["verdict"] = "consistent" if all(verdicts) else "violated"
    out["agreement"] = bool(all(verdicts) or not any(verdicts))
    return out
