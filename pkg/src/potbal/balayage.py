"""Balayage margin machinery: test-function families, affine/linear margin
reports, preorder consistency checks and the embedding diagram.

A family is a finite sample of an infinite class, so a "consistent"
verdict is evidence while a violation is a certificate. Divergence of the
affine constant is detected along the subdomain-radius sweep: the verdict
flips to violated when margins exceed the ceiling with a positive fitted
slope.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .fields import ScalarField, spherical_means
from .geometry import CompactSet, Domain
from .gluing import GluingConfig
from .green import GreenSpec, green_values, harmonic_measure_atoms
from .measures import DiscreteMeasure, integrate, restrict, riesz_measure
from .potentials import _pole_ratio_fit

__all__ = [
    "TestFunction",
    "TestFamily",
    "MarginReport",
    "generate_family",
    "affine_margin",
    "crit_consistency",
    "embedding_check",
    "FamilyGenerationError",
    "DEFAULT_CEILING",
    "DEFAULT_SLOPE_THRESHOLD",
]

DEFAULT_CEILING = 3.0
DEFAULT_SLOPE_THRESHOLD = 0.5
LINEAR_TOL = 1e-6

FUNCTION_TAGS = {
    "G_o", "sbh0_plus", "sbh00_plus", "sbh_plus0_r", "sbh_plus0_circ",
    "sbh00_r", "smooth_00", "JP", "JP1", "ASP", "ASP1", "JP1_har",
    "ASP1_har",
}
MEASURE_TAGS = {"Omega_o", "J_smooth", "AS_smooth"}


class FamilyGenerationError(RuntimeError):
    pass


@dataclass
class TestFunction:
    """Pointwise-evaluable family member with an optional sweep parameter.

    Potential-type members carry their Riesz measure when the generator
    knows it (used by the kernel lower-bound oracle)."""

    fn: Callable
    label: str
    param: Optional[float] = None
    smooth: bool = False
    measure: Optional[DiscreteMeasure] = None

    def __call__(self, pts):
        return np.asarray(self.fn(np.atleast_2d(np.asarray(pts, float))),
                          float)


@dataclass
class TestFamily:
    class_tag: str
    members: List[TestFunction] = field(default_factory=list)
    measures: List[DiscreteMeasure] = field(default_factory=list)
    params: List[Optional[float]] = field(default_factory=list)
    seed: Optional[int] = None

    def __len__(self):
        return len(self.members) or len(self.measures)


@dataclass
class MarginReport:
    class_tag: str
    margins: List[float]
    params: List[Optional[float]]
    labels: List[str]
    verdict: str
    witness: Optional[str]
    max_margin: float
    slope: Optional[float]
    ceiling: float
    excluded: int = 0

    @property
    def consistent(self) -> bool:
        return self.verdict.startswith("consistent")

    def to_dict(self) -> dict:
        return {"class_tag": self.class_tag, "margins": self.margins,
                "params": self.params, "labels": self.labels,
                "verdict": self.verdict, "witness": self.witness,
                "max_margin": self.max_margin, "slope": self.slope,
                "ceiling": self.ceiling, "excluded": self.excluded,
                "family_size": len(self.margins)}


def _fit_slope(params, margins):
    pts = [(p, m) for p, m in zip(params, margins)
           if p is not None and np.isfinite(m)]
    if len(pts) < 3:
        return None
    x = np.array([p for p, _ in pts])
    y = np.array([m for _, m in pts])
    if np.ptp(x) <= 0:
        return None
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0])


def _verdict(margins, params, ceiling, slope_threshold, linear=False):
    finite = [m for m in margins if np.isfinite(m)]
    max_margin = max(finite) if finite else 0.0
    witness = None
    slope = _fit_slope(params, margins)
    if any(not np.isfinite(m) for m in margins):
        k = next(i for i, m in enumerate(margins) if not np.isfinite(m))
        return "violated", f"member {k}: infinite margin", max_margin, slope
    if max_margin > ceiling and slope is not None and slope > slope_threshold:
        k = int(np.argmax(margins))
        witness = (f"member {k}: margins exceed ceiling {ceiling} "
                   f"with fitted slope {slope:.3g}")
        return "violated", witness, max_margin, slope
    if linear and max_margin > LINEAR_TOL:
        k = int(np.argmax(margins))
        return ("violated", f"member {k}: positive margin {max_margin:.3g} "
                "in the linear variant", max_margin, slope)
    return "consistent", None, max_margin, slope


# ---------------------------------------------------------------------------
# family generation
# ---------------------------------------------------------------------------


def _subdomain_radii(cfg: GluingConfig, count: int, hi_frac: float = 0.99,
                     lo_extra: float = 0.0):
    """Radii of subdomains D' = ball(center_D, rho) containing S_o, swept
    toward the outer boundary (the affine constant must be uniform along
    exactly this sweep)."""
    dom = cfg.domain
    if dom.kind != "ball":
        raise FamilyGenerationError(
            "family sweeps need a ball ambient domain")
    c = np.asarray(dom.params["center"])
    R = dom.params["radius"]
    centers, radii = cfg.S_o.balls
    need = float((np.linalg.norm(centers - c, axis=-1) + radii).max())
    lo = need + max(4 * cfg.h, 0.02 * R) + lo_extra
    hi = hi_frac * R
    if not lo < hi:
        raise FamilyGenerationError("no room for a subdomain sweep")
    return np.linspace(lo, hi, count)


def _green_member(cfg: GluingConfig, rho: float) -> TestFunction:
    dom = cfg.domain
    sub = Domain.ball(dom.params["center"], rho)
    spec = GreenSpec(sub, cfg.o, "closed_form")
    return TestFunction(lambda pts, s=spec: green_values(s, pts),
                        label=f"green[rho={rho:.4g}]", param=float(rho))


def _ambient_green_member(cfg: GluingConfig) -> TestFunction:
    spec = cfg._green_spec(cfg.domain)
    if spec.method == "closed_form":
        fn = lambda pts, s=spec: green_values(s, pts)  # noqa: E731
    else:
        fld = cfg.outer_green_field()
        fn = lambda pts, f=fld: np.nan_to_num(f.sample(pts))  # noqa: E731
    return TestFunction(fn, label="green[ambient]",
                        param=float(cfg.domain.diameter / 2))


def _sup_on_complement(cfg: GluingConfig, fn) -> float:
    sel = cfg.in_domain & (cfg.dist_S > 0)
    pts = cfg.grid.points()[sel.ravel()]
    return float(np.max(fn(pts)))


def _truncated_member(cfg: GluingConfig, rho, a, c) -> TestFunction:
    """max(0, a (g_D' - c)), rescaled under the ceiling b_plus."""
    base = _green_member(cfg, rho)

    def fn(pts):
        return np.maximum(0.0, a * (base(pts) - c))

    sup = _sup_on_complement(cfg, fn)
    scale = 1.0 if sup <= cfg.b_plus else cfg.b_plus / sup

    def scaled(pts, fn=fn, s=scale):
        return s * fn(pts)

    return TestFunction(scaled, label=f"trunc[rho={rho:.4g},a={a:.3g},c={c:.3g}]",
                        param=float(rho))


def _dip_member(cfg: GluingConfig, rng) -> Optional[TestFunction]:
    """a g_D(., o) + eps (g_D(., o1) - g_D(., o2)) with poles inside S_o:
    vanishes at the boundary, positive near it, dips negative near S_o."""
    centers, radii = cfg.S_o.balls
    k = int(np.argmax(radii))
    c0, r0 = centers[k], radii[k]
    if r0 <= 0:
        return None
    spec0 = cfg._green_spec(cfg.domain)
    if spec0.method != "closed_form":
        return None
    ang = rng.uniform(0, 2 * np.pi)
    d1 = 0.3 * r0 * np.array([np.cos(ang), np.sin(ang)])
    o1 = tuple(c0 + d1)
    o2 = tuple(c0 + 0.85 * r0 * np.array([np.cos(ang), np.sin(ang)]))
    s0 = GreenSpec(cfg.domain, cfg.o, "closed_form")
    s1 = GreenSpec(cfg.domain, o1, "closed_form")
    s2 = GreenSpec(cfg.domain, o2, "closed_form")
    a = rng.uniform(0.2, 0.5)
    eps = a * rng.uniform(0.8, 1.2)

    def fn(pts):
        return (a * green_values(s0, pts)
                + eps * (green_values(s1, pts) - green_values(s2, pts)))

    sup = _sup_on_complement(cfg, fn)
    scale = 1.0 if sup <= cfg.b_plus else cfg.b_plus / sup

    def scaled(pts, fn=fn, s=scale):
        return s * fn(pts)

    return TestFunction(scaled, label=f"dip[a={a:.3g},eps={eps:.3g}]",
                        param=None)


def _mollified(member: TestFunction, width: float, n: int = 16
               ) -> TestFunction:
    """Disc-average smoothing: keeps subharmonicity, smooths kinks."""
    ang = 2 * np.pi * (np.arange(n) + 0.5) / n
    ring = np.stack([np.cos(ang), np.sin(ang)], -1)
    offs = np.concatenate([width * ring, 0.5 * width * ring,
                           np.zeros((1, 2))])
    w = np.concatenate([np.full(n, 0.4 / n), np.full(n, 0.4 / n),
                        np.array([0.2])])

    def fn(pts, base=member.fn):
        pts = np.atleast_2d(pts)
        vals = np.stack([np.asarray(base(pts + o), float) for o in offs])
        return np.tensordot(w, vals, axes=1)

    return TestFunction(fn, label="mollified:" + member.label,
                        param=member.param, smooth=True)


def _potential_member(cfg: GluingConfig, rhos, weights, scale=1.0,
                      label="jp") -> TestFunction:
    members = [_green_member(cfg, rho) for rho in rhos]
    weights = np.asarray(weights, float)
    weights = weights / weights.sum()

    def fn(pts):
        return scale * sum(w * m(pts) for w, m in zip(weights, members))

    mu = None
    for w, rho in zip(weights, rhos):
        sub = Domain.ball(cfg.domain.params["center"], rho)
        part = harmonic_measure_atoms(sub, cfg.o, n=128).scaled(w * scale)
        mu = part if mu is None else mu + part
    return TestFunction(fn, label=f"{label}[{len(rhos)} greens,s={scale:.3g}]",
                        param=float(max(rhos)), measure=mu)


def _as_two_circle_measure(cfg: GluingConfig, rho1, rho2, t, n=256
                           ) -> DiscreteMeasure:
    """Arens-Singer, generally non-Jensen: cosine-weighted mass on the
    rho1-circle balanced by a counter-weighted rho2-circle so that all
    harmonic moments about o vanish."""
    o = np.asarray(cfg.o)
    ang = 2 * np.pi * (np.arange(n) + 0.5) / n
    c1 = o + rho1 * np.stack([np.cos(ang), np.sin(ang)], -1)
    c2 = o + rho2 * np.stack([np.cos(ang), np.sin(ang)], -1)
    beta = t * rho1 / ((1 - t) * rho2)
    w1 = t * (1.0 + np.cos(ang)) / n
    w2 = (1 - t) * (1.0 - beta * np.cos(ang)) / n
    if w2.min() < 0:
        raise FamilyGenerationError("two-circle weights not positive")
    return DiscreteMeasure(2, np.concatenate([c1, c2]),
                           np.concatenate([w1, w2]))


def _disc_area_measure(o, rho, n_r=12, n_t=48) -> DiscreteMeasure:
    """Normalized area of B(o, rho) on a polar quadrature grid (the smooth
    Jensen measure surrogate)."""
    o = np.asarray(o, float)
    x, gw = np.polynomial.legendre.leggauss(n_r)
    rr = 0.5 * rho * (x + 1.0)
    wr = 0.5 * rho * gw * rr
    ang = 2 * np.pi * (np.arange(n_t) + 0.5) / n_t
    pts = (o[None, None, :]
           + rr[:, None, None] * np.stack([np.cos(ang), np.sin(ang)],
                                          -1)[None, :, :])
    w = np.broadcast_to(wr[:, None], (n_r, n_t)) * (2 * np.pi / n_t)
    w = (w / (np.pi * rho**2)).ravel()
    return DiscreteMeasure(2, pts.reshape(-1, 2), w)


def _annulus_area_measure(o, rho1, rho2, n_r=8, n_t=48) -> DiscreteMeasure:
    o = np.asarray(o, float)
    x, gw = np.polynomial.legendre.leggauss(n_r)
    rr = rho1 + 0.5 * (rho2 - rho1) * (x + 1.0)
    wr = 0.5 * (rho2 - rho1) * gw * rr
    ang = 2 * np.pi * (np.arange(n_t) + 0.5) / n_t
    pts = (o[None, None, :]
           + rr[:, None, None] * np.stack([np.cos(ang), np.sin(ang)],
                                          -1)[None, :, :])
    w = np.broadcast_to(wr[:, None], (n_r, n_t)) * (2 * np.pi / n_t)
    w = (w / (np.pi * (rho2**2 - rho1**2))).ravel()
    return DiscreteMeasure(2, pts.reshape(-1, 2), w)


def verify_member(member: TestFunction, tag: str, cfg: GluingConfig,
                  tol: Optional[float] = None) -> Optional[str]:
    """Class-membership verifier; returns a reason string on failure."""
    if tol is None:
        tol = 5 * cfg.h
    pts = cfg.grid.points()
    vals = np.asarray(member(pts), float).reshape(cfg.grid.shape)
    region = cfg.in_domain & (cfg.dist_S > 0)
    if tag in {"sbh0_plus", "sbh00_plus", "sbh_plus0_r", "sbh_plus0_circ",
               "sbh00_r", "smooth_00"}:
        if (vals[region] > cfg.b_plus + tol).any():
            return "exceeds b_plus"
    sd = np.atleast_1d(cfg.domain.signed_distance(pts)).reshape(cfg.grid.shape)
    near = (sd > 0) & (sd < 3 * cfg.h)
    if tag in {"sbh00_plus", "sbh00_r", "smooth_00"}:
        if (np.abs(vals[near]) > tol).any():
            return "does not vanish near the boundary"
    if tag in {"sbh0_plus", "sbh00_plus"}:
        if (vals[region] < -tol).any():
            return "not positive"
    if tag in {"sbh_plus0_r", "sbh_plus0_circ"}:
        if (vals[near] < -tol).any():
            return "not positive near the boundary"
    if tag in {"sbh_plus0_r", "sbh00_r"}:
        band = cfg.band(0, 4)
        if (vals[band] < cfg.b_minus - tol).any():
            return "undercuts b_minus on the 4r band"
    if tag == "sbh_plus0_circ":
        f = ScalarField(cfg.grid, np.where(np.isfinite(vals), vals, 0.0))
        ring = cfg.band(2, 3)
        centers = pts.reshape(*cfg.grid.shape, cfg.grid.d)[ring]
        means = spherical_means(f, centers, cfg.r)
        means = means[~np.isnan(means)]
        if means.size and means.min() < cfg.b_minus - tol:
            return "r-sphere means undercut b_minus"
    if tag in {"JP", "JP1", "ASP", "ASP1", "G_o", "JP1_har", "ASP1_har"}:
        f = ScalarField(cfg.grid, np.where(np.isfinite(vals), vals, 0.0))
        fit_r = max(12 * cfg.h, 0.4 * cfg._o_depth)
        try:
            a, _, resid = _pole_ratio_fit(f, np.asarray(cfg.o),
                                          [fit_r, fit_r / 2, fit_r / 4])
        except ValueError:
            return "pole ratio not resolvable"
        if a > 1.0 + 0.05:
            return f"pole coefficient {a:.3g} above 1"
        if tag in {"JP1", "ASP1", "G_o", "JP1_har", "ASP1_har"} \
                and abs(a - 1.0) > 0.05:
            return f"pole coefficient {a:.3g} not 1"
        if tag in {"JP", "JP1", "G_o", "JP1_har"}:
            off = cfg.dist_o > 3 * cfg.h
            if (vals[off & region] < -tol).any():
                return "Jensen potential not positive"
    return None


def generate_family(class_tag: str, cfg: GluingConfig, count: int = 8,
                    seed: int = 0, hi_frac: float = 0.99,
                    verify: bool = True) -> TestFamily:
    """Deterministic family of verified members of the tagged class.

    Members failing their class verifier are discarded and regenerated
    with fresh randomness; persistent failure raises.
    """
    rng = np.random.default_rng(seed)
    fam = TestFamily(class_tag=class_tag, seed=seed)
    if class_tag in MEASURE_TAGS:
        radii = _subdomain_radii(cfg, count, hi_frac)
        if class_tag == "Omega_o":
            for rho in radii:
                sub = Domain.ball(cfg.domain.params["center"], rho)
                mu = harmonic_measure_atoms(sub, cfg.o, n=512)
                fam.measures.append(mu)
                fam.params.append(float(rho))
        elif class_tag == "J_smooth":
            depth = cfg.domain.signed_distance(np.asarray(cfg.o))
            for rho in np.linspace(0.3, 0.9, count) * depth:
                fam.measures.append(_disc_area_measure(cfg.o, rho))
                fam.params.append(float(rho))
        else:  # AS_smooth
            depth = cfg.domain.signed_distance(np.asarray(cfg.o))
            for frac in np.linspace(0.35, 0.85, count):
                fam.measures.append(_annulus_area_measure(
                    cfg.o, 0.5 * frac * depth, frac * depth))
                fam.params.append(float(frac * depth))
        return fam
    if class_tag not in FUNCTION_TAGS:
        raise ValueError(f"unknown family tag {class_tag!r}")

    need_eval = []
    if class_tag == "G_o":
        for rho in _subdomain_radii(cfg, count, hi_frac):
            need_eval.append(_green_member(cfg, rho))
    elif class_tag in {"sbh0_plus", "sbh00_plus", "sbh_plus0_r",
                       "sbh_plus0_circ", "sbh00_r", "smooth_00"}:
        radii = _subdomain_radii(cfg, max(count - 2, 3), hi_frac)
        attempts = 0
        while len(need_eval) < len(radii) and attempts < 8 * len(radii):
            rho = radii[len(need_eval)]
            a = rng.uniform(0.3, 1.0)
            c = rng.uniform(0.01, 0.1)
            m = _truncated_member(cfg, rho, a, c)
            if class_tag == "smooth_00":
                m = _mollified(m, width=1.5 * cfg.h)
            if verify and verify_member(m, class_tag, cfg) is not None:
                attempts += 1
                continue
            need_eval.append(m)
            attempts += 1
        if class_tag in {"sbh0_plus", "sbh_plus0_r", "sbh_plus0_circ"}:
            g_amb = _ambient_green_member(cfg)
            sup = _sup_on_complement(cfg, g_amb.fn)
            scale = min(1.0, cfg.b_plus / sup)
            member = TestFunction(
                lambda pts, g=g_amb.fn, s=scale: s * np.asarray(g(pts)),
                label=f"green[ambient,s={scale:.3g}]", param=g_amb.param)
            need_eval.append(member)
        if class_tag in {"sbh_plus0_r", "sbh_plus0_circ"}:
            m = _dip_member(cfg, rng)
            if m is not None and (not verify or
                                  verify_member(m, class_tag, cfg) is None):
                need_eval.append(m)
    elif class_tag in {"JP", "JP1", "ASP", "ASP1", "JP1_har", "ASP1_har"}:
        lo_extra = 0.0
        if class_tag in {"JP1_har", "ASP1_har"}:
            # supports away from a neighborhood of S_o^{4r}: harmonic there
            lo_extra = 4 * cfg.r + 2 * cfg.h
        radii = _subdomain_radii(cfg, max(count, 3), hi_frac, lo_extra)
        for i in range(count):
            k = int(rng.integers(1, 4))
            rhos = rng.choice(radii, size=k, replace=False)
            weights = rng.dirichlet(np.ones(k))
            scale = 1.0
            if class_tag in {"JP", "ASP"}:
                scale = float(rng.uniform(0.3, 1.0))
            need_eval.append(_potential_member(
                cfg, rhos, weights, scale, label=class_tag))
        if class_tag in {"ASP1", "ASP1_har"}:
            depth = cfg.domain.signed_distance(np.asarray(cfg.o))
            rho1 = lo_extra + 0.1 * depth if lo_extra else 0.45 * depth
            rho2 = min(0.95 * depth, rho1 * 1.6)
            try:
                mu = _as_two_circle_measure(cfg, rho1, rho2, t=0.35)
                from .potentials import duality_forward, potential_values

                P = duality_forward(mu, cfg.o)
                need_eval.append(TestFunction(
                    lambda pts, P=P: potential_values(P, pts),
                    label="asp[two-circle]", param=float(rho2), measure=mu))
            except FamilyGenerationError:
                pass
    else:
        raise ValueError(f"unknown family tag {class_tag!r}")

    kept = []
    for m in need_eval:
        if verify:
            why = verify_member(m, class_tag, cfg)
            if why is not None:
                continue
        kept.append(m)
    if not kept:
        raise FamilyGenerationError(
            f"no verified members for {class_tag!r}")
    fam.members = kept
    fam.params = [m.param for m in kept]
    return fam


# ---------------------------------------------------------------------------
# margins
# ---------------------------------------------------------------------------


def affine_margin(theta: DiscreteMeasure, mu: DiscreteMeasure,
                  family: TestFamily, region=None,
                  region_rhs=None, ceiling: float = DEFAULT_CEILING,
                  slope_threshold: float = DEFAULT_SLOPE_THRESHOLD,
                  linear: bool = False) -> MarginReport:
    """Margins int v dtheta - int v dmu over the family members.

    region restricts both measures (region_rhs overrides the right-hand
    side, as in the deflated-band statements). Members failing to evaluate
    are excluded and counted.
    """
    margins, params, labels = [], [], []
    excluded = 0
    theta_r = restrict(theta, region) if region is not None else theta
    mu_r = restrict(mu, region_rhs if region_rhs is not None else region) \
        if (region is not None or region_rhs is not None) else mu
    for member in family.members:
        try:
            lhs = integrate(member, theta_r)
            rhs = integrate(member, mu_r)
            margins.append(float(lhs - rhs))
        except (ValueError, FloatingPointError):
            excluded += 1
            continue
        params.append(member.param)
        labels.append(member.label)
    verdict, witness, max_margin, slope = _verdict(
        margins, params, ceiling, slope_threshold, linear)
    return MarginReport(family.class_tag, margins, params, labels, verdict,
                        witness, max_margin, slope, ceiling, excluded)


def measure_margin(u, M, family: TestFamily, ceiling: float = DEFAULT_CEILING,
                   slope_threshold: float = DEFAULT_SLOPE_THRESHOLD
                   ) -> MarginReport:
    """Margins int u dmu - int M dmu over the family measures."""
    margins, params, labels = [], [], []
    excluded = 0
    for k, mu in enumerate(family.measures):
        try:
            margins.append(float(integrate(u, mu) - integrate(M, mu)))
        except (ValueError, FloatingPointError):
            excluded += 1
            continue
        params.append(family.params[k])
        labels.append(f"measure[{k}]")
    verdict, witness, max_margin, slope = _verdict(
        margins, params, ceiling, slope_threshold)
    return MarginReport(family.class_tag, margins, params, labels, verdict,
                        witness, max_margin, slope, ceiling, excluded)


# ---------------------------------------------------------------------------
# consistency of the preorder criteria
# ---------------------------------------------------------------------------

SUBHARMONIC_STATEMENTS = ("s2", "s3", "s4", "s5", "s6", "s7", "s8", "s9")
HARMONIC_STATEMENTS = ("h2", "h3", "h4", "h5", "h6", "h7", "h8")


def crit_consistency(u: ScalarField, M: ScalarField, cfg: GluingConfig,
                     h: Optional[ScalarField] = None, count: int = 8,
                     seed: int = 0, version: str = "subharmonic",
                     ceiling: float = DEFAULT_CEILING,
                     slope_threshold: float = DEFAULT_SLOPE_THRESHOLD
                     ) -> dict:
    """Statement-wise margin reports for the preorder criteria.

    With a witness h (u + h <= M pointwise) every downstream statement
    must report consistent; an inconsistency is surfaced as a
    falsification finding, not absorbed.
    """
    if u.grid != cfg.grid or M.grid != cfg.grid:
        raise ValueError("fields must live on the config grid")
    out: dict = {"version": version, "seed": seed, "statements": {}}
    witnessed = False
    if h is not None:
        both = u.finite_mask() & h.finite_mask() & M.finite_mask() \
            & cfg.in_domain
        gap = (u.values + h.values - M.values)[both]
        worst = float(gap.max()) if gap.size else 0.0
        witnessed = worst <= 5 * cfg.h
        out["witness"] = {"checked": True, "holds": witnessed,
                          "worst_gap": worst}
    du, flags_u = riesz_measure(u)
    dM, flags_M = riesz_measure(M)
    out["riesz_flags"] = {"u": flags_u, "M": flags_M}
    o = np.asarray(cfg.o)

    def region_in_domain(pts):
        return np.atleast_1d(cfg.domain.contains(pts))

    def region_off_core(pts):
        pts = np.atleast_2d(pts)
        return region_in_domain(pts) & (cfg.S_o.dist_to(pts) > 0)

    def region_off_4r(pts):
        pts = np.atleast_2d(pts)
        return region_in_domain(pts) & (cfg.S_o.dist_to(pts) >= 4 * cfg.r)

    def region_off_pole(pts):
        pts = np.atleast_2d(pts)
        return region_in_domain(pts) & (
            np.linalg.norm(pts - o, axis=-1) > 1e-12)

    stmts = SUBHARMONIC_STATEMENTS if version == "subharmonic" \
        else HARMONIC_STATEMENTS
    reports = {}
    for st in stmts:
        if st in ("s2", "h2"):
            fam = generate_family("Omega_o", cfg, count, seed)
            fam2 = generate_family(
                "J_smooth" if version == "subharmonic" else "AS_smooth",
                cfg, max(3, count // 2), seed + 1)
            fam.measures += fam2.measures
            fam.params += fam2.params
            rep = measure_margin(u, M, fam, ceiling, slope_threshold)
        elif st in ("s3", "h3"):
            fam = generate_family(
                "J_smooth" if version == "subharmonic" else "AS_smooth",
                cfg, count, seed + 2)
            rep = measure_margin(u, M, fam, ceiling, slope_threshold)
        elif st == "s4":
            fam = generate_family("Omega_o", cfg, count, seed + 3)
            rep = measure_margin(u, M, fam, ceiling, slope_threshold)
        elif st == "s5":
            fam = generate_family("G_o", cfg, count, seed + 4)
            rep = affine_margin(du, dM, fam, region=region_off_pole,
                                ceiling=ceiling,
                                slope_threshold=slope_threshold)
        elif st in ("s6", "h4"):
            fam = generate_family(
                "JP" if version == "subharmonic" else "ASP",
                cfg, count, seed + 5)
            rep = affine_margin(du, dM, fam, region=region_off_pole,
                                ceiling=ceiling,
                                slope_threshold=slope_threshold)
        elif st == "s7":
            fam = generate_family("sbh0_plus", cfg, count, seed + 6)
            rep = affine_margin(du, dM, fam, region=region_off_core,
                                ceiling=ceiling,
                                slope_threshold=slope_threshold)
        elif st == "h5":
            fam = generate_family("sbh_plus0_circ", cfg, count, seed + 6)
            rep = affine_margin(du, dM, fam, region=region_off_core,
                                region_rhs=region_off_4r, ceiling=ceiling,
                                slope_threshold=slope_threshold)
        elif st == "h6":
            fam = generate_family("sbh_plus0_r", cfg, count, seed + 7)
            rep = affine_margin(du, dM, fam, region=region_off_core,
                                ceiling=ceiling,
                                slope_threshold=slope_threshold)
        elif st in ("s8", "h7"):
            fam = generate_family("smooth_00", cfg, count, seed + 8)
            rep = affine_margin(du, dM, fam, region=region_off_core,
                                ceiling=ceiling,
                                slope_threshold=slope_threshold)
        else:  # s9 / h8
            fam = generate_family(
                "JP1_har" if version == "subharmonic" else "ASP1_har",
                cfg, count, seed + 9)
            rep = affine_margin(du, dM, fam, region=region_off_pole,
                                ceiling=ceiling,
                                slope_threshold=slope_threshold)
        reports[st] = rep
        out["statements"][st] = rep.to_dict()
    bad = [st for st, rep in reports.items() if not rep.consistent]
    out["violated_statements"] = bad
    out["verdict"] = "consistent" if not bad else "violated"
    if witnessed and bad:
        out["falsification"] = (
            "witnessed preorder with violated downstream statements: "
            + ", ".join(bad))
    return out


def embedding_check(cfg: GluingConfig, count: int = 16, seed: int = 0
                    ) -> dict:
    """Inclusion diagram and dominance/band bounds on generated members."""
    inclusions = [
        ("sbh00_plus", "sbh00_r"),
        ("sbh00_plus", "sbh0_plus"),
        ("sbh0_plus", "sbh_plus0_r"),
        ("sbh00_r", "sbh_plus0_r"),
        ("sbh_plus0_r", "sbh_plus0_circ"),
    ]
    out: dict = {"inclusions": {}, "seed": seed}
    ok_all = True
    for small, large in inclusions:
        fam = generate_family(small, cfg, max(4, count // 4), seed)
        bad = []
        for m in fam.members:
            why = verify_member(m, large, cfg)
            if why is not None:
                bad.append(f"{m.label}: {why}")
        out["inclusions"][f"{small} in {large}"] = \
            {"members": len(fam.members), "failures": bad}
        ok_all = ok_all and not bad
    # dominance of Jensen potentials by the ambient Green's function
    fam = generate_family("JP1_har", cfg, count, seed + 1)
    g_out = cfg.outer_green_field()
    pts = cfg.grid.points()[(cfg.in_domain
                             & (cfg.dist_o > 3 * cfg.h)).ravel()]
    gv = np.nan_to_num(g_out.sample(pts))
    worst_dom = -np.inf
    band = cfg.band(0, 4)
    band_pts = cfg.grid.points()[band.ravel()]
    g_band = np.nan_to_num(g_out.sample(band_pts))
    B_prime = float(g_band.max())
    worst_band = -np.inf
    for m in fam.members:
        vals = np.asarray(m(pts), float)
        worst_dom = max(worst_dom, float((vals - gv).max()))
        bvals = np.asarray(m(band_pts), float)
        worst_band = max(worst_band, float((bvals - B_prime).max()),
                         float((-bvals).max()))
    tol = 5 * cfg.h
    out["dominance"] = {"members": len(fam.members),
                        "worst_excess_over_green": worst_dom,
                        "pass": bool(worst_dom <= tol)}
    out["band_bound"] = {"B_prime": B_prime,
                         "worst_band_violation": worst_band,
                         "pass": bool(worst_band <= tol)}
    ok_all = ok_all and out["dominance"]["pass"] and out["band_bound"]["pass"]
    # lower bound for harmonic-near-core AS potentials: each member's own
    # kernel bound for pt_{mu - delta_o} must undercut its band minimum
    from .potentials import potential_lower_bound_dirac

    centers, radii = cfg.S_o.balls
    L = CompactSet.from_balls(centers, radii + 4 * cfg.r)
    fam_as = generate_family("ASP1_har", cfg, max(4, count // 4), seed + 2)
    worst_slack = np.inf
    checked = 0
    for m in fam_as.members:
        if m.measure is None:
            continue
        bound = potential_lower_bound_dirac(m.measure, cfg.o, L)
        vals = np.asarray(m(band_pts), float)
        worst_slack = min(worst_slack, float(vals.min()) - bound)
        checked += 1
    out["as_lower_bound"] = {
        "members_checked": checked,
        "worst_slack_over_bound": (None if checked == 0 else worst_slack),
        "pass": bool(checked == 0 or worst_slack >= -tol)}
    ok_all = ok_all and out["as_lower_bound"]["pass"]
    out["verdict"] = "pass" if ok_all else "fail"
    return out
