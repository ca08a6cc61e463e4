"""Potentials of measures, the measure <-> potential duality, potential
classification (Arens-Singer / Jensen), and the generalized Poisson-Jensen
identity.

Potentials are evaluated analytically from atoms wherever possible; the
grid enters only through density measures and through duality_inverse,
which reads a sampled field back into a measure plus a Dirac coefficient
at the pole.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fields import ScalarField, spherical_mean
from .geometry import CompactSet, Domain
from .kernels import ball_volume, k_q, kernel_K
from .measures import DiscreteMeasure, integrate, restrict, riesz_measure

__all__ = [
    "Potential",
    "potential_values",
    "potential_eval",
    "circle_potential",
    "potential_lower_bound",
    "potential_lower_bound_dirac",
    "duality_forward",
    "duality_inverse",
    "DualityInverseResult",
    "classify_potential",
    "ClassifyResult",
    "jensen_measure_check",
    "JensenReport",
    "poisson_jensen_check",
]


class EvaluationError(ValueError):
    pass


@dataclass
class Potential:
    """pt_mu, optionally with the pole kernel K(o, .) subtracted."""

    base: DiscreteMeasure
    pole_subtraction: Optional[tuple] = None

    @property
    def d(self) -> int:
        return self.base.d

    def __call__(self, pts):
        return potential_values(self, pts)


def circle_potential(center, radius, total, pts) -> np.ndarray:
    """Potential of the uniform measure of mass `total` on a circle (d=2):
    total * ln(radius) inside, total * ln |y - center| outside."""
    pts = np.atleast_2d(np.asarray(pts, float))
    rho = np.linalg.norm(pts - np.asarray(center), axis=-1)
    return total * np.log(np.maximum(rho, radius))


def _atoms_kernel_sum(d, points, masses, pts):
    out = np.zeros(len(pts))
    if len(points) == 0:
        return out
    r = np.linalg.norm(pts[:, None, :] - points[None, :, :], axis=-1)
    hit = r == 0.0
    with np.errstate(divide="ignore"):
        kv = np.where(hit, 0.0, np.asarray(k_q(d - 2, np.maximum(r, 1e-300))))
    out = (kv * masses[None, :]).sum(axis=1)
    if hit.any() and d >= 2:
        # a point sitting on an atom: -inf from positive mass, +inf from
        # negative mass, indeterminate if both
        pos_hit = (hit & (masses[None, :] > 0)).any(axis=1)
        neg_hit = (hit & (masses[None, :] < 0)).any(axis=1)
        if np.any(pos_hit & neg_hit):
            raise EvaluationError(
                "indeterminate potential: point carries atoms of both signs")
        out = np.where(pos_hit, -np.inf, out)
        out = np.where(neg_hit, np.inf, out)
    return out


def potential_values(P: Potential, pts) -> np.ndarray:
    """Kernel integral of the base measure at many points.

    Atom sums are exact; density cells use midpoint quadrature except that
    a cell containing the evaluation point contributes the exact average
    of the kernel over the equal-volume ball (integrable singularity).
    """
    pts = np.atleast_2d(np.asarray(pts, float))
    d = P.d
    mu = P.base
    out = _atoms_kernel_sum(d, mu.points, mu.masses, pts)
    if mu.meta.get("kind") == "uniform_circle" and d == 2 and len(mu.points):
        # analytic replacement for the tagged circle measure
        out = circle_potential(mu.meta["center"], mu.meta["radius"],
                               mu.meta["total"], pts)
    if mu.density is not None:
        cm = mu.cell_masses
        sel = cm != 0.0
        if sel.any():
            grid = mu.density.grid
            cpts = grid.points().reshape(*grid.shape, d)[sel]
            masses = cm[sel]
            r = np.linalg.norm(pts[:, None, :] - cpts[None, :, :], axis=-1)
            near = r < grid.h / 2
            with np.errstate(divide="ignore"):
                kv = np.asarray(k_q(d - 2, np.maximum(r, 1e-300)))
            # ball of the same volume as one cell
            rho_eq = grid.h * (1.0 / ball_volume(d)) ** (1.0 / d)
            if d == 2:
                k_near = np.log(rho_eq) - 0.5
            elif d == 3:
                k_near = -1.5 / rho_eq
            else:
                k_near = rho_eq / 2
            kv = np.where(near, k_near, kv)
            out = out + kv @ masses
    if P.pole_subtraction is not None:
        o = np.asarray(P.pole_subtraction, float)
        out = out - np.asarray(
            kernel_K(d, pts, np.broadcast_to(o, pts.shape)))
    return out


def potential_eval(P: Potential, y) -> float:
    y = np.atleast_1d(np.asarray(y, float))
    return float(potential_values(P, y[None, :])[0])


def _sup_norm(L: CompactSet) -> float:
    if L.balls is not None:
        centers, radii = L.balls
        return float((np.linalg.norm(centers, axis=-1) + radii).max())
    return float(np.linalg.norm(L.mask_points, axis=-1).max())


def potential_lower_bound(mu: DiscreteMeasure, L: CompactSet) -> float:
    """Certified lower bound mu(R^d) k_{d-2}(dist(L, supp mu)) for pt_mu
    on L; -inf when the supports touch (d >= 2)."""
    supp = mu.support_points(tiny=1e-15)
    if len(supp) == 0:
        return 0.0
    dist = float(L.dist_to(supp).min())
    total = mu.total_mass()
    if dist <= 0.0:
        if mu.d == 1:
            return 0.0
        return -np.inf
    return total * float(k_q(mu.d - 2, dist))


def potential_lower_bound_dirac(mu: DiscreteMeasure, o, L: CompactSet) -> float:
    """Lower bound for pt_{mu - delta_o} on L: the plain bound minus
    k_{d-2}(sup_L |x| + |o|)."""
    o = np.atleast_1d(np.asarray(o, float))
    base = potential_lower_bound(mu, L)
    reach = _sup_norm(L) + float(np.linalg.norm(o))
    if reach <= 0:
        raise ValueError("degenerate geometry: sup|x| + |o| must be positive")
    return base - float(k_q(mu.d - 2, reach))


def duality_forward(mu: DiscreteMeasure, o) -> Potential:
    """The affine bijection mu -> pt_{mu - delta_o}."""
    o = tuple(float(c) for c in np.atleast_1d(o))
    return Potential(mu, pole_subtraction=o)


def _pole_ratio_fit(V: ScalarField, o, radii, n_sphere: int = 256):
    """Fit circle means of V against the pole kernel: V(rho-mean) =
    a * (-K mean) + b. Returns (a, b, max residual of the fit)."""
    o = np.atleast_1d(np.asarray(o, float))
    d = V.d
    means = []
    mk = []
    for rho in radii:
        means.append(spherical_mean(V, o, rho, n=n_sphere))
        if d == 2:
            mk.append(np.log(1.0 / rho))
        elif d == 3:
            mk.append(1.0 / rho)
        else:
            mk.append(-rho)
    A = np.stack([np.asarray(mk), np.ones(len(radii))], axis=1)
    y = np.asarray(means)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.abs(A @ coef - y).max())
    return float(coef[0]), float(coef[1]), resid


@dataclass
class DualityInverseResult:
    measure: DiscreteMeasure
    dirac_coefficient: float
    pole_coefficient: float
    fit_residual: float
    flags: dict

    def to_dict(self) -> dict:
        return {"total_mass": self.measure.total_mass(),
                "dirac_coefficient": self.dirac_coefficient,
                "pole_coefficient": self.pole_coefficient,
                "fit_residual": self.fit_residual,
                "flags": self.flags}


def duality_inverse(V: ScalarField, o, pole_mask_radius: Optional[float] = None,
                    fit_radius: Optional[float] = None,
                    spread_tol: float = 0.2) -> DualityInverseResult:
    """Invert the duality: Riesz measure of V away from o plus
    (1 - pole coefficient) * delta_o.

    The pole coefficient is the extrapolated limit of circle means of V
    divided by the mean pole kernel, fitted linearly over the radii
    (r, r/2, r/4). A fit spread above spread_tol raises (the limsup is not
    numerically resolvable for such fields).
    """
    o = np.atleast_1d(np.asarray(o, float))
    h = V.grid.h
    if pole_mask_radius is None:
        pole_mask_radius = 3.5 * h
    if fit_radius is None:
        box = V.grid.box
        edge = min(min(o[k] - box.lo[k], box.hi[k] - o[k])
                   for k in range(V.d))
        fit_radius = max(0.05 * edge, 16 * h)
        fit_radius = min(fit_radius, 0.8 * edge)
    radii = [fit_radius, fit_radius / 2, fit_radius / 4]
    if radii[-1] < 2.5 * h:
        raise ValueError("grid too coarse for the pole-ratio extrapolation")
    a, b, resid = _pole_ratio_fit(V, o, radii)
    scale = max(1.0, abs(a))
    if resid > spread_tol * scale:
        raise EvaluationError(
            f"pole ratio sequence did not converge (spread {resid:.3g})")
    dist = np.linalg.norm(V.grid.points() - o, axis=-1).reshape(V.grid.shape)
    masked = V.with_mask(V.mask & (dist > pole_mask_radius))
    mu, flags = riesz_measure(masked)
    return DualityInverseResult(mu, 1.0 - a, a, resid, flags)


@dataclass
class ClassifyResult:
    label: str
    pole_coefficient: float
    fit_residual: float
    vanish_sup: float
    min_value: float

    def to_dict(self) -> dict:
        return {"label": self.label,
                "pole_coefficient": self.pole_coefficient,
                "fit_residual": self.fit_residual,
                "vanish_sup": self.vanish_sup,
                "min_value": self.min_value}


def classify_potential(V: ScalarField, domain: Domain, o,
                       band_width: Optional[float] = None,
                       vanish_tol: float = 1e-6,
                       pole_tol: float = 0.05,
                       positive_tol: float = 1e-7) -> ClassifyResult:
    """Classify a sampled field as ASP / ASP1 / JP / JP1 / none.

    Checks (a) vanishing on the outer band inside the domain boundary and
    outside the domain (compact support within the ambient domain), (b)
    the pole bound via the extrapolated pole-ratio, (c) positivity for the
    Jensen classes.
    """
    o = np.atleast_1d(np.asarray(o, float))
    h = V.grid.h
    if band_width is None:
        band_width = 3 * h
    pts = V.grid.points()
    sd = np.atleast_1d(domain.signed_distance(pts)).reshape(V.grid.shape)
    outer = (sd < band_width) & V.mask
    vanish_sup = float(np.abs(V.values[outer]).max()) if outer.any() else 0.0
    dist_o = np.linalg.norm(pts - o, axis=-1).reshape(V.grid.shape)
    body = V.mask & (dist_o > 2 * h) & np.isfinite(V.values)
    min_value = float(V.values[body].min()) if body.any() else 0.0
    try:
        edge = domain.signed_distance(o)
        fit_radius = max(min(0.25 * edge, 0.05 * domain.diameter), 12 * h)
        a, _, resid = _pole_ratio_fit(V, o, [fit_radius, fit_radius / 2,
                                             fit_radius / 4])
    except ValueError:
        a, resid = np.nan, np.inf
    vanish_ok = vanish_sup <= vanish_tol
    pole_ok = np.isfinite(a) and a <= 1.0 + pole_tol
    two_sided = np.isfinite(a) and abs(a - 1.0) <= pole_tol
    positive = min_value >= -positive_tol
    if not (vanish_ok and pole_ok):
        label = "none"
    elif positive and two_sided:
        label = "JP1"
    elif positive:
        label = "JP"
    elif two_sided:
        label = "ASP1"
    else:
        label = "ASP"
    return ClassifyResult(label, float(a), float(resid), vanish_sup, min_value)


@dataclass
class JensenReport:
    n_probes: int
    failures: int
    worst_margin: float
    as_worst: float
    verdict: str
    seed: Optional[int]
    margins: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict:
        return {"n_probes": self.n_probes, "failures": self.failures,
                "worst_margin": self.worst_margin, "as_worst": self.as_worst,
                "verdict": self.verdict, "seed": self.seed,
                "margins": list(self.margins)}


def _sbh_probes(domain: Domain, o, count, rng):
    """Randomized subharmonic probe functions on the domain."""
    probes = []
    box = domain.bounding_box
    lo, hi = np.asarray(box.lo), np.asarray(box.hi)
    d = domain.d
    for _ in range(count):
        kind = rng.integers(0, 3)
        if kind == 0 and d == 2:
            deg = int(rng.integers(1, 4))
            zeros = rng.uniform(lo, hi, size=(deg, 2))
            zs = zeros[:, 0] + 1j * zeros[:, 1]

            def v(pts, zs=zs):
                z = pts[..., 0] + 1j * pts[..., 1]
                with np.errstate(divide="ignore"):
                    return np.sum(np.log(np.abs(z[..., None] - zs)), axis=-1)

            probes.append(v)
        elif kind == 1:
            m = int(rng.integers(1, 4))
            ys = rng.uniform(lo, hi, size=(m, d))
            w = rng.uniform(0.2, 1.0, size=m)

            def v(pts, ys=ys, w=w):
                return _atoms_kernel_sum(d, ys, w, np.atleast_2d(pts))

            probes.append(v)
        else:
            m = int(rng.integers(2, 5))
            a = rng.normal(size=(m, d))
            b = rng.normal(size=m)

            def v(pts, a=a, b=b):
                return (np.atleast_2d(pts) @ a.T + b).max(axis=1)

            probes.append(v)
    return probes


def _harmonic_probes(d, count, rng, scale=1.0):
    probes = []
    if d != 2:
        for _ in range(count):
            a = rng.normal(size=d)
            b = rng.normal()
            probes.append(lambda pts, a=a, b=b: np.atleast_2d(pts) @ a + b)
        return probes
    for _ in range(count):
        deg = int(rng.integers(1, 5))
        coef = rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1)
        take_re = bool(rng.integers(0, 2))

        def v(pts, coef=coef, take_re=take_re):
            z = (pts[..., 0] + 1j * pts[..., 1]) / scale
            val = np.polyval(coef, z)
            return np.real(val) if take_re else np.imag(val)

        probes.append(v)
    return probes


def jensen_measure_check(mu: DiscreteMeasure, o, domain: Domain,
                         probe_count: int = 64, seed: int = 0,
                         tol: Optional[float] = None) -> JensenReport:
    """Randomized semi-decision of the Jensen property v(o) <= int v dmu.

    Also runs the Arens-Singer equality check against harmonic probes.
    A pass is evidence over the sampled family; a failure is a certificate
    (the witness probe violates the defining inequality).
    """
    o = np.atleast_1d(np.asarray(o, float))
    rng = np.random.default_rng(seed)
    if tol is None:
        tol = 1e-7
        if mu.density is not None:
            tol = max(tol, 10 * mu.density.grid.h ** 2
                      * (1 + mu.total_variation()))
    probes = _sbh_probes(domain, o, probe_count, rng)
    failures = 0
    worst = np.inf
    margins = []
    for v in probes:
        lhs = float(np.atleast_1d(v(o[None, :]))[0])
        rhs = integrate(v, mu)
        margin = rhs - lhs
        margins.append(float(margin))
        worst = min(worst, margin)
        if margin < -tol:
            failures += 1
    as_worst = 0.0
    for h in _harmonic_probes(mu.d, max(8, probe_count // 4), rng,
                              scale=max(1.0, domain.diameter)):
        gap = abs(integrate(h, mu) - float(np.atleast_1d(h(o[None, :]))[0]))
        as_worst = max(as_worst, gap)
    verdict = "jensen" if failures == 0 else "violated"
    return JensenReport(len(probes), failures,
                        float(worst if np.isfinite(worst) else 0.0),
                        float(as_worst), verdict, seed, margins)


def poisson_jensen_check(u, Delta_u: DiscreteMeasure, mu: DiscreteMeasure,
                         o) -> dict:
    """Residual of the generalized Poisson-Jensen identity
    u(o) = int u dmu - int pt_{mu - delta_o} dDelta_u.

    u may be a callable or a ScalarField; u(o) = -inf is rejected.
    Returns the three terms and the absolute residual.
    """
    o = np.atleast_1d(np.asarray(o, float))
    if isinstance(u, ScalarField):
        u_o = float(u.sample(o))
        u_fn = u
    else:
        u_o = float(np.atleast_1d(u(o[None, :]))[0])
        u_fn = u
    if not np.isfinite(u_o):
        raise ValueError("u(o) must be finite for the Poisson-Jensen identity")
    term_mu = integrate(u_fn, mu)
    pot = duality_forward(mu, o)

    def not_o(pts):
        return np.linalg.norm(np.atleast_2d(pts) - o, axis=-1) > 1e-14

    term_pot = integrate(lambda pts: potential_values(pot, pts),
                         restrict(Delta_u, not_o))
    residual = abs(u_o - term_mu + term_pot)
    return {"u_at_o": u_o, "integral_u_dmu": term_mu,
            "integral_potential_dDelta": term_pot, "residual": residual}
