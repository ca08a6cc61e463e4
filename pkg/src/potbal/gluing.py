"""Quantitative gluing of subharmonic fields with Green's functions.

The pipeline follows the shell construction: harmonic replacement of the
input on the shell between the r- and 4r-parallel sets of the core
compact set, band constants, then the two-sided glue against the Green's
function of a regular enclosing domain pinched between the 2r- and
3r-parallel sets. Every construction emits a machine-checkable
certificate, one clause per claimed inequality, with absolute tolerance
5h plus the quadrature error scale of the constants involved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .fields import (Grid, GluingPreconditionError, ScalarField,
                     harmonic_replacement, spherical_means,
                     subharmonicity_test)
from .geometry import (CompactSet, Domain, connected_components,
                       regular_enclosing_domain, separation)
from .green import GreenSpec, green_values
from .potentials import _pole_ratio_fit

__all__ = [
    "GluingConfig",
    "GlueResult",
    "glue_quantitative",
    "shell_constants",
    "glue_with_green",
    "glue_test_function",
    "potential_approx_sequence",
    "ConstructionError",
]


class ConstructionError(RuntimeError):
    """A certificate clause failed beyond tolerance."""

    def __init__(self, clause: str, detail: str):
        self.clause = clause
        super().__init__(f"clause {clause}: {detail}")


@dataclass
class GluingConfig:
    """Core set, pole, band radius and bounds for the gluing pipeline.

    Requires o interior to S_o, S_o compactly inside the domain with
    0 < 4r < dist(S_o, boundary), and b_minus < 0 < b_plus.
    """

    S_o: CompactSet
    o: tuple
    r: float
    b_minus: float
    b_plus: float
    domain: Domain
    h: float = 1.0 / 128.0
    box_margin: Optional[float] = None

    def __post_init__(self):
        self.o = tuple(float(c) for c in np.atleast_1d(self.o))
        o = np.asarray(self.o)
        if self.S_o.balls is None:
            raise ValueError("gluing needs a union-of-balls compact set")
        centers, radii = self.S_o.balls
        depth = float((radii - np.linalg.norm(centers - o, axis=-1)).max())
        if depth <= 0:
            raise ValueError("origin must be interior to the compact set")
        self._o_depth = depth
        sep = separation(self.S_o, self.domain)
        if not 0 < 4 * self.r < sep:
            raise ValueError(
                f"need 0 < 4r < dist(S_o, boundary) = {sep:.4g}, got r={self.r}")
        if not self.b_minus < 0 < self.b_plus:
            raise ValueError("need b_minus < 0 < b_plus")
        if self.box_margin is None:
            self.box_margin = max(4 * self.h, 0.02 * self.domain.diameter)
        self.grid = Grid.from_box(
            self.domain.bounding_box.expand(self.box_margin), self.h)
        pts = self.grid.points()
        self.dist_S = self.S_o.dist_to(pts).reshape(self.grid.shape)
        self.in_domain = np.atleast_1d(
            self.domain.contains(pts)).reshape(self.grid.shape)
        self.dist_o = np.linalg.norm(pts - o, axis=-1).reshape(self.grid.shape)
        self._cache: dict = {}

    def band(self, a: float, b: float) -> np.ndarray:
        """Cells with a*r <= dist(x, S_o) < b*r (strict > 0 when a == 0)."""
        lo = self.dist_S > 0 if a == 0 else self.dist_S >= a * self.r
        return lo & (self.dist_S < b * self.r)

    @property
    def core_mask(self) -> np.ndarray:
        return self.dist_S <= 0

    def enclosing_domain(self) -> Domain:
        if "D_r" not in self._cache:
            self._cache["D_r"] = regular_enclosing_domain(
                self.S_o, 2 * self.r, 3 * self.r)
        return self._cache["D_r"]

    def _green_spec(self, dom: Domain) -> GreenSpec:
        method = "closed_form" if dom.kind == "ball" else "grid"
        return GreenSpec(dom, self.o, method,
                         grid_h=min(self.h, dom.diameter / 128))

    def green_floor_inner(self) -> float:
        """M_g = inf of g_{D_r} over the boundary of the 2r-parallel set."""
        if "M_g" not in self._cache:
            from .green import green_floor

            centers, radii = self.S_o.balls
            shell2 = CompactSet.from_balls(centers, radii + 2 * self.r)
            spec = self._green_spec(self.enclosing_domain())
            self._cache["M_g"] = green_floor(spec, shell2)
        return self._cache["M_g"]

    def inner_green_field(self) -> ScalarField:
        if "g_inner" not in self._cache:
            spec = self._green_spec(self.enclosing_domain())
            vals = green_values(spec, self.grid.points())
            vals = np.where(np.isfinite(vals), vals, 0.0)
            self._cache["g_inner"] = ScalarField(
                self.grid, vals.reshape(self.grid.shape))
        return self._cache["g_inner"]

    def outer_green_field(self) -> ScalarField:
        if "g_outer" not in self._cache:
            spec = self._green_spec(self.domain)
            vals = green_values(spec, self.grid.points())
            vals = np.where(np.isfinite(vals), vals, 0.0)
            self._cache["g_outer"] = ScalarField(
                self.grid, vals.reshape(self.grid.shape))
        return self._cache["g_outer"]

    def test_constant(self) -> float:
        """B = 2 (b_plus - b_minus) / M_g; depends only on (o, S_o, r, b)."""
        return 2.0 * (self.b_plus - self.b_minus) / self.green_floor_inner()


@dataclass
class GlueResult:
    field: ScalarField
    constants: dict
    certificate: dict

    @property
    def ok(self) -> bool:
        return all(c.get("status") == "pass" for c in self.certificate.values())

    def to_dict(self) -> dict:
        return {"constants": self.constants, "certificate": self.certificate}


def _clause(cert, name, ok, margin, where=None, note=None):
    cert[name] = {"status": "pass" if ok else "fail",
                  "worst_margin": float(margin)}
    if where is not None:
        cert[name]["location"] = [int(v) for v in where]
    if note:
        cert[name]["note"] = note


def glue_quantitative(v: ScalarField, g: ScalarField, m_v, M_v, m_g, M_g,
                      O_mask, O0_mask, tol: Optional[float] = None,
                      check: bool = True) -> ScalarField:
    """Two-sided glue of v (on O) against a*g + c (on O0).

    Verifies the boundary hypotheses on the discrete interfaces, builds
    v0 = (M_v^+ + m_v^-)/(M_g - m_g) * (2g - M_g - m_g) and returns v0 on
    O0 \\ O, max(v0, v) on the overlap and v on O \\ O0.
    """
    if v.grid != g.grid:
        raise ValueError("fields must share a grid")
    O_mask = np.asarray(O_mask, bool)
    O0_mask = np.asarray(O0_mask, bool)
    h = v.grid.h
    if tol is None:
        tol = 5 * h
    if not (m_g < M_g):
        raise ValueError("need m_g < M_g")
    coeff = (max(M_v, 0.0) + max(-m_v, 0.0)) / (M_g - m_g)
    if check:
        worst = -np.inf
        worst_cell = None
        for ax in range(v.d):
            for shift in (1, -1):
                nb0 = np.roll(O0_mask, shift, axis=ax)
                sl = [slice(None)] * v.d
                sl[ax] = 0 if shift == 1 else -1
                nb0[tuple(sl)] = False
                # cells of O adjacent to O0 (discrete O cap dO0)
                ring = O_mask & ~O0_mask & nb0
                if ring.any():
                    gap = (m_v - tol) - v.values[ring]
                    if gap.size and gap.max() > 0:
                        cells = np.argwhere(ring)
                        worst_cell = tuple(cells[int(np.argmax(gap))])
                        raise GluingPreconditionError(
                            f"inf v over O cap dO0 undercuts m_v at {worst_cell}")
                    g_in = np.roll(np.where(O0_mask, g.values, -np.inf),
                                   shift, axis=ax)[ring]
                    if g_in.size and (g_in - (m_g + tol)).max() > 0:
                        raise GluingPreconditionError(
                            "g exceeds m_g on O cap dO0")
                nbO = np.roll(O_mask, shift, axis=ax)
                nbO[tuple(sl)] = False
                ring2 = O0_mask & ~O_mask & nbO
                if ring2.any():
                    v_in = np.roll(np.where(O_mask, v.values, -np.inf),
                                   shift, axis=ax)[ring2]
                    if v_in.size and (v_in - (M_v + tol)).max() > 0:
                        cells = np.argwhere(ring2)
                        worst_cell = tuple(cells[int(np.argmax(v_in))])
                        raise GluingPreconditionError(
                            f"limsup v over O0 cap dO exceeds M_v at {worst_cell}")
                    if g.values[ring2].size and \
                            ((M_g - tol) - g.values[ring2]).max() > 0:
                        raise GluingPreconditionError(
                            "g undercuts M_g on O0 cap dO")
    v0 = coeff * (2.0 * g.values - M_g - m_g)
    out = np.where(O_mask, v.values, 0.0)
    only0 = O0_mask & ~O_mask
    out[only0] = v0[only0]
    both = O0_mask & O_mask
    out[both] = np.maximum(v0[both], v.values[both])
    return ScalarField(v.grid, out, (O_mask | O0_mask) & v.mask)


def shell_constants(v: ScalarField, cfg: GluingConfig):
    """(M_v, m_v, M_g): band sup of v, band inf of its r-sphere means over
    the 2r..3r ring, and the Green floor of the enclosing domain."""
    band = cfg.band(0, 4) & v.finite_mask()
    if not band.any():
        raise ValueError("the 4r band around S_o leaves the grid")
    M_v = float(v.values[band].max())
    ring = cfg.band(2, 3)
    centers = cfg.grid.points().reshape(*cfg.grid.shape, cfg.grid.d)[ring]
    if len(centers) == 0:
        raise ValueError("the 2r..3r ring around S_o leaves the grid")
    means = spherical_means(v, centers, cfg.r)
    means = means[~np.isnan(means)]
    if len(means) == 0:
        raise ValueError("r-spheres around the ring leave the active mask")
    m_v = float(means.min())
    return M_v, m_v, cfg.green_floor_inner()


def glue_with_green(v: ScalarField, cfg: GluingConfig,
                    constants: Optional[tuple] = None,
                    tol: Optional[float] = None) -> GlueResult:
    """Shell construction: harmonic replacement, band constants, Green glue.

    Returns the glued field on the ambient region minus the pole together
    with the five-clause certificate (harmonic-positive core, identity
    region, two-sided band bound, core bound, pole ratio) plus the
    sub-mean check of the output.
    """
    if v.grid != cfg.grid:
        raise ValueError("field must live on the config grid")
    h = cfg.h
    shell = cfg.band(1, 4)
    v_swept = harmonic_replacement(v, shell)
    if constants is None:
        M_v, m_v, M_g = shell_constants(v, cfg)
    else:
        M_v, m_v, M_g = constants
    coeff = (max(M_v, 0.0) + max(-m_v, 0.0)) / M_g
    g_in = cfg.inner_green_field()
    O_mask = (cfg.dist_S > 2 * cfg.r) & v.mask
    O0_mask = cfg.dist_S < 3 * cfg.r
    glued = glue_quantitative(v_swept, g_in, m_v, M_v, 0.0, M_g,
                              O_mask, O0_mask, check=False)
    if tol is None:
        tol = 5 * h * (1.0 + coeff)
    cert: dict = {}
    pole_excl = max(6 * h, 0.15 * (cfg._o_depth + 2 * cfg.r))
    off_pole = cfg.dist_o > pole_excl

    # exact identity outside the 4r band
    outside = (cfg.dist_S >= 4 * cfg.r) & v.finite_mask()
    gap_eq = np.abs(glued.values[outside] - v.values[outside])
    _clause(cert, "identity_region", bool((gap_eq == 0.0).all()),
            float(gap_eq.max() if gap_eq.size else 0.0))

    # harmonic and positive on the core minus the pole
    core = cfg.core_mask & off_pole
    if coeff == 0.0:
        _clause(cert, "core_harmonic", True, 0.0, note="degenerate zero coefficient")
    else:
        vals = glued.values[core]
        pos_ok = bool((vals > -tol).all()) if vals.size else True
        centers = cfg.grid.points().reshape(*cfg.grid.shape, cfg.grid.d)[core]
        r_test = 3 * h
        means = spherical_means(glued, centers, r_test, n=64)
        ok_m = ~np.isnan(means)
        harm_gap = np.abs(means[ok_m] - vals[ok_m])
        tol_h = 20.0 * h * h * coeff / (pole_excl ** 2) + 1e-9
        harm_ok = bool((harm_gap <= tol_h).all()) if harm_gap.size else True
        _clause(cert, "core_harmonic", pos_ok and harm_ok,
                float(max(harm_gap.max() if harm_gap.size else 0.0,
                          -(vals.min() if vals.size else 0.0))))

    # v <= V <= M_v^+ + 2 coeff g on the band
    band = cfg.band(0, 4) & v.finite_mask()
    lower = (v.values - glued.values)[band]
    upper = (glued.values - (max(M_v, 0.0) + 2 * coeff * g_in.values))[band]
    worst_band = float(max(lower.max() if lower.size else 0.0,
                           upper.max() if upper.size else 0.0))
    _clause(cert, "band_bound", worst_band <= tol, worst_band)

    # 0 < V <= 2 coeff g on the core minus the pole
    if coeff == 0.0:
        _clause(cert, "core_bound", True, 0.0, note="degenerate zero coefficient")
    else:
        vals = glued.values[core]
        up = vals - 2 * coeff * g_in.values[core]
        worst0 = float(max(up.max() if up.size else 0.0,
                           -(vals.min() if vals.size else 0.0)))
        _clause(cert, "core_bound", bool((vals > -tol).all()
                                   and (up <= tol).all()), worst0)

    # pole ratio -> 2 coeff
    if coeff == 0.0:
        _clause(cert, "pole_ratio", True, 0.0, note="degenerate zero coefficient")
    else:
        fit_r = max(12 * h, 0.5 * pole_excl)
        fit_r = min(fit_r, cfg._o_depth + 1.5 * cfg.r)
        a_fit, _, resid = _pole_ratio_fit(glued, np.asarray(cfg.o),
                                          [fit_r, fit_r / 2, fit_r / 4])
        gap = abs(a_fit - 2 * coeff)
        _clause(cert, "pole_ratio", gap <= 0.05 * max(1.0, 2 * coeff) + resid,
                float(gap))

    # global sub-mean check away from the pole
    sub = subharmonicity_test(glued, [2 * h, 4 * h], n_sphere=32,
                              cells_mask=off_pole & cfg.in_domain)
    cert["subharmonic"] = {"status": "pass" if sub.ok else "fail",
                           "worst_margin": sub.worst_margin,
                           "violations": sub.violations,
                           "tested": sub.tested}
    constants_out = {"M_v": M_v, "m_v": m_v, "M_g": M_g, "coeff": coeff,
                     "pole_exclusion": pole_excl, "tol": tol}
    return GlueResult(glued, constants_out, cert)


def _verify_test_class(v_vals, cfg: GluingConfig, circ: bool,
                       tol: float) -> Optional[str]:
    """Membership checks for sbh_{+0}(D - S_o; [circ] r, b-< b+)."""
    region = cfg.in_domain & (cfg.dist_S > 0)
    if (v_vals[region] > cfg.b_plus + tol).any():
        return "exceeds b_plus"
    # positive near the boundary: outer band of width 3h inside the domain
    pts_sd = cfg.domain.signed_distance(cfg.grid.points())
    pts_sd = np.atleast_1d(pts_sd).reshape(cfg.grid.shape)
    near = (pts_sd > 0) & (pts_sd < 3 * cfg.h)
    if (v_vals[near] < -tol).any():
        return "negative near the boundary"
    outside = pts_sd <= 0
    if (np.abs(v_vals[outside]) > tol).any():
        return "does not vanish outside the domain"
    f = ScalarField(cfg.grid, v_vals)
    if circ:
        ring = cfg.band(2, 3)
        centers = cfg.grid.points().reshape(*cfg.grid.shape, cfg.grid.d)[ring]
        means = spherical_means(f, centers, cfg.r)
        means = means[~np.isnan(means)]
        if means.size and means.min() < cfg.b_minus - tol:
            return "r-sphere means undercut b_minus on the 2r..3r ring"
    else:
        band = cfg.band(0, 4)
        if (v_vals[band] < cfg.b_minus - tol).any():
            return "undercuts b_minus on the 4r band"
    return None


def glue_test_function(v: Callable, cfg: GluingConfig, circ: bool = True,
                       verify: bool = True) -> GlueResult:
    """Glue a test function from sbh_{+0}(D - S_o; [o]r, b- < b+).

    The function is extended by zero outside the domain, verified against
    its class, and glued with the fixed constants M_v = b_plus,
    m_v = b_minus, M_g = const(o, S_o, r). The certificate uses the
    ambient Green's function (domination replaces the enclosing domain's)
    and additionally asserts the zero extension.
    """
    pts = cfg.grid.points()
    vals = np.asarray(v(pts), float).reshape(cfg.grid.shape)
    vals = np.where(cfg.in_domain, vals, 0.0)
    tol = 5 * cfg.h
    if verify:
        why = _verify_test_class(vals, cfg, circ, tol)
        if why is not None:
            raise GluingPreconditionError(f"test-class membership: {why}")
    f = ScalarField(cfg.grid, vals)
    B = cfg.test_constant()
    res = glue_with_green(f, cfg,
                          constants=(cfg.b_plus, cfg.b_minus,
                                     cfg.green_floor_inner()))
    g_out = cfg.outer_green_field()
    glued = res.field
    cert = res.certificate
    # band/core bounds against the ambient Green's function (domination)
    band = cfg.band(0, 4)
    up = (glued.values - (cfg.b_plus + B * g_out.values))[band]
    _clause(cert, "ambient_band_bound", bool((up <= tol).all()),
            float(up.max() if up.size else 0.0))
    core = cfg.core_mask & (cfg.dist_o > res.constants["pole_exclusion"])
    up0 = (glued.values - B * g_out.values)[core]
    _clause(cert, "ambient_core_bound", bool((up0 <= tol).all()),
            float(up0.max() if up0.size else 0.0))
    outside = ~cfg.in_domain
    off = np.abs(glued.values[outside])
    _clause(cert, "vanishes_outside", bool((off <= tol).all()),
            float(off.max() if off.size else 0.0))
    res.constants["B"] = B
    return res


def potential_approx_sequence(v: Callable, cfg: GluingConfig, n: int,
                              positive: bool = False, circ: bool = True,
                              verify: bool = True) -> dict:
    """Increasing potentials V_1 .. V_n approximating the glued field.

    Step k zeroes the components of {V < 1/k} that meet the complement of
    the domain (4-connected on the grid), subtracts 1/k elsewhere, takes
    the positive part when asked for Jensen potentials, and divides by B.
    """
    res = glue_test_function(v, cfg, circ=circ, verify=verify)
    V = res.field
    B = res.constants["B"]
    fields: List[ScalarField] = []
    prev = None
    monotone_worst = 0.0
    for k in range(1, n + 1):
        level = V.values < 1.0 / k
        bad = np.zeros_like(level)
        for comp in connected_components(level):
            if (comp & ~cfg.in_domain).any() or _touches_edge(comp):
                bad |= comp
        vk = np.where(bad, 0.0, V.values - 1.0 / k)
        if positive:
            vk = np.maximum(vk, 0.0)
        fields.append(ScalarField(cfg.grid, vk / B, V.mask.copy()))
        if prev is not None:
            monotone_worst = max(monotone_worst, float((prev - vk).max()))
        prev = vk
    cert = dict(res.certificate)
    cert["monotone"] = {"status": "pass" if monotone_worst <= 0 else "fail",
                       "worst_margin": monotone_worst}
    band_pole = (cfg.dist_S < 4 * cfg.r) & \
        (cfg.dist_o > res.constants["pole_exclusion"])
    g_out = cfg.outer_green_field()
    worst_bound = -np.inf
    for fld in fields:
        gap = (B * fld.values - (cfg.b_plus + B * g_out.values))[band_pole]
        if gap.size:
            worst_bound = max(worst_bound, float(gap.max()))
    cert["sequence_band_bound"] = {"status": "pass" if worst_bound <= 5 * cfg.h * (1 + B)
                     else "fail", "worst_margin": worst_bound}
    return {"fields": fields, "B": B, "certificate": cert,
            "glued": res.field, "constants": res.constants}


def _touches_edge(mask: np.ndarray) -> bool:
    for ax in range(mask.ndim):
        sl = [slice(None)] * mask.ndim
        sl[ax] = 0
        if mask[tuple(sl)].any():
            return True
        sl[ax] = -1
        if mask[tuple(sl)].any():
            return True
    return False
