"""Discrete measures and charges: atoms, cell densities, Riesz extraction.

A DiscreteMeasure holds weighted atoms (signed masses form the Jordan
difference of the positive and negative parts) and an optional per-cell
density field whose cell masses are density * h^d. Integration follows the
upper-integral convention: the positive part is summed first and a +inf
short-circuits the rest.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .fields import ScalarField, discrete_laplacian
from .kernels import check_dimension, riesz_constant

__all__ = [
    "DiscreteMeasure",
    "integrate",
    "riesz_measure",
    "counting_measure",
    "restrict",
]


class DiscreteMeasure:
    """Finite atoms plus optional density grid; signed masses allowed."""

    def __init__(self, d: int, points=None, masses=None,
                 density: Optional[ScalarField] = None,
                 meta: Optional[dict] = None, merge_radius: float = 0.0):
        self.d = check_dimension(d)
        if points is None:
            points = np.empty((0, self.d))
            masses = np.empty(0)
        points = np.atleast_2d(np.asarray(points, float))
        masses = np.atleast_1d(np.asarray(masses, float))
        if points.shape[0] != masses.shape[0] or points.shape[1] != self.d:
            raise ValueError("atom points/masses shape mismatch")
        if merge_radius > 0 and len(points) > 1:
            points, masses = _merge_atoms(points, masses, merge_radius)
        self.points = points
        self.masses = masses
        self.density = density
        self.meta = meta or {}
        if density is not None and density.d != self.d:
            raise ValueError("density dimension mismatch")
        if not np.all(np.isfinite(masses)):
            raise ValueError("atom masses must be finite")

    # -- constructors ------------------------------------------------------

    @classmethod
    def dirac(cls, point, mass: float = 1.0) -> "DiscreteMeasure":
        p = np.atleast_1d(np.asarray(point, float))
        return cls(len(p), p[None, :], [float(mass)])

    @classmethod
    def from_density(cls, density: ScalarField) -> "DiscreteMeasure":
        return cls(density.d, density=density)

    @classmethod
    def uniform_circle(cls, center, radius, n: int = 512,
                       total: float = 1.0) -> "DiscreteMeasure":
        """n equal atoms on a circle; tagged so potentials can go analytic."""
        center = np.asarray(center, float)
        ang = 2 * np.pi * (np.arange(n) + 0.5) / n
        pts = center + radius * np.stack([np.cos(ang), np.sin(ang)], -1)
        return cls(2, pts, np.full(n, total / n),
                   meta={"kind": "uniform_circle", "center": tuple(center),
                         "radius": float(radius), "total": float(total)})

    # -- structure ---------------------------------------------------------

    @property
    def cell_masses(self) -> np.ndarray:
        if self.density is None:
            return np.empty(0)
        dm = self.density
        w = np.where(dm.mask & np.isfinite(dm.values), dm.values, 0.0)
        return w * dm.grid.cell_volume()

    def support_points(self, tiny: float = 0.0) -> np.ndarray:
        """Atom sites plus density cells with |mass| > tiny."""
        out = [self.points]
        if self.density is not None:
            cm = self.cell_masses
            sel = np.abs(cm) > tiny
            if sel.any():
                pts = self.density.grid.points().reshape(
                    *self.density.grid.shape, self.d)
                out.append(pts[sel])
        return np.concatenate(out, axis=0) if out else np.empty((0, self.d))

    def total_mass(self) -> float:
        t = float(self.masses.sum()) if len(self.masses) else 0.0
        if self.density is not None:
            t += float(self.cell_masses.sum())
        return t

    def total_variation(self) -> float:
        t = float(np.abs(self.masses).sum()) if len(self.masses) else 0.0
        if self.density is not None:
            t += float(np.abs(self.cell_masses).sum())
        return t

    def jordan(self):
        """Positive and negative parts (mu+, mu-), both positive measures."""
        pos = self.masses > 0
        plus = DiscreteMeasure(self.d, self.points[pos], self.masses[pos])
        minus = DiscreteMeasure(self.d, self.points[~pos], -self.masses[~pos])
        if self.density is not None:
            vp = np.maximum(self.density.values, 0.0)
            vm = np.maximum(-self.density.values, 0.0)
            plus.density = self.density.with_values(vp)
            minus.density = self.density.with_values(vm)
        return plus, minus

    def is_positive(self, tol: float = 0.0) -> bool:
        ok = np.all(self.masses >= -tol) if len(self.masses) else True
        if self.density is not None:
            ok = ok and bool(np.all(self.cell_masses >= -tol))
        return bool(ok)

    def scaled(self, a: float) -> "DiscreteMeasure":
        dens = None
        if self.density is not None:
            dens = self.density.with_values(self.density.values * a)
        return DiscreteMeasure(self.d, self.points.copy(), self.masses * a,
                               density=dens, meta=dict(self.meta))

    def __add__(self, other: "DiscreteMeasure") -> "DiscreteMeasure":
        if self.d != other.d:
            raise ValueError("dimension mismatch")
        if self.density is not None and other.density is not None:
            if self.density.grid != other.density.grid:
                raise ValueError("cannot add densities on different grids")
            dens = self.density.with_values(
                self.density.values + other.density.values)
        else:
            dens = self.density or other.density
        return DiscreteMeasure(
            self.d, np.concatenate([self.points, other.points]),
            np.concatenate([self.masses, other.masses]), density=dens)

    def to_dict(self) -> dict:
        doc = {"d": self.d,
               "atoms": [[*map(float, p), float(m)]
                         for p, m in zip(self.points, self.masses)]}
        if self.meta:
            doc["meta"] = self.meta
        if self.density is not None:
            doc["density"] = "attached-grid"
        return doc


def _merge_atoms(points, masses, radius):
    order = np.lexsort(points.T[::-1])
    points, masses = points[order], masses[order]
    keep_p, keep_m = [], []
    for p, m in zip(points, masses):
        if keep_p and np.linalg.norm(p - keep_p[-1]) <= radius:
            keep_m[-1] += m
        else:
            keep_p.append(p.copy())
            keep_m.append(m)
    return np.array(keep_p), np.array(keep_m)


def _evaluate(v, pts: np.ndarray) -> np.ndarray:
    if isinstance(v, ScalarField):
        return np.atleast_1d(v.sample(pts))
    return np.atleast_1d(np.asarray(v(pts), float))


def integrate(v, mu: DiscreteMeasure, region=None) -> float:
    """Integral of v against mu, upper-integral convention.

    v is a callable on (n, d) points or a ScalarField. Positive-part
    contributions are accumulated first; any positive-mass atom at a +inf
    value yields +inf immediately. NaN evaluations raise.
    """
    if region is not None:
        mu = restrict(mu, region)
    total_pos = 0.0
    total_neg = 0.0
    if len(mu.points):
        vals = _evaluate(v, mu.points)
        if np.any(np.isnan(vals)):
            raise ValueError("integrand evaluated to NaN on an atom")
        if np.any((vals == np.inf) & (mu.masses > 0)):
            return np.inf
        contrib = mu.masses * vals
        contrib[(vals == -np.inf) & (mu.masses == 0)] = 0.0
        total_pos += float(contrib[contrib > 0].sum())
        total_neg += float(contrib[contrib < 0].sum())
        if np.any(np.isnan(contrib)):
            raise ValueError("indeterminate atom contribution (0 * inf)")
    if mu.density is not None:
        cm = mu.cell_masses
        sel = cm != 0.0
        if sel.any():
            pts = mu.density.grid.points().reshape(
                *mu.density.grid.shape, mu.d)[sel]
            vals = _evaluate(v, pts)
            if np.any(np.isnan(vals)):
                raise ValueError("integrand evaluated to NaN on a density cell")
            if np.any((vals == np.inf) & (cm[sel] > 0)):
                return np.inf
            contrib = cm[sel] * vals
            total_pos += float(contrib[contrib > 0].sum())
            total_neg += float(contrib[contrib < 0].sum())
    if total_pos == np.inf:
        return np.inf
    return total_pos + total_neg


def riesz_measure(u: ScalarField, clamp_tol: Optional[float] = None):
    """Riesz measure c_d * (discrete Laplacian of u) as a density measure.

    For subharmonic inputs the density is positive up to stencil error;
    negatives within the clamp tolerance are zeroed. Larger negatives are
    kept as a signed charge and flagged. Returns (measure, flags) with
    flags = {"nonsubharmonic": bool, "worst_negative": float}.
    """
    lap, valid = discrete_laplacian(u)
    c = riesz_constant(u.d)
    dens = c * lap.values
    dens[~valid] = 0.0
    if clamp_tol is None:
        # stencil noise scale: O(h^2) fourth-derivative error in c_d Lap u
        scale = np.percentile(np.abs(dens[valid]), 95) if valid.any() else 1.0
        clamp_tol = 1e-6 + 1e-3 * float(scale)
    neg = dens < 0
    worst = float(-dens[neg].min()) if neg.any() else 0.0
    small = neg & (dens > -clamp_tol)
    dens[small] = 0.0
    flags = {"nonsubharmonic": bool((dens < 0).any()),
             "worst_negative": worst}
    density = ScalarField(u.grid, dens, valid)
    return DiscreteMeasure(u.d, density=density), flags


def counting_measure(zeros, d: int = 2, merge_radius: float = 0.0
                     ) -> DiscreteMeasure:
    """Counting measure of an indexed zero set [(point, multiplicity), ...]."""
    pts, mult = [], []
    for z, m in zeros:
        m = int(m)
        if m <= 0:
            raise ValueError("multiplicities must be positive integers")
        pts.append(np.atleast_1d(np.asarray(z, float)))
        mult.append(float(m))
    if not pts:
        return DiscreteMeasure(d)
    pts = np.array(pts)
    return DiscreteMeasure(pts.shape[1], pts, np.array(mult),
                           merge_radius=merge_radius)


def _region_mask_fn(region) -> Callable:
    if callable(getattr(region, "contains", None)):
        return lambda pts: np.atleast_1d(region.contains(pts))
    if callable(region):
        return lambda pts: np.atleast_1d(np.asarray(region(pts), bool))
    raise TypeError("region must expose .contains or be callable")


def restrict(mu: DiscreteMeasure, region) -> DiscreteMeasure:
    """Restriction of atoms and density cells to a region; masses kept."""
    keep = _region_mask_fn(region)
    if len(mu.points):
        sel = keep(mu.points)
        pts, masses = mu.points[sel], mu.masses[sel]
    else:
        pts, masses = mu.points, mu.masses
    dens = None
    if mu.density is not None:
        grid_pts = mu.density.grid.points()
        sel = keep(grid_pts).reshape(mu.density.grid.shape)
        dens = ScalarField(mu.density.grid,
                           np.where(sel, mu.density.values, 0.0),
                           mu.density.mask & sel)
    return DiscreteMeasure(mu.d, pts, masses, density=dens,
                           meta=dict(mu.meta))
