"""Grid-sampled extended-real functions and their discrete operators.

Fields are immutable value objects: a uniform node lattice over a bounding
box, float64 values that may hold -inf at logarithmic poles, and a boolean
mask of active cells. Operators return new fields. Cells adjacent to -inf
or to the mask edge are flagged invalid rather than evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import accel
from .geometry import Box

__all__ = [
    "Grid",
    "ScalarField",
    "discrete_laplacian",
    "spherical_mean",
    "glue_max",
    "subharmonicity_test",
    "SubharmonicityReport",
    "harmonic_replacement",
    "GluingPreconditionError",
    "SolverError",
]


class GluingPreconditionError(ValueError):
    """A gluing boundary hypothesis fails beyond tolerance."""


class SolverError(RuntimeError):
    """A relaxation solver did not reach its residual target."""


@dataclass(frozen=True)
class Grid:
    """Uniform node lattice: node (i0, .., ik) sits at origin + index * h."""

    origin: tuple
    h: float
    shape: tuple

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        if self.h <= 0:
            raise ValueError("grid spacing must be > 0")
        if len(self.origin) != len(self.shape) or any(n < 2 for n in self.shape):
            raise ValueError("grid needs >= 2 nodes per axis")

    @property
    def d(self) -> int:
        return len(self.shape)

    @classmethod
    def from_box(cls, box: Box, h: float) -> "Grid":
        shape = tuple(int(np.floor((hi - lo) / h + 1e-9)) + 1
                      for lo, hi in zip(box.lo, box.hi))
        return cls(box.lo, h, shape)

    def axes(self):
        return [o + self.h * np.arange(n) for o, n in zip(self.origin, self.shape)]

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def mesh(self):
        return np.meshgrid(*self.axes(), indexing="ij")

    @property
    def box(self) -> Box:
        return Box(self.origin,
                   tuple(o + self.h * (n - 1)
                         for o, n in zip(self.origin, self.shape)))

    def cell_volume(self) -> float:
        return self.h ** self.d

    def locate(self, pts):
        """Continuous index coordinates of points."""
        pts = np.atleast_2d(np.asarray(pts, float))
        return (pts - np.asarray(self.origin)) / self.h


class ScalarField:
    """Extended-real samples on a Grid with an active-region mask."""

    def __init__(self, grid: Grid, values: np.ndarray,
                 mask: Optional[np.ndarray] = None):
        self.grid = grid
        values = np.asarray(values, float)
        if values.shape != grid.shape:
            raise ValueError("values shape does not match grid")
        if np.any(values == np.inf):
            raise ValueError("+inf values are not representable in a field")
        self.values = values
        if mask is None:
            mask = np.ones(grid.shape, bool)
        self.mask = np.asarray(mask, bool)
        if self.mask.shape != grid.shape:
            raise ValueError("mask shape does not match grid")

    @property
    def d(self) -> int:
        return self.grid.d

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable,
                      mask: Optional[np.ndarray] = None) -> "ScalarField":
        vals = np.asarray(fn(grid.points()), float).reshape(grid.shape)
        return cls(grid, vals, mask)

    @classmethod
    def constant(cls, grid: Grid, value: float,
                 mask: Optional[np.ndarray] = None) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)), mask)

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values, self.mask.copy())

    def with_mask(self, mask) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy(), mask)

    def finite_mask(self) -> np.ndarray:
        return self.mask & np.isfinite(self.values)

    def sample(self, pts):
        """Multilinear interpolation; nan outside the grid or active mask,
        -inf when any stencil corner is -inf."""
        pts = np.asarray(pts, float)
        scalar = pts.ndim == 1
        q = self.grid.locate(pts)
        n = np.asarray(self.grid.shape)
        base = np.floor(q).astype(int)
        base = np.clip(base, 0, n - 2)
        frac = q - base
        inside = np.all((q >= -1e-9) & (q <= n - 1 + 1e-9), axis=1)
        out = np.zeros(len(q))
        ok = np.ones(len(q), bool)
        neg = np.zeros(len(q), bool)
        for corner in np.ndindex(*([2] * self.d)):
            idx = tuple(base[:, k] + corner[k] for k in range(self.d))
            w = np.ones(len(q))
            for k in range(self.d):
                w = w * (frac[:, k] if corner[k] else 1.0 - frac[:, k])
            v = self.values[idx]
            ok &= self.mask[idx] | (w <= 1e-12)
            hit = (v == -np.inf) & (w > 1e-12)
            neg |= hit
            out += np.where(hit, 0.0, w * np.where(np.isfinite(v), v, 0.0))
        out[neg] = -np.inf
        out[~ok | ~inside] = np.nan
        if scalar:
            return float(out[0])
        return out

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy(), self.mask.copy())


def _interior(mask: np.ndarray) -> np.ndarray:
    """Cells whose full stencil neighborhood lies in the mask."""
    out = mask.copy()
    for ax in range(mask.ndim):
        out &= np.roll(mask, 1, axis=ax) & np.roll(mask, -1, axis=ax)
        sl = [slice(None)] * mask.ndim
        sl[ax] = 0
        out[tuple(sl)] = False
        sl[ax] = -1
        out[tuple(sl)] = False
    return out


def discrete_laplacian(f: ScalarField):
    """Standard 3/5/7-point stencil Laplacian.

    Returns (field, valid) where valid marks cells whose whole stencil is
    active and finite; other cells hold 0 and are excluded from valid.
    """
    u = f.values
    finite = f.finite_mask()
    valid = _interior(finite)
    lap = np.zeros_like(u)
    work = np.where(finite, u, 0.0)
    for ax in range(f.d):
        lap += np.roll(work, 1, axis=ax) + np.roll(work, -1, axis=ax)
    lap -= 2 * f.d * work
    lap /= f.grid.h ** 2
    lap[~valid] = 0.0
    return ScalarField(f.grid, lap, f.mask.copy()), valid


_SPHERE_CACHE: dict = {}


def sphere_rule(d: int, n: int):
    """Quadrature nodes (unit directions) and weights summing to 1.

    d = 2 uses the trapezoid rule on the circle (spectrally accurate for
    periodic integrands); d = 3 a Gauss-Legendre x uniform product rule;
    d = 1 the two-point average.
    """
    key = (d, n)
    if key in _SPHERE_CACHE:
        return _SPHERE_CACHE[key]
    if d == 1:
        dirs = np.array([[-1.0], [1.0]])
        w = np.array([0.5, 0.5])
    elif d == 2:
        ang = 2 * np.pi * np.arange(n) / n
        dirs = np.stack([np.cos(ang), np.sin(ang)], -1)
        w = np.full(n, 1.0 / n)
    else:
        n_theta = max(4, int(np.sqrt(n)))
        n_phi = 2 * n_theta
        x, gw = np.polynomial.legendre.leggauss(n_theta)
        phi = 2 * np.pi * np.arange(n_phi) / n_phi
        ct = x[:, None]
        st = np.sqrt(1 - ct**2)
        dirs = np.stack(
            [(st * np.cos(phi)).ravel(), (st * np.sin(phi)).ravel(),
             np.broadcast_to(ct, (n_theta, n_phi)).ravel()], -1)
        w = np.broadcast_to(gw[:, None] / (2 * n_phi), (n_theta, n_phi)).ravel()
    _SPHERE_CACHE[key] = (dirs, w)
    return dirs, w


def spherical_mean(f: ScalarField, x, r: float, n: int = 128) -> float:
    """Average of f over the sphere of radius r about x (interpolated).

    The whole sphere must lie in the active mask; otherwise raises.
    """
    if r <= 0:
        raise ValueError("sphere radius must be > 0")
    x = np.atleast_1d(np.asarray(x, float))
    dirs, w = sphere_rule(f.d, n)
    vals = f.sample(x + r * dirs)
    if np.any(np.isnan(vals)):
        raise ValueError("sphere exits the active mask")
    if np.any(vals == -np.inf):
        return -np.inf
    return float(np.sum(w * vals))


def spherical_means(f: ScalarField, centers: np.ndarray, r: float,
                    n: int = 128) -> np.ndarray:
    """Sphere averages of f around many centers at once (nan where the
    sphere leaves the mask, -inf when it touches a -inf cell)."""
    centers = np.atleast_2d(np.asarray(centers, float))
    dirs, w = sphere_rule(f.d, n)
    pts = centers[:, None, :] + r * dirs[None, :, :]
    vals = f.sample(pts.reshape(-1, f.d)).reshape(len(centers), -1)
    out = np.where(vals == -np.inf, 0.0, vals) @ w
    out[np.isnan(vals).any(axis=1)] = np.nan
    out[(vals == -np.inf).any(axis=1)] = -np.inf
    return out


def glue_max(u: ScalarField, u0: ScalarField, region0: np.ndarray,
             tol: float = None) -> ScalarField:
    """Glue u (on the whole active region) with u0 given on region0.

    Checks the discrete boundary hypothesis: at every active cell just
    outside region0 with a neighbor inside, the inside value u0 must not
    exceed u there by more than tol. Returns max(u, u0) on region0 and u
    elsewhere.
    """
    if u.grid != u0.grid:
        raise ValueError("glue_max requires fields on the same grid")
    region0 = np.asarray(region0, bool)
    h = u.grid.h
    if tol is None:
        tol = 10 * h
    worst = -np.inf
    worst_cell = None
    inner = region0 & u0.mask
    for ax in range(u.d):
        for shift in (1, -1):
            nb_in = np.roll(inner, shift, axis=ax)
            sl = [slice(None)] * u.d
            sl[ax] = 0 if shift == 1 else -1
            nb_in[tuple(sl)] = False
            ring = u.mask & ~region0 & nb_in
            if not ring.any():
                continue
            inside_vals = np.roll(np.where(inner, u0.values, -np.inf),
                                  shift, axis=ax)
            gap = inside_vals[ring] - u.values[ring]
            if gap.size and gap.max() > worst:
                worst = float(gap.max())
                cells = np.argwhere(ring)
                worst_cell = tuple(cells[int(np.argmax(gap))])
    if worst > tol:
        raise GluingPreconditionError(
            f"boundary hypothesis violated by {worst:.3g} at cell {worst_cell}")
    vals = u.values.copy()
    take = inner & u.mask
    vals[take] = np.maximum(u.values[take], u0.values[take])
    return ScalarField(u.grid, vals, u.mask.copy())


@dataclass
class SubharmonicityReport:
    tested: int
    violations: int
    worst_margin: float
    worst_cell: Optional[tuple]
    tol_scale: float

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {"tested": self.tested, "violations": self.violations,
                "worst_margin": self.worst_margin,
                "worst_cell": list(self.worst_cell) if self.worst_cell else None,
                "tol_scale": self.tol_scale}


def subharmonicity_test(f: ScalarField, radii, n_sphere: int = 64,
                        tol_factor: float = 10.0,
                        cells_mask: Optional[np.ndarray] = None
                        ) -> SubharmonicityReport:
    """Sub-mean-value check f(x) <= mean of f on spheres around x.

    Tolerance per cell is tol_factor * max(h^2, local second difference),
    matching the O(h^2) stencil/interpolation error. Cells whose spheres
    leave the mask are skipped, -inf cells pass trivially.
    """
    radii = [float(r) for r in np.atleast_1d(radii)]
    h = f.grid.h
    finite = f.finite_mask()
    test_mask = finite if cells_mask is None else (finite & cells_mask)
    # local second-difference scale, for the tolerance only
    work = np.where(finite, f.values, 0.0)
    s2 = np.zeros_like(work)
    for ax in range(f.d):
        s2 = np.maximum(
            s2, np.abs(np.roll(work, 1, ax) + np.roll(work, -1, ax) - 2 * work))
    s2[~_interior(finite)] = 0.0

    dirs_w = {r: sphere_rule(f.d, n_sphere) for r in radii}
    pts = f.grid.points().reshape(*f.grid.shape, f.d)
    tested = 0
    violations = 0
    worst = -np.inf
    worst_cell = None
    idx = np.argwhere(test_mask)
    centers = pts[test_mask]
    fv = f.values[test_mask]
    tol = tol_factor * np.maximum(h * h, s2[test_mask])
    for r in radii:
        dirs, w = dirs_w[r]
        sphere_pts = centers[:, None, :] + r * dirs[None, :, :]
        vals = f.sample(sphere_pts.reshape(-1, f.d)).reshape(len(centers), -1)
        usable = ~np.isnan(vals).any(axis=1)
        means = np.where(vals[usable] == -np.inf, 0.0, vals[usable])
        has_neg = (vals[usable] == -np.inf).any(axis=1)
        mean = means @ w
        mean[has_neg] = -np.inf
        margin = fv[usable] - mean
        bad = margin > tol[usable]
        tested += int(usable.sum())
        violations += int(bad.sum())
        if margin.size and margin.max() > worst:
            worst = float(margin.max())
            worst_cell = tuple(idx[usable][int(np.argmax(margin))])
    return SubharmonicityReport(tested, violations,
                                worst if tested else 0.0, worst_cell,
                                tol_factor * h * h)


def _sor_omega(unknown: np.ndarray) -> float:
    idx = np.nonzero(unknown)
    n = max(int(ax.max() - ax.min()) + 1 for ax in idx)
    return 2.0 / (1.0 + np.sin(np.pi / max(n, 3)))


def harmonic_replacement(f: ScalarField, shell: np.ndarray,
                         tol: float = 1e-9, max_iter: int = 100000
                         ) -> ScalarField:
    """Replace f inside the shell by the discrete Dirichlet solution.

    Boundary data is taken from f on the cells bordering the shell, which
    must be active and finite. d = 1 solves exactly (affine interpolation);
    d = 2, 3 run red-black SOR to the residual target.
    """
    shell = np.asarray(shell, bool)
    unknown = shell & f.mask
    if not unknown.any():
        return f.copy()
    ring = np.zeros_like(unknown)
    for ax in range(f.d):
        ring |= np.roll(unknown, 1, ax) | np.roll(unknown, -1, ax)
    ring &= ~unknown
    if not np.all(np.isfinite(f.values[ring]) & f.mask[ring]):
        raise ValueError("shell boundary data must be active and finite")
    if f.d == 1:
        vals = f.values.copy()
        idx = np.flatnonzero(unknown)
        splits = np.flatnonzero(np.diff(idx) > 1)
        for run in np.split(idx, splits + 1):
            a, b = run[0] - 1, run[-1] + 1
            t = (run - a) / (b - a)
            vals[run] = (1 - t) * vals[a] + t * vals[b]
        return ScalarField(f.grid, vals, f.mask.copy())
    start = f.values.copy()
    start[unknown] = float(np.mean(f.values[ring]))
    omega = _sor_omega(unknown)
    sol, residual, iters = accel.sor_solve(start, unknown, omega, tol, max_iter)
    if residual >= tol:
        raise SolverError(
            f"harmonic replacement stalled: residual {residual:.3g} "
            f"after {iters} sweeps (target {tol:.3g})")
    return ScalarField(f.grid, sol, f.mask.copy())
