"""Green's functions, harmonic measure and the boundary floor constant.

Three evaluation methods: closed forms (disc/ball/half-space, arbitrary
interior pole via reflection or Moebius images), walk-on-spheres Monte
Carlo (any accelerated domain kind), and a masked grid Dirichlet solve
(any domain with an inside test, including implicit ones).

Every stochastic estimator takes an explicit seed; sample blocks get
independent child streams from numpy SeedSequence spawning, and blocks
are combined in fixed order, so results do not depend on the worker pool
size.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import accel
from .fields import Grid, ScalarField, harmonic_replacement
from .geometry import CompactSet, Domain
from .kernels import kernel_K

__all__ = [
    "GreenSpec",
    "EstimateResult",
    "green",
    "green_values",
    "green_field",
    "harmonic_measure_integral",
    "harmonic_measure_atoms",
    "green_floor",
    "wos_exits",
]

WOS_BLOCK = 8192


class EstimatorError(RuntimeError):
    pass


@dataclass
class EstimateResult:
    value: float
    std_error: float
    samples: int
    seed: Optional[int]
    method: str

    def to_dict(self) -> dict:
        return {"value": self.value, "std_error": self.std_error,
                "samples": self.samples, "seed": self.seed,
                "method": self.method}


@dataclass
class GreenSpec:
    """Domain + pole + evaluation method for g_D(. , o).

    method: "closed_form", "wos" or "grid". eps_shell defaults to
    1e-4 * diam(D) (walk-on-spheres termination shell), grid_h to
    diam(D)/256.
    """

    domain: Domain
    pole: tuple
    method: str = "closed_form"
    samples: int = 20000
    eps_shell: Optional[float] = None
    seed: Optional[int] = 0
    grid_h: Optional[float] = None
    grid_tol: float = 1e-9

    def __post_init__(self):
        self.pole = tuple(float(c) for c in np.atleast_1d(self.pole))
        if not self.domain.contains(np.asarray(self.pole)):
            raise ValueError("pole must lie strictly inside the domain")
        sd = self.domain.signed_distance(np.asarray(self.pole))
        if sd <= 0:
            raise ValueError("pole must not sit on the boundary")
        if self.eps_shell is None:
            self.eps_shell = 1e-4 * self.domain.diameter
        if self.grid_h is None:
            self.grid_h = self.domain.diameter / 256.0
        if self.samples < 1:
            raise ValueError("need at least one sample path")
        self._grid_cache = None

    @property
    def d(self) -> int:
        return self.domain.d


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("POTBAL_THREADS", "1")))
    except ValueError:
        return 1


def wos_exits(domain: Domain, starts: np.ndarray, eps: float, seed,
              max_steps: int = 4000) -> np.ndarray:
    """Boundary exit points of walk-on-spheres paths from the start points.

    Work is split into fixed-size blocks with SeedSequence child streams;
    block results are stitched in order, so the outcome is a pure function
    of (domain, starts, eps, seed) regardless of thread count.
    """
    desc = accel.domain_descriptor(domain)
    starts = np.atleast_2d(np.asarray(starts, float))
    n = len(starts)
    blocks = [(i, min(i + WOS_BLOCK, n)) for i in range(0, n, WOS_BLOCK)]
    seeds = np.random.SeedSequence(seed).spawn(len(blocks))
    out = np.empty_like(starts)

    def run_block(k):
        lo, hi = blocks[k]
        rng = np.random.default_rng(seeds[k])
        exits, _ = accel.wos_exit(desc, starts[lo:hi], eps, max_steps, rng)
        return k, exits

    workers = _thread_count()
    if workers == 1 or len(blocks) == 1:
        results = map(run_block, range(len(blocks)))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_block, range(len(blocks))))
    for k, exits in results:
        lo, hi = blocks[k]
        out[lo:hi] = exits
    return out


# -- closed forms ----------------------------------------------------------


def _green_ball_2d(center, R, o, x):
    z = (x[:, 0] - center[0]) + 1j * (x[:, 1] - center[1])
    a = complex(o[0] - center[0], o[1] - center[1])
    z, a = z / R, a / R
    with np.errstate(divide="ignore"):
        val = np.log(np.abs(1 - z * np.conj(a))) - np.log(np.abs(z - a))
    return val


def _green_ball_3d(center, R, o, x):
    c = np.asarray(center)
    o = np.asarray(o)
    r1 = np.linalg.norm(x - o, axis=-1)
    rho = np.linalg.norm(o - c)
    with np.errstate(divide="ignore"):
        if rho < 1e-14:
            return 1.0 / r1 - 1.0 / R
        o_star = c + (R**2 / rho**2) * (o - c)
        r2 = np.linalg.norm(x - o_star, axis=-1)
        return 1.0 / r1 - (R / rho) / r2


def _green_interval(center, R, o, x):
    a, b = center[0] - R, center[0] + R
    oo, xs = o[0], x[:, 0]
    lo = np.minimum(xs, oo)
    hi = np.maximum(xs, oo)
    return 2.0 * (lo - a) * (b - hi) / (b - a)


def _green_half_space(normal, offset, o, x, d):
    n = np.asarray(normal)
    o = np.asarray(o)
    o_star = o + 2.0 * (offset - o @ n) * n
    r1 = np.linalg.norm(x - o, axis=-1)
    r2 = np.linalg.norm(x - o_star, axis=-1)
    with np.errstate(divide="ignore"):
        if d == 2:
            return np.log(r2) - np.log(r1)
        if d == 3:
            return 1.0 / r1 - 1.0 / r2
    return r2 - r1  # d = 1: kernel K_{-1}(x,y) = |x-y|


def _closed_form(spec: GreenSpec, x: np.ndarray) -> np.ndarray:
    dom, o = spec.domain, np.asarray(spec.pole)
    if dom.kind == "ball":
        c, R = dom.params["center"], dom.params["radius"]
        if spec.d == 2:
            return _green_ball_2d(c, R, o, x)
        if spec.d == 3:
            return _green_ball_3d(c, R, o, x)
        return _green_interval(c, R, o, x)
    if dom.kind == "half_space":
        return _green_half_space(dom.params["normal"], dom.params["offset"],
                                 o, x, spec.d)
    raise ValueError(f"no closed-form Green's function for {dom.kind!r}")


# -- grid method -------------------------------------------------------------


def _grid_harmonic_part(spec: GreenSpec) -> ScalarField:
    """Solve h harmonic in D with boundary data K(. , o) on a node grid."""
    if spec._grid_cache is not None:
        return spec._grid_cache
    box = spec.domain.bounding_box.expand(2 * spec.grid_h)
    grid = Grid.from_box(box, spec.grid_h)
    pts = grid.points()
    o = np.asarray(spec.pole)
    data = kernel_K(spec.d, pts, np.broadcast_to(o, pts.shape))
    data = np.asarray(data, float).reshape(grid.shape)
    inside = spec.domain.contains(pts).reshape(grid.shape)
    start = ScalarField(grid, data)
    sol = harmonic_replacement(start, inside, tol=spec.grid_tol)
    spec._grid_cache = sol
    return sol


# -- public evaluation -------------------------------------------------------


def green_values(spec: GreenSpec, x) -> np.ndarray:
    """Extended Green's function at many points (deterministic methods).

    Piecewise: the Dirichlet Green's function inside D, 0 outside clos D,
    the boundary limit (0 for the regular closed-form kinds) on the
    boundary itself. At the pole the value is +inf.
    """
    x = np.atleast_2d(np.asarray(x, float))
    o = np.asarray(spec.pole)
    sd = np.atleast_1d(spec.domain.signed_distance(x))
    out = np.zeros(len(x))
    inside = sd > 0
    if spec.method == "closed_form":
        if inside.any():
            out[inside] = _closed_form(spec, x[inside])
    elif spec.method == "grid":
        h = _grid_harmonic_part(spec)
        if inside.any():
            minus_k = -np.atleast_1d(kernel_K(
                spec.d, x[inside], np.broadcast_to(o, x[inside].shape)))
            out[inside] = minus_k + h.sample(x[inside])
    else:
        raise ValueError("use green() for single-point Monte Carlo estimates")
    at_pole = np.linalg.norm(x - o, axis=-1) == 0.0
    out[at_pole] = np.inf
    out[inside] = np.maximum(out[inside], 0.0)
    return out


def green(spec: GreenSpec, x):
    """Green's function at one point; Monte Carlo methods return an
    EstimateResult, deterministic methods a float."""
    x = np.atleast_1d(np.asarray(x, float))
    if spec.method in ("closed_form", "grid"):
        return float(green_values(spec, x[None, :])[0])
    # walk on spheres: g = -K(x, o) + E[K(exit, o)]
    o = np.asarray(spec.pole)
    sd = spec.domain.signed_distance(x)
    if sd <= 0:
        return EstimateResult(0.0, 0.0, 0, spec.seed, "walk_on_spheres")
    if np.linalg.norm(x - o) == 0.0:
        return EstimateResult(np.inf, 0.0, 0, spec.seed, "walk_on_spheres")
    starts = np.broadcast_to(x, (spec.samples, spec.d)).copy()
    exits = wos_exits(spec.domain, starts, spec.eps_shell, spec.seed)
    vals = np.atleast_1d(kernel_K(spec.d, exits, np.broadcast_to(o, exits.shape)))
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
    base = -float(kernel_K(spec.d, x, o))
    return EstimateResult(base + mean, se, spec.samples, spec.seed,
                          "walk_on_spheres")


def green_field(spec: GreenSpec, grid: Grid,
                pole_mask_radius: float = 0.0) -> ScalarField:
    """Sample the extended Green's function on a grid.

    Cells within pole_mask_radius of the pole are masked out (the value
    there is near-singular and is meant to be handled analytically).
    """
    pts = grid.points()
    vals = green_values(spec, pts).reshape(grid.shape)
    mask = np.ones(grid.shape, bool)
    if pole_mask_radius > 0:
        dist = np.linalg.norm(pts - np.asarray(spec.pole), axis=-1)
        mask &= (dist > pole_mask_radius).reshape(grid.shape)
    vals = np.where(np.isfinite(vals), vals, 0.0)
    return ScalarField(grid, vals, mask)


def harmonic_measure_integral(domain: Domain, o, f: Callable, samples: int,
                              seed, eps_shell: Optional[float] = None
                              ) -> EstimateResult:
    """Walk-on-spheres estimate of the boundary integral of f against
    harmonic measure at o. Probability normalization is exact by
    construction (the estimator is a plain average over exits)."""
    o = np.atleast_1d(np.asarray(o, float))
    if not domain.contains(o):
        raise ValueError("evaluation point must be interior")
    eps = eps_shell if eps_shell is not None else 1e-4 * domain.diameter
    starts = np.broadcast_to(o, (samples, domain.d)).copy()
    exits = wos_exits(domain, starts, eps, seed)
    vals = np.atleast_1d(np.asarray(f(exits), float))
    if not np.all(np.isfinite(vals)):
        raise EstimatorError("boundary function must be bounded on exits")
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return EstimateResult(mean, se, samples, seed, "walk_on_spheres")


def harmonic_measure_atoms(domain: Domain, o, n: int = 512):
    """Harmonic measure at o as boundary atoms (closed-form kinds).

    disc: Poisson kernel weights at n uniform boundary nodes, renormalized
    to a probability measure. 3-d ball uses the Poisson kernel for the
    sphere on a Fibonacci sample.
    """
    from .measures import DiscreteMeasure

    o = np.atleast_1d(np.asarray(o, float))
    if domain.kind != "ball":
        raise ValueError("harmonic measure atoms require a disc/ball domain")
    c = np.asarray(domain.params["center"])
    R = domain.params["radius"]
    rho = np.linalg.norm(o - c)
    if rho >= R:
        raise ValueError("point must be interior")
    bpts = domain.boundary_sample(n)
    if domain.d == 2:
        w = (R**2 - rho**2) / np.linalg.norm(bpts - o, axis=-1) ** 2
    elif domain.d == 3:
        w = (R**2 - rho**2) / np.linalg.norm(bpts - o, axis=-1) ** 3
    else:
        w = np.array([ (c[0] + R - o[0]), (o[0] - (c[0] - R)) ])
        bpts = np.array([[c[0] - R], [c[0] + R]])
    w = w / w.sum()
    mu = DiscreteMeasure(domain.d, bpts, w)
    if domain.d == 2 and rho < 1e-14:
        mu.meta = {"kind": "uniform_circle", "center": tuple(c),
                   "radius": float(R), "total": 1.0}
    return mu


def green_floor(spec: GreenSpec, S: CompactSet, n_boundary: int = 512) -> float:
    """Floor constant: min of g_D(. , o) over the boundary of S.

    Positive by the minimum principle whenever o sits inside S and S is
    compactly contained in the domain; a nonpositive estimate therefore
    signals a geometry violation and raises.
    """
    o = np.asarray(spec.pole)
    if S.dist_to(o) > 0:
        raise ValueError("pole must lie in the compact set interior")
    bpts = _compact_boundary_sample(S, n_boundary)
    if not np.all(spec.domain.contains(bpts)):
        raise ValueError("compact set must be contained in the domain")
    if spec.method in ("closed_form", "grid"):
        vals = green_values(spec, bpts)
    else:
        vals = np.array([green(spec, p).value for p in bpts])
    m = float(vals.min())
    if m <= 0:
        raise EstimatorError(
            f"green floor is nonpositive ({m:.3g}): geometry violated")
    return m


def _compact_boundary_sample(S: CompactSet, n: int) -> np.ndarray:
    if S.balls is not None:
        dom = Domain.ball_union(S.balls[0], np.maximum(S.balls[1], 1e-12))
        return dom.boundary_sample(n)
    # grid-mask sets: points at distance ~0 from the set hull
    return S.mask_points
