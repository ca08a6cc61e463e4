"""Domains, compact sets, parallel sets and regular enclosing domains.

A Domain is an open region given by an inside test and a signed distance
to its boundary (positive inside). Closed-form kinds (ball, annulus,
half-space, finite union of balls) carry exact or conservative distances;
implicit regions wrap a user oracle plus a bounding box. Everything is
immutable after construction and safe to query concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import ndimage

from .kernels import check_dimension

__all__ = [
    "Box",
    "Domain",
    "CompactSet",
    "parallel_set",
    "separation",
    "regular_enclosing_domain",
    "connected_components",
]

# boundary sampling density: points per unit boundary length in d = 2
BOUNDARY_SAMPLES_PER_UNIT = 256


@dataclass(frozen=True)
class Box:
    """Axis-aligned bounding box [lo, hi] per coordinate."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or any(a >= b for a, b in zip(lo, hi)):
            raise ValueError(f"degenerate box {lo} .. {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def d(self) -> int:
        return len(self.lo)

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, float))
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return np.all((pts >= lo) & (pts <= hi), axis=-1)

    def expand(self, margin: float) -> "Box":
        return Box(tuple(v - margin for v in self.lo),
                   tuple(v + margin for v in self.hi))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(np.asarray(self.hi) - np.asarray(self.lo)))


def _as_points(x, d):
    pts = np.asarray(x, dtype=float)
    scalar = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != d:
        raise ValueError(f"expected points in R^{d}, got shape {pts.shape}")
    return pts, scalar


def _fibonacci_sphere(n: int) -> np.ndarray:
    """Roughly uniform directions on S^2."""
    i = np.arange(n) + 0.5
    phi = np.arccos(1 - 2 * i / n)
    theta = np.pi * (1 + 5**0.5) * i
    return np.stack([np.sin(phi) * np.cos(theta),
                     np.sin(phi) * np.sin(theta),
                     np.cos(phi)], axis=-1)


def _circle_points(center, radius, n):
    ang = 2 * np.pi * (np.arange(n) + 0.5) / n
    return np.asarray(center) + radius * np.stack([np.cos(ang), np.sin(ang)], -1)


class Domain:
    """Open region with inside test, signed distance and boundary sampler.

    kind is one of "ball", "annulus", "half_space", "ball_union",
    "implicit". regularity_hint is True when every boundary point is known
    to be regular for the Dirichlet problem (true for all closed-form kinds
    in d <= 3).
    """

    def __init__(self, d, kind, params, bounding_box, regularity_hint=True,
                 sdf: Optional[Callable] = None):
        self.d = check_dimension(d)
        self.kind = kind
        self.params = params
        self.bounding_box = bounding_box
        self.regularity_hint = bool(regularity_hint)
        self._sdf = sdf

    # -- constructors -----------------------------------------------------

    @classmethod
    def ball(cls, center, radius) -> "Domain":
        center = tuple(float(c) for c in np.atleast_1d(center))
        radius = float(radius)
        if radius <= 0:
            raise ValueError("ball radius must be > 0")
        box = Box(tuple(c - radius for c in center),
                  tuple(c + radius for c in center))
        return cls(len(center), "ball", {"center": center, "radius": radius}, box)

    @classmethod
    def annulus(cls, center, r_in, r_out) -> "Domain":
        center = tuple(float(c) for c in np.atleast_1d(center))
        r_in, r_out = float(r_in), float(r_out)
        if not 0 < r_in < r_out:
            raise ValueError("annulus requires 0 < r_in < r_out")
        box = Box(tuple(c - r_out for c in center),
                  tuple(c + r_out for c in center))
        return cls(len(center), "annulus",
                   {"center": center, "r_in": r_in, "r_out": r_out}, box)

    @classmethod
    def half_space(cls, normal, offset, box_extent=4.0) -> "Domain":
        """Half space {x . n < offset}; the box only truncates sampling."""
        n = np.asarray(normal, float)
        n = n / np.linalg.norm(n)
        offset = float(offset)
        c = offset * n
        box = Box(tuple(c - box_extent), tuple(c + box_extent))
        return cls(len(n), "half_space",
                   {"normal": tuple(n), "offset": offset}, box)

    @classmethod
    def ball_union(cls, centers, radii) -> "Domain":
        centers = np.atleast_2d(np.asarray(centers, float))
        radii = np.broadcast_to(np.asarray(radii, float), centers.shape[0]).copy()
        if np.any(radii <= 0):
            raise ValueError("ball radii must be > 0")
        lo = tuple((centers - radii[:, None]).min(axis=0))
        hi = tuple((centers + radii[:, None]).max(axis=0))
        return cls(centers.shape[1], "ball_union",
                   {"centers": centers, "radii": radii}, Box(lo, hi))

    @classmethod
    def implicit(cls, sdf, box: Box, regularity_hint=False) -> "Domain":
        """Region {sdf > 0} inside box; sdf positive inside, 1-Lipschitz-ish."""
        return cls(box.d, "implicit", {}, box,
                   regularity_hint=regularity_hint, sdf=sdf)

    # -- queries -----------------------------------------------------------

    def signed_distance(self, pts):
        """Signed distance to the boundary, positive inside.

        Exact for ball/annulus/half-space; for ball unions the inside value
        is the conservative max over member balls (a valid lower bound on
        the true distance, which walk-on-spheres requires).
        """
        pts, scalar = _as_points(pts, self.d)
        if self.kind == "ball":
            c = np.asarray(self.params["center"])
            sd = self.params["radius"] - np.linalg.norm(pts - c, axis=-1)
        elif self.kind == "annulus":
            c = np.asarray(self.params["center"])
            rho = np.linalg.norm(pts - c, axis=-1)
            sd = np.minimum(rho - self.params["r_in"],
                            self.params["r_out"] - rho)
        elif self.kind == "half_space":
            n = np.asarray(self.params["normal"])
            sd = self.params["offset"] - pts @ n
        elif self.kind == "ball_union":
            centers = self.params["centers"]
            radii = self.params["radii"]
            gaps = radii[None, :] - np.linalg.norm(
                pts[:, None, :] - centers[None, :, :], axis=-1)
            # max over members: exact outside, conservative lower bound inside
            sd = gaps.max(axis=1)
        else:
            sd = np.asarray(self._sdf(pts), float)
            sd = np.where(self.bounding_box.contains(pts), sd,
                          np.minimum(sd, -1e-12))
        return float(sd[0]) if scalar else sd

    def contains(self, pts):
        pts, scalar = _as_points(pts, self.d)
        ins = self.signed_distance(pts) > 0
        ins = np.atleast_1d(ins)
        return bool(ins[0]) if scalar else ins

    def boundary_sample(self, n: Optional[int] = None) -> np.ndarray:
        """Deterministic sample of boundary points.

        Density defaults to BOUNDARY_SAMPLES_PER_UNIT per unit length in
        d = 2 and a comparable budget in other dimensions.
        """
        if self.kind == "ball":
            c, R = self.params["center"], self.params["radius"]
            if self.d == 1:
                return np.array([[c[0] - R], [c[0] + R]])
            if self.d == 2:
                m = n or max(16, int(BOUNDARY_SAMPLES_PER_UNIT * 2 * np.pi * R))
                return _circle_points(c, R, m)
            m = n or 2048
            return np.asarray(c) + R * _fibonacci_sphere(m)
        if self.kind == "annulus":
            c = self.params["center"]
            out = []
            for R in (self.params["r_in"], self.params["r_out"]):
                if self.d == 2:
                    m = (n // 2 if n else
                         max(16, int(BOUNDARY_SAMPLES_PER_UNIT * 2 * np.pi * R)))
                    out.append(_circle_points(c, R, m))
                else:
                    out.append(np.asarray(c) + R * _fibonacci_sphere(n // 2 if n else 1024))
            return np.concatenate(out, axis=0)
        if self.kind == "half_space":
            nvec = np.asarray(self.params["normal"])
            c = self.params["offset"] * nvec
            # orthonormal frame of the boundary hyperplane
            basis = [v for v in np.eye(self.d)]
            frame = []
            for v in basis:
                w = v - (v @ nvec) * nvec
                for u in frame:
                    w = w - (w @ u) * u
                if np.linalg.norm(w) > 1e-9:
                    frame.append(w / np.linalg.norm(w))
            extent = self.bounding_box.diameter / 2
            m = n or 512
            if not frame:
                return np.atleast_2d(c)
            ticks = np.linspace(-extent, extent, max(2, int(m ** (1 / len(frame)))))
            grids = np.meshgrid(*([ticks] * len(frame)), indexing="ij")
            pts = c + sum(g[..., None] * u for g, u in zip(grids, frame))
            return pts.reshape(-1, self.d)
        if self.kind == "ball_union":
            centers = self.params["centers"]
            radii = self.params["radii"]
            pts = []
            for i in range(len(radii)):
                if self.d == 2:
                    m = (n or max(16, int(
                        BOUNDARY_SAMPLES_PER_UNIT * 2 * np.pi * radii[i])))
                    cand = _circle_points(centers[i], radii[i], m)
                elif self.d == 3:
                    cand = centers[i] + radii[i] * _fibonacci_sphere(n or 512)
                else:
                    cand = np.array([[centers[i, 0] - radii[i]],
                                     [centers[i, 0] + radii[i]]])
                keep = self.signed_distance(cand) > -1e-9
                # boundary of the union: sphere points not interior to another ball
                inside_other = self.signed_distance(cand) > 1e-9
                pts.append(cand[keep & ~inside_other])
            pts = np.concatenate(pts, axis=0)
            if n and len(pts) > n:
                step = len(pts) // n
                pts = pts[:: max(1, step)][:n]
            return pts
        # implicit: march rays from interior seeds to the zero level
        return self._implicit_boundary(n or 1024)

    def _implicit_boundary(self, n):
        box = self.bounding_box
        rng = np.random.default_rng(0)
        probes = rng.uniform(box.lo, box.hi, size=(8 * n, self.d))
        sd = self.signed_distance(probes)
        inside = probes[sd > 0]
        outside = probes[sd <= 0]
        if len(inside) == 0 or len(outside) == 0:
            raise ValueError("implicit domain boundary not resolvable in box")
        m = min(n, len(inside), len(outside))
        a = inside[:m].copy()
        b = outside[:m].copy()
        for _ in range(40):
            mid = 0.5 * (a + b)
            ins = self.signed_distance(mid) > 0
            a[ins] = mid[ins]
            b[~ins] = mid[~ins]
        return 0.5 * (a + b)

    @property
    def diameter(self) -> float:
        return self.bounding_box.diameter

    def to_dict(self) -> dict:
        p = {}
        for k, v in self.params.items():
            p[k] = np.asarray(v).tolist() if isinstance(v, np.ndarray) else v
        return {"d": self.d, "kind": self.kind, "params": p,
                "bounding_box": [list(self.bounding_box.lo),
                                 list(self.bounding_box.hi)],
                "regularity_hint": self.regularity_hint}

    @classmethod
    def from_dict(cls, doc: dict) -> "Domain":
        kind = doc["kind"]
        p = doc["params"]
        if kind == "ball":
            return cls.ball(p["center"], p["radius"])
        if kind == "annulus":
            return cls.annulus(p["center"], p["r_in"], p["r_out"])
        if kind == "half_space":
            return cls.half_space(p["normal"], p["offset"])
        if kind == "ball_union":
            return cls.ball_union(p["centers"], p["radii"])
        raise ValueError(f"cannot deserialize domain kind {kind!r}")


class CompactSet:
    """Non-empty compact set represented by closed balls or a grid mask."""

    def __init__(self, d, balls: Optional[tuple] = None,
                 mask_points: Optional[np.ndarray] = None,
                 bounding_box: Optional[Box] = None):
        self.d = check_dimension(d)
        self.balls = balls  # (centers (m,d), radii (m,))
        self.mask_points = mask_points  # (n, d) cell centers of a grid mask
        if balls is None and (mask_points is None or len(mask_points) == 0):
            raise ValueError("compact set must be non-empty")
        if bounding_box is None:
            pts = self.sample_points()
            r = 0.0 if balls is None else float(np.max(balls[1]))
            pad = r + 1e-12  # keep the box non-degenerate for point sets
            bounding_box = Box(tuple(pts.min(0) - pad), tuple(pts.max(0) + pad))
        self.bounding_box = bounding_box

    @classmethod
    def point(cls, p) -> "CompactSet":
        p = np.atleast_1d(np.asarray(p, float))
        return cls(len(p), balls=(p[None, :], np.zeros(1)))

    @classmethod
    def from_balls(cls, centers, radii) -> "CompactSet":
        centers = np.atleast_2d(np.asarray(centers, float))
        radii = np.broadcast_to(np.asarray(radii, float), centers.shape[0]).copy()
        return cls(centers.shape[1], balls=(centers, radii))

    @classmethod
    def closed_ball(cls, center, radius) -> "CompactSet":
        return cls.from_balls([center], [radius])

    @classmethod
    def segment(cls, a, b, n=129) -> "CompactSet":
        a, b = np.asarray(a, float), np.asarray(b, float)
        t = np.linspace(0, 1, n)[:, None]
        return cls(len(a), balls=((1 - t) * a + t * b, np.zeros(n)))

    @classmethod
    def from_mask_points(cls, pts) -> "CompactSet":
        pts = np.atleast_2d(np.asarray(pts, float))
        return cls(pts.shape[1], mask_points=pts)

    def sample_points(self) -> np.ndarray:
        if self.balls is not None:
            return self.balls[0]
        return self.mask_points

    def dist_to(self, pts):
        """Distance from query points to the set (0 inside)."""
        pts, scalar = _as_points(pts, self.d)
        if self.balls is not None:
            centers, radii = self.balls
            dist = np.linalg.norm(pts[:, None, :] - centers[None, :, :], axis=-1)
            dist = np.maximum(dist - radii[None, :], 0.0).min(axis=1)
        else:
            dist = np.linalg.norm(
                pts[:, None, :] - self.mask_points[None, :, :], axis=-1).min(axis=1)
        return float(dist[0]) if scalar else dist

    def contains(self, pts):
        pts, scalar = _as_points(pts, self.d)
        ins = self.dist_to(pts) <= 1e-12
        return bool(np.atleast_1d(ins)[0]) if scalar else ins

    def dense_sample(self, spacing: float) -> np.ndarray:
        """Points covering the set with the given maximal gap."""
        if self.balls is None:
            return self.mask_points
        centers, radii = self.balls
        out = [centers]
        for c, r in zip(centers, radii):
            if r <= 0:
                continue
            if self.d == 1:
                m = max(2, int(np.ceil(2 * r / spacing)) + 1)
                out.append(np.linspace(c[0] - r, c[0] + r, m)[:, None])
            elif self.d == 2:
                for rho in np.arange(spacing, r + spacing / 2, spacing):
                    rho = min(rho, r)
                    m = max(8, int(np.ceil(2 * np.pi * rho / spacing)))
                    out.append(_circle_points(c, rho, m))
            else:
                for rho in np.arange(spacing, r + spacing / 2, spacing):
                    rho = min(rho, r)
                    m = max(16, int(4 * np.pi * rho**2 / spacing**2))
                    out.append(c + rho * _fibonacci_sphere(m))
        return np.concatenate(out, axis=0)

    def is_connected(self, probe_spacing: Optional[float] = None) -> bool:
        """Connectivity via a proximity graph on a dense sample."""
        if self.balls is not None and len(self.balls[1]) == 1:
            return True
        spacing = probe_spacing or max(self.bounding_box.diameter / 256, 1e-6)
        pts = self.dense_sample(spacing)
        if len(pts) == 1:
            return True
        link = 2.05 * spacing if self.balls is None else 2.05 * spacing
        # union-find over proximity edges
        parent = np.arange(len(pts))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        from scipy.spatial import cKDTree

        tree = cKDTree(pts)
        for i, j in tree.query_pairs(link):
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[ri] = rj
        # balls with radius > 0 may overlap even if samples are sparse
        if self.balls is not None:
            centers, radii = self.balls
            idx_of_center = [int(np.argmin(np.linalg.norm(pts - c, axis=1)))
                             for c in centers]
            for i in range(len(radii)):
                for j in range(i + 1, len(radii)):
                    if (np.linalg.norm(centers[i] - centers[j])
                            <= radii[i] + radii[j] + 1e-12):
                        ri, rj = find(idx_of_center[i]), find(idx_of_center[j])
                        if ri != rj:
                            parent[ri] = rj
        roots = {find(i) for i in range(len(pts))}
        return len(roots) == 1

    def to_dict(self) -> dict:
        if self.balls is not None:
            return {"d": self.d, "kind": "balls",
                    "centers": self.balls[0].tolist(),
                    "radii": self.balls[1].tolist()}
        return {"d": self.d, "kind": "mask_points",
                "points": self.mask_points.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "CompactSet":
        if doc["kind"] == "balls":
            return cls.from_balls(doc["centers"], doc["radii"])
        return cls.from_mask_points(doc["points"])


def parallel_set(S: CompactSet, r: float) -> Domain:
    """Outer r-parallel open set: the union of open balls B(x, r), x in S."""
    if r <= 0:
        raise ValueError("parallel radius must be > 0")
    if S.balls is not None:
        centers, radii = S.balls
        return Domain.ball_union(centers, radii + r)
    box = S.bounding_box.expand(r)
    return Domain.implicit(lambda p: r - S.dist_to(p), box)


def separation(S: CompactSet, D: Domain) -> float:
    """dist(S, boundary of D); requires S inside D."""
    probes = S.dense_sample(max(S.bounding_box.diameter, 1e-3) / 64)
    if not np.all(D.contains(probes)):
        raise ValueError("compact set is not contained in the domain")
    bpts = D.boundary_sample()
    return float(S.dist_to(bpts).min())


def regular_enclosing_domain(S: CompactSet, r: float, r_prime: float) -> Domain:
    """Regular domain pinched between the r- and r'-parallel sets of S.

    Realized as the rho-parallel set at the midpoint rho = (r + r')/2,
    represented by a finite union of balls centered on a dense sample of S
    (finite unions of balls are Dirichlet-regular for d <= 3).
    """
    if not S.is_connected():
        raise ValueError("regular enclosing domain requires a connected set")
    if r >= r_prime:
        raise ValueError("need r < r_prime")
    rho = 0.5 * (r + r_prime)
    if S.balls is not None and len(S.balls[1]) == 1:
        c, R = S.balls[0][0], S.balls[1][0]
        return Domain.ball(c, R + rho)
    gap = rho - r
    pts = S.dense_sample(gap / 2)
    dom = Domain.ball_union(pts, rho)
    dom.regularity_hint = True
    return dom


def connected_components(mask: np.ndarray) -> list:
    """4-connected (d=2) / 6-connected (d=3) components of a grid mask.

    Returns boolean masks ordered by smallest flat cell index. Diagonal
    adjacency does not connect, so discrete components under-approximate
    topological ones.
    """
    mask = np.asarray(mask, bool)
    if mask.ndim not in (1, 2, 3):
        raise ValueError("mask must be 1-, 2- or 3-dimensional")
    if not mask.any():
        return []
    structure = ndimage.generate_binary_structure(mask.ndim, 1)
    labels, n = ndimage.label(mask, structure=structure)
    comps = [labels == k for k in range(1, n + 1)]
    comps.sort(key=lambda m: int(np.flatnonzero(m.ravel())[0]))
    return comps
