"""Pure-numpy backend for the hot kernels.

The compiled backend (_fast.pyx) mirrors these routines operation for
operation, drawing randoms from the same Generator in the same order, so
both backends produce bit-identical results for identical seeds.

Domain descriptors are plain tuples (code, vec, centers, radii):

  code 0  ball        vec = [*center, R]
  code 1  annulus     vec = [*center, r_in, r_out]
  code 2  half space  vec = [*unit_normal, offset]
  code 3  ball union  centers (m, d), radii (m,)
"""

from __future__ import annotations

import numpy as np

BALL, ANNULUS, HALF_SPACE, BALL_UNION = 0, 1, 2, 3


def signed_distance(code, vec, centers, radii, pts):
    """Signed distance to the domain boundary, positive inside."""
    pts = np.atleast_2d(np.asarray(pts, float))
    d = pts.shape[1]
    if code == BALL:
        c, R = vec[:d], vec[d]
        return R - np.linalg.norm(pts - c, axis=-1)
    if code == ANNULUS:
        c, r_in, r_out = vec[:d], vec[d], vec[d + 1]
        rho = np.linalg.norm(pts - c, axis=-1)
        return np.minimum(rho - r_in, r_out - rho)
    if code == HALF_SPACE:
        n, off = vec[:d], vec[d]
        return off - pts @ n
    gaps = radii[None, :] - np.linalg.norm(
        pts[:, None, :] - centers[None, :, :], axis=-1)
    return gaps.max(axis=1)


def project_boundary(code, vec, centers, radii, pts):
    """Nearest boundary point (exact for closed forms, candidate-based
    for ball unions)."""
    pts = np.atleast_2d(np.asarray(pts, float))
    n_pts, d = pts.shape
    if code == BALL:
        c, R = vec[:d], vec[d]
        v = pts - c
        rho = np.linalg.norm(v, axis=-1, keepdims=True)
        v = np.where(rho > 0, v, np.eye(d)[0])
        rho = np.where(rho > 0, rho, 1.0)
        return c + R * v / rho
    if code == ANNULUS:
        c, r_in, r_out = vec[:d], vec[d], vec[d + 1]
        v = pts - c
        rho = np.linalg.norm(v, axis=-1, keepdims=True)
        target = np.where(rho[:, 0] - r_in < r_out - rho[:, 0], r_in, r_out)
        return c + target[:, None] * v / rho
    if code == HALF_SPACE:
        nvec, off = vec[:d], vec[d]
        sd = off - pts @ nvec
        return pts + sd[:, None] * nvec
    # union of balls: per-ball radial projections, prefer candidates that
    # are not interior to another member ball
    diff = pts[:, None, :] - centers[None, :, :]
    rho = np.linalg.norm(diff, axis=-1)
    rho_safe = np.where(rho > 0, rho, 1.0)
    cand = centers[None, :, :] + (radii[None, :] / rho_safe)[:, :, None] * diff
    cand_dist = np.abs(rho - radii[None, :])
    flat = cand.reshape(-1, d)
    gaps = radii[None, :] - np.linalg.norm(
        flat[:, None, :] - centers[None, :, :], axis=-1)
    # candidates sit on their own sphere (gap ~ 0), so any gap above the
    # slack means strictly interior to another member ball
    interior = (gaps > 1e-9).any(axis=1)
    interior = interior.reshape(n_pts, -1)
    penal = np.where(interior, np.inf, cand_dist)
    best = penal.argmin(axis=1)
    none_valid = ~np.isfinite(penal.min(axis=1))
    best = np.where(none_valid, cand_dist.argmin(axis=1), best)
    return cand[np.arange(n_pts), best]


def wos_exit(code, vec, centers, radii, starts, eps, max_steps, rng):
    """Walk-on-spheres exit points for every start point.

    Per round, every active walker jumps to a uniform point of the sphere
    of radius sd(x) around x; walkers stop once sd(x) < eps and are
    projected to the nearest boundary point. Returns (exits, steps).
    Raises RuntimeError if any walker survives max_steps rounds.
    """
    pos = np.atleast_2d(np.asarray(starts, float)).copy()
    n, d = pos.shape
    exits = np.empty_like(pos)
    steps = np.zeros(n, dtype=np.int64)
    alive = np.arange(n)
    for _ in range(max_steps):
        sd = signed_distance(code, vec, centers, radii, pos[alive])
        done = sd < eps
        if np.any(done):
            idx = alive[done]
            exits[idx] = project_boundary(code, vec, centers, radii, pos[idx])
        alive = alive[~done]
        if alive.size == 0:
            return exits, steps
        sd = sd[~done]
        m = alive.size
        if d == 1:
            u = rng.random(m)
            step = np.where(u < 0.5, -1.0, 1.0)[:, None] * sd[:, None]
        elif d == 2:
            theta = 2.0 * np.pi * rng.random(m)
            step = sd[:, None] * np.stack([np.cos(theta), np.sin(theta)], -1)
        else:
            cz = 2.0 * rng.random(m) - 1.0
            phi = 2.0 * np.pi * rng.random(m)
            s = np.sqrt(1.0 - cz * cz)
            step = sd[:, None] * np.stack(
                [s * np.cos(phi), s * np.sin(phi), cz], -1)
        pos[alive] += step
        steps[alive] += 1
    raise RuntimeError(
        f"walk-on-spheres: {alive.size} walkers not terminated "
        f"after {max_steps} steps")


def _color_indices(unknown):
    """Index arrays of unknown cells split by red-black parity."""
    idx = np.nonzero(unknown)
    parity = np.zeros(idx[0].shape, dtype=np.int64)
    for ax in idx:
        parity = parity + ax
    out = []
    for p in (0, 1):
        sel = (parity % 2) == p
        out.append(tuple(ax[sel] for ax in idx))
    return out


def sor_solve(u, unknown, omega, tol, max_iter):
    """Red-black SOR for the grid Laplace equation on masked cells.

    u holds Dirichlet data on every non-unknown cell; unknown cells must
    not touch the array edge. Returns (solution, residual, iterations)
    where residual is max |neighbor mean - value| over unknowns.
    """
    u = np.array(u, dtype=float)
    unknown = np.asarray(unknown, bool)
    if u.ndim not in (2, 3):
        raise ValueError("sor_solve supports 2- and 3-d grids")
    edge = np.zeros_like(unknown)
    for ax in range(u.ndim):
        sl = [slice(None)] * u.ndim
        sl[ax] = 0
        edge[tuple(sl)] = True
        sl[ax] = -1
        edge[tuple(sl)] = True
    if np.any(unknown & edge):
        raise ValueError("unknown cells must not touch the grid edge")
    if not unknown.any():
        return u, 0.0, 0
    colors = _color_indices(unknown)
    inv = 0.25 if u.ndim == 2 else 1.0 / 6.0
    residual = np.inf
    for it in range(1, max_iter + 1):
        for col in colors:
            nb = _neighbor_sum(u, col)
            ui = u[col]
            u[col] = ui + omega * (inv * nb - ui)
        residual = 0.0
        for col in colors:
            nb = _neighbor_sum(u, col)
            r = np.abs(inv * nb - u[col])
            if r.size:
                residual = max(residual, float(r.max()))
        if residual < tol:
            return u, residual, it
    return u, residual, max_iter


def _neighbor_sum(u, idx):
    if u.ndim == 2:
        i, j = idx
        return (u[i - 1, j] + u[i + 1, j]) + (u[i, j - 1] + u[i, j + 1])
    i, j, k = idx
    return ((u[i - 1, j, k] + u[i + 1, j, k])
            + (u[i, j - 1, k] + u[i, j + 1, k])
            + (u[i, j, k - 1] + u[i, j, k + 1]))
