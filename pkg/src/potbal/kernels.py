"""Radial kernels, Riesz normalization constants and unit ball/sphere geometry.

Everything here is dimension-generic and exact up to floating point; the
solver modules restrict themselves to d <= 3 but these formulas hold for
every d >= 1.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "MAX_SOLVER_DIM",
    "k_q",
    "kernel_K",
    "riesz_constant",
    "sphere_area",
    "ball_volume",
    "check_dimension",
]

MAX_SOLVER_DIM = 3


def check_dimension(d: int, solver: bool = False) -> int:
    """Validate a space dimension. Solvers only support d <= 3."""
    d = int(d)
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if solver and d > MAX_SOLVER_DIM:
        raise ValueError(f"solvers support d <= {MAX_SOLVER_DIM}, got {d}")
    return d


def k_q(q: float, t):
    """Radial kernel profile: ln t for q = 0, -sgn(q) t^-q otherwise.

    Strictly increasing in t > 0 for every fixed q. Accepts scalars or
    arrays; t <= 0 raises.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise ValueError("k_q requires t > 0")
    if q == 0:
        out = np.log(t)
    else:
        out = -math.copysign(1.0, q) * t ** (-q)
    if out.ndim == 0:
        return float(out)
    return out


def kernel_K(d: int, x, y):
    """Riesz kernel K_{d-2}(x, y) = k_{d-2}(|x - y|), extended to the diagonal.

    Coincident points map to -inf for d >= 2 and to 0 for d = 1. Symmetric
    and invariant under simultaneous translation/rotation of both arguments.
    """
    d = check_dimension(d)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != d or y.shape[-1] != d:
        raise ValueError("point dimension mismatch with d")
    r = np.linalg.norm(np.atleast_2d(x) - np.atleast_2d(y), axis=-1)
    scalar = (x.ndim == 1 and y.ndim == 1)
    out = np.empty_like(r)
    pos = r > 0.0
    if np.any(pos):
        out[pos] = k_q(d - 2, r[pos])
    out[~pos] = -np.inf if d >= 2 else 0.0
    if scalar:
        return float(out[0])
    return out


def sphere_area(p: int) -> float:
    """Surface area s_p of the unit sphere S^p in R^(p+1); s_0 = 2."""
    p = int(p)
    if p < 0:
        raise ValueError("sphere index must be >= 0")
    return 2.0 * math.pi ** ((p + 1) / 2.0) / math.gamma((p + 1) / 2.0)


def ball_volume(p: int) -> float:
    """Volume b_p of the unit ball in R^p, with the convention b_0 = 1."""
    p = int(p)
    if p < 0:
        raise ValueError("ball index must be >= 0")
    if p == 0:
        return 1.0
    return sphere_area(p - 1) / p


def riesz_constant(d: int) -> float:
    """Normalization c_d = 1 / (s_{d-1} max{1, d-2}) of the Riesz measure.

    c_d * (distributional Laplacian) of a subharmonic function is its Riesz
    measure; for d = 2 this is 1/(2 pi), for d = 3, 1/(4 pi).
    """
    d = check_dimension(d)
    return 1.0 / (sphere_area(d - 1) * max(1, d - 2))
