"""Backend selection for the hot kernels.

The compiled Cython core is preferred when present; the pure-numpy
fallback implements identical algorithms with identical random-number
consumption, so results are bit-identical across backends. Set
POTBAL_BACKEND=pure to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import pure

_forced = os.environ.get("POTBAL_BACKEND", "").strip().lower()
if _forced == "pure":
    _fast = None
else:
    try:
        from . import _fast  # type: ignore
    except ImportError:
        _fast = None

HAVE_FAST = _fast is not None
BACKEND = "compiled" if HAVE_FAST else "pure"

BALL, ANNULUS, HALF_SPACE, BALL_UNION = (
    pure.BALL, pure.ANNULUS, pure.HALF_SPACE, pure.BALL_UNION)

_EMPTY = np.empty((0, 1))


def domain_descriptor(domain):
    """Map a geometry.Domain to the flat backend descriptor."""
    d = domain.d
    p = domain.params
    if domain.kind == "ball":
        vec = np.array([*p["center"], p["radius"]], float)
        return BALL, vec, _EMPTY, np.empty(0)
    if domain.kind == "annulus":
        vec = np.array([*p["center"], p["r_in"], p["r_out"]], float)
        return ANNULUS, vec, _EMPTY, np.empty(0)
    if domain.kind == "half_space":
        vec = np.array([*p["normal"], p["offset"]], float)
        return HALF_SPACE, vec, _EMPTY, np.empty(0)
    if domain.kind == "ball_union":
        return (BALL_UNION, np.empty(0),
                np.ascontiguousarray(p["centers"], float),
                np.ascontiguousarray(p["radii"], float))
    raise ValueError(
        f"domain kind {domain.kind!r} has no accelerated descriptor; "
        "use the grid solver for implicit regions")


def wos_exit(desc, starts, eps, max_steps, rng):
    impl = _fast if HAVE_FAST else pure
    return impl.wos_exit(desc[0], desc[1], desc[2], desc[3],
                         starts, eps, max_steps, rng)


def sor_solve(u, unknown, omega, tol, max_iter):
    impl = _fast if HAVE_FAST else pure
    return impl.sor_solve(u, unknown, omega, tol, max_iter)


def signed_distance(desc, pts):
    return pure.signed_distance(desc[0], desc[1], desc[2], desc[3], pts)


def project_boundary(desc, pts):
    return pure.project_boundary(desc[0], desc[1], desc[2], desc[3], pts)
