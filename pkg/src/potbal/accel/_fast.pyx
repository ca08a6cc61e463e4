# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled backend for the hot kernels.

Mirrors accel.pure routine by routine. Random numbers and trig tables are
produced by the same numpy calls in the same order as the pure backend,
and the remaining per-walker / per-cell arithmetic reproduces the numpy
expression trees operation for operation, so both backends emit
bit-identical results for identical seeds.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs, sqrt

cnp.import_array()

BALL, ANNULUS, HALF_SPACE, BALL_UNION = 0, 1, 2, 3


cdef inline double _sd_point(int code, double[::1] vec,
                             double[:, ::1] centers, double[::1] radii,
                             double* x, int d) nogil:
    cdef double acc = 0.0, rho, best, gap
    cdef int k, m, i
    if code == 0:  # ball
        for k in range(d):
            acc += (x[k] - vec[k]) * (x[k] - vec[k])
        return vec[d] - sqrt(acc)
    if code == 1:  # annulus
        for k in range(d):
            acc += (x[k] - vec[k]) * (x[k] - vec[k])
        rho = sqrt(acc)
        if rho - vec[d] < vec[d + 1] - rho:
            return rho - vec[d]
        return vec[d + 1] - rho
    if code == 2:  # half space
        for k in range(d):
            acc += x[k] * vec[k]
        return vec[d] - acc
    # ball union: conservative max over member gaps
    m = centers.shape[0]
    best = -INFINITY
    for i in range(m):
        acc = 0.0
        for k in range(d):
            acc += (x[k] - centers[i, k]) * (x[k] - centers[i, k])
        gap = radii[i] - sqrt(acc)
        if gap > best:
            best = gap
    return best


cdef void _project_point(int code, double[::1] vec, double[:, ::1] centers,
                         double[::1] radii, double* x, int d,
                         double* out) nogil:
    cdef double acc = 0.0, rho, sd, target, best_pen, best_dist, cd, gap
    cdef int k, m, i, j, best, best_any
    cdef bint interior
    if code == 0:
        # mirror the numpy order c + (R * v) / rho bit for bit
        for k in range(d):
            acc += (x[k] - vec[k]) * (x[k] - vec[k])
        rho = sqrt(acc)
        if rho > 0:
            for k in range(d):
                out[k] = vec[k] + (vec[d] * (x[k] - vec[k])) / rho
        else:
            for k in range(d):
                out[k] = vec[k]
            out[0] = vec[0] + vec[d]
        return
    if code == 1:
        for k in range(d):
            acc += (x[k] - vec[k]) * (x[k] - vec[k])
        rho = sqrt(acc)
        if rho - vec[d] < vec[d + 1] - rho:
            target = vec[d]
        else:
            target = vec[d + 1]
        for k in range(d):
            out[k] = vec[k] + (target * (x[k] - vec[k])) / rho
        return
    if code == 2:
        acc = 0.0
        for k in range(d):
            acc += x[k] * vec[k]
        sd = vec[d] - acc
        for k in range(d):
            out[k] = x[k] + sd * vec[k]
        return
    # ball union: radial candidates, prefer ones outside all other balls
    m = centers.shape[0]
    best = -1
    best_any = -1
    best_pen = INFINITY
    best_dist = INFINITY
    cdef double cand[3]
    for i in range(m):
        acc = 0.0
        for k in range(d):
            acc += (x[k] - centers[i, k]) * (x[k] - centers[i, k])
        rho = sqrt(acc)
        if rho > 0:
            for k in range(d):
                cand[k] = centers[i, k] + (radii[i] / rho) * (x[k] - centers[i, k])
        else:
            # numpy path collapses the zero direction to the center
            for k in range(d):
                cand[k] = centers[i, k]
        cd = fabs(rho - radii[i])
        interior = False
        for j in range(m):
            acc = 0.0
            for k in range(d):
                acc += (cand[k] - centers[j, k]) * (cand[k] - centers[j, k])
            gap = radii[j] - sqrt(acc)
            if gap > 1e-9:
                interior = True
                break
        if cd < best_dist:
            best_dist = cd
            best_any = i
        if (not interior) and cd < best_pen:
            best_pen = cd
            best = i
    if best < 0:
        best = best_any
    i = best
    acc = 0.0
    for k in range(d):
        acc += (x[k] - centers[i, k]) * (x[k] - centers[i, k])
    rho = sqrt(acc)
    if rho > 0:
        for k in range(d):
            out[k] = centers[i, k] + (radii[i] / rho) * (x[k] - centers[i, k])
    else:
        for k in range(d):
            out[k] = centers[i, k]


def signed_distance(code, vec, centers, radii, pts):
    pts_arr = np.ascontiguousarray(np.atleast_2d(np.asarray(pts, float)))
    cdef double[:, ::1] p = pts_arr
    cdef double[::1] v = np.ascontiguousarray(np.asarray(vec, float))
    cdef double[:, ::1] c = np.ascontiguousarray(np.atleast_2d(
        np.asarray(centers, float)))
    cdef double[::1] r = np.ascontiguousarray(np.asarray(radii, float))
    cdef int n = p.shape[0], d = p.shape[1], i
    cdef int cc = code
    out = np.empty(n)
    cdef double[::1] o = out
    for i in range(n):
        o[i] = _sd_point(cc, v, c, r, &p[i, 0], d)
    return out


def project_boundary(code, vec, centers, radii, pts):
    pts_arr = np.ascontiguousarray(np.atleast_2d(np.asarray(pts, float)))
    cdef double[:, ::1] p = pts_arr
    cdef double[::1] v = np.ascontiguousarray(np.asarray(vec, float))
    cdef double[:, ::1] c = np.ascontiguousarray(np.atleast_2d(
        np.asarray(centers, float)))
    cdef double[::1] r = np.ascontiguousarray(np.asarray(radii, float))
    cdef int n = p.shape[0], d = p.shape[1], i
    cdef int cc = code
    out = np.empty((n, d))
    cdef double[:, ::1] o = out
    for i in range(n):
        _project_point(cc, v, c, r, &p[i, 0], d, &o[i, 0])
    return out


def wos_exit(code, vec, centers, radii, starts, eps, max_steps, rng):
    """Walk-on-spheres paths; see accel.pure.wos_exit for the contract."""
    pos_arr = np.atleast_2d(np.asarray(starts, float)).copy()
    pos_arr = np.ascontiguousarray(pos_arr)
    cdef double[:, ::1] pos = pos_arr
    cdef double[::1] v = np.ascontiguousarray(np.asarray(vec, float))
    cdef double[:, ::1] cen = np.ascontiguousarray(np.atleast_2d(
        np.asarray(centers, float)))
    cdef double[::1] rad = np.ascontiguousarray(np.asarray(radii, float))
    cdef int n = pos.shape[0], d = pos.shape[1]
    cdef int cc = code
    cdef double epsv = eps
    exits_arr = np.empty_like(pos_arr)
    steps_arr = np.zeros(n, dtype=np.int64)
    cdef double[:, ::1] exits = exits_arr
    cdef cnp.int64_t[::1] steps = steps_arr
    alive_arr = np.arange(n, dtype=np.int64)
    cdef cnp.int64_t[::1] alive = alive_arr
    cdef int n_alive = n, it, i, k, w, m
    cdef double sd_i, cz_i, s_i
    sd_buf = np.empty(n)
    cdef double[::1] sd = sd_buf
    cdef double[::1] u1
    cdef double[::1] cs
    cdef double[::1] sn
    for it in range(max_steps):
        # distances; finish walkers inside the eps shell
        m = 0
        for i in range(n_alive):
            w = alive[i]
            sd_i = _sd_point(cc, v, cen, rad, &pos[w, 0], d)
            if sd_i < epsv:
                _project_point(cc, v, cen, rad, &pos[w, 0], d, &exits[w, 0])
            else:
                alive[m] = w
                sd[m] = sd_i
                m += 1
        n_alive = m
        if n_alive == 0:
            return exits_arr, steps_arr
        # jumps: identical RNG consumption as the pure backend
        if d == 1:
            u1 = rng.random(n_alive)
            for i in range(n_alive):
                w = alive[i]
                if u1[i] < 0.5:
                    pos[w, 0] = pos[w, 0] + (-1.0) * sd[i]
                else:
                    pos[w, 0] = pos[w, 0] + 1.0 * sd[i]
                steps[w] += 1
        elif d == 2:
            theta = 2.0 * np.pi * rng.random(n_alive)
            cs = np.cos(theta)
            sn = np.sin(theta)
            for i in range(n_alive):
                w = alive[i]
                pos[w, 0] = pos[w, 0] + sd[i] * cs[i]
                pos[w, 1] = pos[w, 1] + sd[i] * sn[i]
                steps[w] += 1
        else:
            cz_arr = 2.0 * rng.random(n_alive) - 1.0
            phi = 2.0 * np.pi * rng.random(n_alive)
            cs = np.cos(phi)
            sn = np.sin(phi)
            u1 = cz_arr
            for i in range(n_alive):
                w = alive[i]
                cz_i = u1[i]
                s_i = sqrt(1.0 - cz_i * cz_i)
                pos[w, 0] = pos[w, 0] + sd[i] * (s_i * cs[i])
                pos[w, 1] = pos[w, 1] + sd[i] * (s_i * sn[i])
                pos[w, 2] = pos[w, 2] + sd[i] * cz_i
                steps[w] += 1
    raise RuntimeError(
        f"walk-on-spheres: {n_alive} walkers not terminated "
        f"after {max_steps} steps")


def _color_indices(unknown):
    idx = np.nonzero(unknown)
    parity = np.zeros(idx[0].shape, dtype=np.int64)
    for ax in idx:
        parity = parity + ax
    out = []
    for p in (0, 1):
        sel = (parity % 2) == p
        out.append(tuple(np.ascontiguousarray(ax[sel]) for ax in idx))
    return out


def sor_solve(u, unknown, omega, tol, max_iter):
    """Red-black SOR, same contract and arithmetic as accel.pure.sor_solve."""
    u_arr = np.ascontiguousarray(np.array(u, dtype=float))
    unknown = np.asarray(unknown, bool)
    if u_arr.ndim not in (2, 3):
        raise ValueError("sor_solve supports 2- and 3-d grids")
    edge = np.zeros_like(unknown)
    for ax in range(u_arr.ndim):
        sl = [slice(None)] * u_arr.ndim
        sl[ax] = 0
        edge[tuple(sl)] = True
        sl[ax] = -1
        edge[tuple(sl)] = True
    if np.any(unknown & edge):
        raise ValueError("unknown cells must not touch the grid edge")
    if not unknown.any():
        return u_arr, 0.0, 0
    colors = _color_indices(unknown)
    if u_arr.ndim == 2:
        return _sor2d(u_arr, colors, omega, tol, max_iter)
    return _sor3d(u_arr, colors, omega, tol, max_iter)


cdef _sor2d(cnp.ndarray[cnp.float64_t, ndim=2] u_arr, colors,
            double omega, double tol, int max_iter):
    cdef double[:, ::1] u = u_arr
    cdef cnp.int64_t[::1] ri = colors[0][0]
    cdef cnp.int64_t[::1] rj = colors[0][1]
    cdef cnp.int64_t[::1] bi = colors[1][0]
    cdef cnp.int64_t[::1] bj = colors[1][1]
    cdef double inv = 0.25
    cdef double residual = INFINITY, nb, ui, r
    cdef int it, t
    cdef Py_ssize_t nr = ri.shape[0], nb_n = bi.shape[0], i, j, c
    for it in range(1, max_iter + 1):
        for c in range(nr):
            i = ri[c]; j = rj[c]
            nb = (u[i - 1, j] + u[i + 1, j]) + (u[i, j - 1] + u[i, j + 1])
            ui = u[i, j]
            u[i, j] = ui + omega * (inv * nb - ui)
        for c in range(nb_n):
            i = bi[c]; j = bj[c]
            nb = (u[i - 1, j] + u[i + 1, j]) + (u[i, j - 1] + u[i, j + 1])
            ui = u[i, j]
            u[i, j] = ui + omega * (inv * nb - ui)
        residual = 0.0
        for c in range(nr):
            i = ri[c]; j = rj[c]
            nb = (u[i - 1, j] + u[i + 1, j]) + (u[i, j - 1] + u[i, j + 1])
            r = fabs(inv * nb - u[i, j])
            if r > residual:
                residual = r
        for c in range(nb_n):
            i = bi[c]; j = bj[c]
            nb = (u[i - 1, j] + u[i + 1, j]) + (u[i, j - 1] + u[i, j + 1])
            r = fabs(inv * nb - u[i, j])
            if r > residual:
                residual = r
        if residual < tol:
            return u_arr, residual, it
    return u_arr, residual, max_iter


cdef _sor3d(cnp.ndarray[cnp.float64_t, ndim=3] u_arr, colors,
            double omega, double tol, int max_iter):
    cdef double[:, :, ::1] u = u_arr
    cdef cnp.int64_t[::1] ri = colors[0][0]
    cdef cnp.int64_t[::1] rj = colors[0][1]
    cdef cnp.int64_t[::1] rk = colors[0][2]
    cdef cnp.int64_t[::1] bi = colors[1][0]
    cdef cnp.int64_t[::1] bj = colors[1][1]
    cdef cnp.int64_t[::1] bk = colors[1][2]
    cdef double inv = 1.0 / 6.0
    cdef double residual = INFINITY, nb, ui, r
    cdef int it
    cdef Py_ssize_t nr = ri.shape[0], nb_n = bi.shape[0], i, j, k, c
    for it in range(1, max_iter + 1):
        for c in range(nr):
            i = ri[c]; j = rj[c]; k = rk[c]
            nb = ((u[i - 1, j, k] + u[i + 1, j, k])
                  + (u[i, j - 1, k] + u[i, j + 1, k])
                  + (u[i, j, k - 1] + u[i, j, k + 1]))
            ui = u[i, j, k]
            u[i, j, k] = ui + omega * (inv * nb - ui)
        for c in range(nb_n):
            i = bi[c]; j = bj[c]; k = bk[c]
            nb = ((u[i - 1, j, k] + u[i + 1, j, k])
                  + (u[i, j - 1, k] + u[i, j + 1, k])
                  + (u[i, j, k - 1] + u[i, j, k + 1]))
            ui = u[i, j, k]
            u[i, j, k] = ui + omega * (inv * nb - ui)
        residual = 0.0
        for c in range(nr):
            i = ri[c]; j = rj[c]; k = rk[c]
            nb = ((u[i - 1, j, k] + u[i + 1, j, k])
                  + (u[i, j - 1, k] + u[i, j + 1, k])
                  + (u[i, j, k - 1] + u[i, j, k + 1]))
            r = fabs(inv * nb - u[i, j, k])
            if r > residual:
                residual = r
        for c in range(nb_n):
            i = bi[c]; j = bj[c]; k = bk[c]
            nb = ((u[i - 1, j, k] + u[i + 1, j, k])
                  + (u[i, j - 1, k] + u[i, j + 1, k])
                  + (u[i, j, k - 1] + u[i, j, k + 1]))
            r = fabs(inv * nb - u[i, j, k])
            if r > residual:
                residual = r
        if residual < tol:
            return u_arr, residual, it
    return u_arr, residual, max_iter
