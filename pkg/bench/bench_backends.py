"""Benchmark: compiled core vs pure-numpy fallback on the hot kernels.

Runs walk-on-spheres path batches and red-black SOR sweeps through both
backends, verifies bit-identical outputs, and prints a throughput table.

    python bench/bench_backends.py [--quick]
"""

import argparse
import sys
import time

import numpy as np

from potbal import accel
from potbal.accel import pure
from potbal.geometry import Domain


def time_call(fn, repeat=3):
    best = np.inf
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_wos(backend, desc, n_paths, seed):
    start = [0.1, 0.1] if desc[0] == 3 else [0.2, 0.1]
    starts = np.tile(start, (n_paths, 1))

    def run():
        rng = np.random.default_rng(seed)
        return backend.wos_exit(desc[0], desc[1], desc[2], desc[3],
                                starts, 1e-4, 4000, rng)

    return time_call(run)


def bench_sor(backend, n, sweeps_tol, seed):
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(n, n))
    unknown = np.zeros((n, n), bool)
    unknown[1:-1, 1:-1] = True
    omega = 2.0 / (1.0 + np.sin(np.pi / n))

    def run():
        return backend.sor_solve(u, unknown, omega, sweeps_tol, 20000)

    return time_call(run)


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true",
                    help="smaller workloads")
    args = ap.parse_args(argv)

    if not accel.HAVE_FAST:
        print("compiled core not built: benchmarking the pure backend only")
    backends = [("pure", pure)]
    if accel.HAVE_FAST:
        backends.append(("compiled", accel._fast))

    n_paths = 20000 if args.quick else 100000
    n_grid = 128 if args.quick else 256

    disc = accel.domain_descriptor(Domain.ball([0.0, 0.0], 1.0))
    union = accel.domain_descriptor(Domain.ball_union(
        [[0.0, 0.0], [0.6, 0.0], [0.2, 0.5], [-0.4, 0.3]],
        [0.7, 0.55, 0.5, 0.45]))

    rows = []
    results = {}
    for label, backend in backends:
        t, out = bench_wos(backend, disc, n_paths, seed=7)
        results[("wos-disc", label)] = out
        rows.append((f"wos disc ({n_paths} paths)", label, t,
                     f"{n_paths / t:,.0f} paths/s"))
        t, out = bench_wos(backend, union, n_paths // 2, seed=7)
        results[("wos-union", label)] = out
        rows.append((f"wos 4-ball union ({n_paths // 2} paths)", label, t,
                     f"{n_paths // 2 / t:,.0f} paths/s"))
        t, out = bench_sor(backend, n_grid, 1e-9, seed=3)
        results[("sor", label)] = out
        rows.append((f"sor {n_grid}x{n_grid} to 1e-9", label, t,
                     f"{out[2] / t:,.0f} sweeps/s"))

    width = max(len(r[0]) for r in rows) + 2
    print(f"{'kernel':<{width}}{'backend':<10}{'best s':>10}  rate")
    for name, label, t, rate in rows:
        print(f"{name:<{width}}{label:<10}{t:>10.3f}  {rate}")

    if accel.HAVE_FAST:
        ok = True
        for key in ("wos-disc", "wos-union"):
            a, b = results[(key, "pure")], results[(key, "compiled")]
            ok &= np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
        a, b = results[("sor", "pure")], results[("sor", "compiled")]
        ok &= np.array_equal(a[0], b[0]) and a[1] == b[1] and a[2] == b[2]
        print(f"\nbit-identical outputs across backends: {ok}")
        for key in ("wos disc", "wos 4-ball union", "sor"):
            ts = [r[2] for r in rows if r[0].startswith(key)]
            if len(ts) == 2:
                print(f"speedup {key}: {ts[0] / ts[1]:.1f}x")
        return 0 if ok else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
