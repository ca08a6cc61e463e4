"""Acceptance suite: one criterion per test, one pass/fail line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines. Every
tolerance is pinned here; desk scale throughout (unit disc, grids at or
below 513^2, walk-on-spheres at 1e5 paths).
"""

import os
import subprocess
import sys

import numpy as np
import pytest

from potbal.balayage import affine_margin, crit_consistency, embedding_check, \
    generate_family
from potbal.fields import Grid, ScalarField
from potbal.geometry import CompactSet, Domain
from potbal.gluing import GluingConfig, glue_with_green, \
    potential_approx_sequence
from potbal.green import GreenSpec, green, green_values
from potbal.kernels import ball_volume, k_q, riesz_constant
from potbal.measures import DiscreteMeasure, counting_measure, riesz_measure
from potbal.potentials import classify_potential, duality_forward, \
    duality_inverse, poisson_jensen_check, potential_values
from potbal.zeros import HoloFunction, ZeroSet, crit3_roundtrip, \
    poincare_lelong_check, zero_margin_check


def report(num, ok, detail):
    line = f"ACCEPTANCE {num:>2} {'PASS' if ok else 'FAIL'}: {detail}"
    print("\n" + line)
    return ok


@pytest.fixture(scope="module")
def disc():
    return Domain.ball([0.0, 0.0], 1.0)


@pytest.fixture(scope="module")
def cfg96(disc):
    S = CompactSet.closed_ball([0.0, 0.0], 0.1)
    return GluingConfig(S, (0.0, 0.0), 0.05, -1.0, 1.0, disc, h=1.0 / 96.0)


@pytest.fixture(scope="module")
def cfg_zero(disc):
    # ceiling b+ = 3 admits the unclipped ambient Green member, which
    # carries the harmonic-sum rate
    S = CompactSet.closed_ball([0.0, 0.0], 0.1)
    return GluingConfig(S, (0.0, 0.0), 0.05, -1.0, 3.0, disc, h=1.0 / 96.0)


def test_criterion_1_kernels_and_constants():
    rng = np.random.default_rng(101)
    qs = np.where(rng.random(10000) < 0.1, 0.0,
                  rng.uniform(-5, 5, 10000))
    qs[np.abs(qs) < 1e-3] = np.sign(qs[np.abs(qs) < 1e-3] + 0.5) * 1e-3
    t1 = rng.uniform(1e-3, 1e3, 10000)
    t2 = t1 * rng.uniform(1.01, 3.0, 10000)
    mono = all(k_q(q, a) < k_q(q, b) for q, a, b in zip(qs, t1, t2))
    exact = (riesz_constant(2) == 1.0 / (2 * np.pi)
             and riesz_constant(3) == 1.0 / (4 * np.pi)
             and ball_volume(0) == 1.0 and ball_volume(1) == 2.0
             and ball_volume(2) == np.pi)
    ok = mono and exact
    assert report(1, ok, f"k_q monotone on 10^4 pairs: {mono}; "
                         f"c2, c3, b0, b1, b2 exact: {exact}")


def test_criterion_2_green_oracle(disc):
    worst_rel = 0.0
    se_ok = True
    for k, rad in enumerate((0.1, 0.3, 0.5, 0.7, 0.9)):
        spec = GreenSpec(disc, (0, 0), "wos", samples=100000, seed=500 + k)
        est = green(spec, [rad, 0.0])
        truth = np.log(1.0 / rad)
        err = abs(est.value - truth)
        worst_rel = max(worst_rel, err / truth)
        # absolute floor guards the zero-variance estimator (boundary data
        # vanishes identically for the centered pole)
        se_ok = se_ok and err <= 3 * est.std_error + 1e-12
    spec = GreenSpec(disc, (0, 0))
    outside = np.array([[1.5, 0.0], [0.0, -2.0], [1.2, 1.2]])
    zero_outside = bool(np.all(green_values(spec, outside) == 0.0))
    ok = worst_rel < 0.02 and se_ok and zero_outside
    assert report(2, ok, f"WoS vs ln(1/|x|) at 5 radii: rel err "
                         f"{worst_rel:.2e} < 2%, within 3 SE: "
                         f"{se_ok}; zero outside: {zero_outside}")


def _random_cubic(rng):
    while True:
        zs = (rng.uniform(-0.7, 0.7, 3) + 1j * rng.uniform(-0.7, 0.7, 3))
        if np.all(np.abs(np.abs(zs) - 0.8) > 0.05) and \
                np.abs(np.prod(-zs)) > 1e-3:
            return zs


def test_criterion_3_poisson_jensen():
    rng = np.random.default_rng(77)
    worst_analytic = 0.0
    worst_quad = 0.0
    for _ in range(20):
        zs = _random_cubic(rng)

        def u(p, zs=zs):
            z = np.atleast_2d(p)[:, 0] + 1j * np.atleast_2d(p)[:, 1]
            with np.errstate(divide="ignore"):
                return np.sum(np.log(np.abs(z[:, None] - zs)), axis=1)

        Du = counting_measure([((z.real, z.imag), 1) for z in zs])
        mu_analytic = DiscreteMeasure.uniform_circle([0, 0], 0.8, 1024)
        out = poisson_jensen_check(u, Du, mu_analytic, (0, 0))
        worst_analytic = max(worst_analytic, out["residual"])
        mu_quad = DiscreteMeasure(2, mu_analytic.points, mu_analytic.masses)
        out = poisson_jensen_check(u, Du, mu_quad, (0, 0))
        worst_quad = max(worst_quad, out["residual"])
    ok = worst_analytic < 1e-3 and worst_quad < 1e-2
    assert report(3, ok, f"PJ residual over 20 cubics: analytic "
                         f"{worst_analytic:.2e} < 1e-3, quadrature "
                         f"{worst_quad:.2e} < 1e-2")


def test_criterion_4_poincare_lelong():
    h = 1.0 / 256.0
    grid = Grid((-1 + h / 3, -1 + h / 2.7), h, (513, 513))
    rng = np.random.default_rng(13)
    worst = 0.0
    for deg in (2, 3, 5):
        while True:
            zs = (rng.uniform(-0.6, 0.6, deg)
                  + 1j * rng.uniform(-0.6, 0.6, deg))
            d2 = np.abs(zs[:, None] - zs[None, :])
            np.fill_diagonal(d2, np.inf)
            if d2.min() > 12 * h:
                break
        f = HoloFunction.polynomial(np.poly(zs))
        rep = poincare_lelong_check(f, grid)
        for z in rep["per_zero"]:
            worst = max(worst, z["error"] / z["multiplicity"])
    ok = worst < 0.05
    assert report(4, ok, f"Riesz mass vs multiplicity at h=1/256, degrees "
                         f"2/3/5: worst per-zero rel error {worst:.3f} < 5%")


def test_criterion_5_duality_round_trip(disc):
    rng = np.random.default_rng(42)
    n = 256
    h = 2.0 / n
    g = Grid((-1 + h / 3, -1 + h / 2.7), h, (n + 1, n + 1))
    worst_mass = 0.0
    worst_coeff = 0.0
    for _ in range(10):
        ang = rng.uniform(0, 2 * np.pi, 3)
        rad = rng.uniform(0.3, 0.7, 3)
        pts = np.stack([rad * np.cos(ang), rad * np.sin(ang)], -1)
        mu = DiscreteMeasure(2, pts, rng.dirichlet(np.ones(3)))
        V = ScalarField(g, potential_values(
            duality_forward(mu, (0, 0)), g.points()).reshape(g.shape))
        res = duality_inverse(V, (0, 0))
        worst_mass = max(worst_mass, abs(res.measure.total_mass() - 1.0))
        worst_coeff = max(worst_coeff, abs(res.dirac_coefficient))
    g2 = Grid((-1.3 + 0.001, -1.3 + 0.0013), 2.6 / 330, (331, 331))
    spec = GreenSpec(disc, (0, 0))
    V = ScalarField(g2, green_values(spec, g2.points()).reshape(g2.shape))
    res = duality_inverse(V, (0, 0))
    dist = np.linalg.norm(g2.points(), axis=1).reshape(g2.shape)
    ring_mass = res.measure.cell_masses[np.abs(dist - 1.0) < 3 * g2.h].sum()
    green_ok = (abs(res.measure.total_mass() - 1.0) <= 0.02
                and abs(ring_mass - 1.0) <= 0.02
                and abs(res.dirac_coefficient) <= 0.05)
    ok = worst_mass <= 0.02 and worst_coeff <= 0.05 and green_ok
    assert report(5, ok, f"10 atom measures: mass err {worst_mass:.3f} "
                         f"<= 2%, dirac {worst_coeff:.3f} <= 0.05; g_disc "
                         f"ring mass {ring_mass:.3f}, dirac "
                         f"{res.dirac_coefficient:.3f}")


def _random_glue_config(disc, rng, h=1.0 / 128.0):
    while True:
        center = rng.uniform(-0.25, 0.25, 2)
        rad = rng.uniform(0.05, 0.1)
        r = rng.uniform(0.035, 0.055)
        if 4 * r < 1.0 - (np.linalg.norm(center) + rad) - 0.05:
            return GluingConfig(CompactSet.closed_ball(center, rad),
                                tuple(center), r, -1.0, 1.0, disc, h=h)


def test_criterion_6_gluing_certificates(disc):
    rng = np.random.default_rng(7)
    all_pass = True
    details = []
    for k in range(20):
        cfg = _random_glue_config(disc, rng)
        spec = GreenSpec(disc, cfg.o, "closed_form")
        a = rng.uniform(0.15, 0.3)
        c = rng.uniform(0.02, 0.08)
        vals = np.maximum(0.0, a * green_values(spec, cfg.grid.points()) - c)
        v = ScalarField(cfg.grid, vals.reshape(cfg.grid.shape))
        res = glue_with_green(v, cfg)
        clause_ok = all(res.certificate[c]["status"] == "pass"
                        for c in ("core_harmonic", "identity_region", "band_bound", "core_bound", "pole_ratio"))
        sub_ok = res.certificate["subharmonic"]["violations"] == 0
        if not (clause_ok and sub_ok):
            all_pass = False
            details.append((k, {c: res.certificate[c]["status"]
                                for c in res.certificate}))
    # B recomputation invariance across distinct inputs in the class
    Bs = []
    for a, c in [(0.3, 0.05), (0.2, 0.03), (0.28, 0.1), (0.17, 0.02),
                 (0.24, 0.06)]:
        S = CompactSet.closed_ball([0.0, 0.0], 0.05)
        cfg = GluingConfig(S, (0.0, 0.0), 0.05, -1.0, 1.0, disc,
                           h=1.0 / 128.0)
        spec = GreenSpec(disc, (0, 0), "closed_form")

        def fn(p, a=a, c=c):
            return np.maximum(0.0, a * green_values(spec, p) - c)

        from potbal.gluing import glue_test_function

        res = glue_test_function(fn, cfg)
        Bs.append(res.constants["B"])
    b_invariant = len(set(Bs)) == 1
    ok = all_pass and b_invariant
    assert report(6, ok, f"20 random configs: all clauses pass = {all_pass}"
                         f"{details if details else ''}; B invariant across "
                         f"5 inputs: {b_invariant} (B={Bs[0]!r})")


def test_criterion_7_approximation_sequence(cfg96, disc):
    spec = GreenSpec(disc, (0, 0), "closed_form")

    def fn(p):
        return np.maximum(0.0, 0.25 * green_values(spec, p) - 0.04)

    out = potential_approx_sequence(fn, cfg96, 8, positive=True)
    B = out["B"]
    fields = out["fields"]
    mono = all(np.all(b.values - a.values >= 0.0)
               for a, b in zip(fields, fields[1:]))
    labels = [classify_potential(f, disc, (0, 0)).label for f in fields]
    classify_ok = all(lab in ("ASP1", "JP1") for lab in labels)
    band = (cfg96.dist_S < 4 * cfg96.r) & (cfg96.dist_o > 0.03)
    g_out = cfg96.outer_green_field()
    bound_ok = all(
        np.all(B * f.values[band] <= 1.0 + B * g_out.values[band]
               + 5 * cfg96.h * (1 + B))
        for f in fields)
    ok = mono and classify_ok and bound_ok
    assert report(7, ok, f"B V_k monotone at every cell (k<=8): {mono}; "
                         f"classifications {sorted(set(labels))}; band bound "
                         f"holds: {bound_ok}")


def test_criterion_8_embedding_dominance(cfg96, disc):
    fam = generate_family("JP1_har", cfg96, 64, seed=11)
    g_spec = GreenSpec(disc, (0, 0), "closed_form")
    pts = cfg96.grid.points()
    keep = (np.linalg.norm(pts, axis=1) > 0.02)
    gv = green_values(g_spec, pts[keep])
    tol = 5 * cfg96.h
    worst = -np.inf
    for m in fam.members:
        worst = max(worst, float((np.asarray(m(pts[keep])) - gv).max()))
    dominance_ok = worst <= tol
    band = cfg96.band(0, 4)
    band_pts = cfg96.grid.points()[band.ravel()]
    B_prime = float(green_values(g_spec, band_pts).max())
    band_ok = all(
        bool(np.all((vals := np.asarray(m(band_pts))) <= B_prime + tol)
             and np.all(vals >= -tol)) for m in fam.members)
    emb = embedding_check(cfg96, count=8, seed=3)
    ok = dominance_ok and band_ok and emb["verdict"] == "pass" \
        and len(fam.members) >= 64
    assert report(8, ok, f"{len(fam.members)} JP1-harmonic members: "
                         f"V <= g_D + tol (excess {worst:.2e}); band bounds "
                         f"{band_ok}; inclusion diagram "
                         f"{emb['verdict']}")


def _witnessed_triples(cfg, count=10):
    rng = np.random.default_rng(2024)
    pts = cfg.grid.points()
    z = pts[:, 0] + 1j * pts[:, 1]
    inside = np.atleast_1d(cfg.domain.contains(pts))
    triples = []
    for i in range(count):
        n_z = int(rng.integers(1, 3))
        zs = rng.uniform(-0.45, 0.45, n_z) + 1j * rng.uniform(-0.45, 0.45, n_z)
        with np.errstate(divide="ignore"):
            u_raw = np.sum(np.log(np.abs(z[:, None] - zs)), axis=1)
        kind = i % 2
        if kind == 0:
            h_vals = np.zeros(len(pts))
        else:
            coef = rng.normal(size=2) * 0.3
            h_vals = coef[0] * pts[:, 0] + coef[1] * (pts[:, 0]**2
                                                      - pts[:, 1]**2)
        M_vals = 0.6 * np.sum(pts**2, axis=1) + 0.5
        gap = (M_vals - u_raw - h_vals)[inside & np.isfinite(u_raw)]
        shift = gap.min() - 0.01
        u = ScalarField(cfg.grid, np.where(
            np.isfinite(u_raw), u_raw + shift, -np.inf).reshape(cfg.grid.shape))
        M = ScalarField(cfg.grid, M_vals.reshape(cfg.grid.shape))
        hw = ScalarField(cfg.grid, h_vals.reshape(cfg.grid.shape))
        triples.append((u, M, hw, "harmonic" if kind else "zero"))
    return triples


def test_criterion_9_balayage_forward_consistency(cfg96):
    bad = []
    for k, (u, M, hw, h_kind) in enumerate(_witnessed_triples(cfg96, 10)):
        versions = ["subharmonic"] if k % 2 else ["subharmonic", "harmonic"]
        for version in versions:
            rep = crit_consistency(u, M, cfg96, h=hw, count=5, seed=k,
                                   version=version)
            if not rep["witness"]["holds"]:
                bad.append((k, version, "witness"))
            if rep["verdict"] != "consistent":
                bad.append((k, version, rep["violated_statements"]))
    # mass-deficit counterexample: the s5 sweep over radii 0.9 -> 0.99
    pts = cfg96.grid.points()
    r = np.linalg.norm(pts, axis=1)
    u = ScalarField(cfg96.grid, (2 * np.log(r)).reshape(cfg96.grid.shape))
    M = ScalarField(cfg96.grid, np.log(r).reshape(cfg96.grid.shape))
    rep = crit_consistency(u, M, cfg96, count=6, seed=0)
    s5_flagged = "s5" in rep["violated_statements"]
    du, _ = riesz_measure(u)
    dM, _ = riesz_measure(M)
    from potbal.balayage import TestFunction, TestFamily
    members = []
    for rho in np.linspace(0.9, 0.99, 6):
        spec = GreenSpec(Domain.ball([0.0, 0.0], rho), (0.0, 0.0))
        members.append(TestFunction(
            lambda p, s=spec: green_values(s, p), label=f"g[{rho:.3f}]",
            param=float(rho)))
    fam = TestFamily(class_tag="G_o", members=members,
                     params=[m.param for m in members])
    off_pole = lambda p: np.linalg.norm(np.atleast_2d(p), axis=-1) > 1e-12
    sweep = affine_margin(du, dM, fam, region=off_pole)
    slope_ok = sweep.slope is not None and sweep.slope > 0.5
    ok = not bad and s5_flagged and slope_ok
    assert report(9, ok, f"10 witnessed triples consistent: {not bad} {bad};"
                         f" counterexample s5 flagged: {s5_flagged}, sweep "
                         f"slope over radii 0.9->0.99: "
                         f"{sweep.slope and round(sweep.slope, 3)} > 0.5")


def test_criterion_10_zero_set_dichotomy(cfg_zero):
    zero_field = ScalarField(cfg_zero.grid, np.zeros(cfg_zero.grid.shape))
    Z = ZeroSet([(complex(1 - 2.0**-k, 0), 1) for k in range(1, 13)])
    out = crit3_roundtrip(Z, zero_field, zero_field, cfg_zero, count=6,
                          seed=0)
    blaschke_ok = (out["z1"]["feasible"]
                   and out["z1"]["product_modulus_max"] <= 1 + 1e-6
                   and all(out[k]["verdict"] == "consistent"
                           for k in ("z2", "z3", "z4")))
    max_margin = max(out[k]["max_margin"] for k in ("z2", "z3", "z4"))
    fam = generate_family("sbh_plus0_r", cfg_zero, 6, seed=1)
    margins = {}
    for K in (50, 400):
        ZK = ZeroSet([(complex(1 - 1.0 / k, 0), 1) for k in range(1, K + 1)])
        rep = zero_margin_check(ZK, zero_field, zero_field, cfg_zero, fam,
                                "Z2")
        margins[K] = rep.max_margin
    growth = margins[400] - margins[50]
    growth_ok = growth >= 0.9 * np.log(400 / 50)
    ok = blaschke_ok and growth_ok and max_margin <= 3.0
    assert report(10, ok, f"Blaschke prefix: [z1] |f|<=1+1e-6 and [z2]-[z4] "
                          f"margins <= 3 (max {max_margin:.2f}): "
                          f"{blaschke_ok}; non-Blaschke [z3] growth "
                          f"{growth:.3f} >= 0.9 ln 8 = "
                          f"{0.9 * np.log(8):.3f}")


def test_criterion_11_determinism(tmp_path):
    cmds = [
        ["--seed", "5", "green", "--method", "wos", "--samples", "30000",
         "--pole", "0.3,0.2", "--point", "0.5,0"],
        ["--seed", "3", "--h", str(1 / 64), "zeros-check", "--variant", "Z3",
         "--zeros", "0.5,0.0,1;0.1,0.3,1", "--M", "zero", "--count", "4"],
    ]
    all_same = True
    for args in cmds:
        outputs = []
        for threads in ("1", "3", "1"):
            env = dict(os.environ, POTBAL_THREADS=threads)
            proc = subprocess.run(
                [sys.executable, "-m", "potbal.cli"] + args,
                capture_output=True, text=True, env=env)
            outputs.append(proc.stdout)
        all_same = all_same and outputs[0] == outputs[1] == outputs[2]
    assert report(11, all_same,
                  "byte-identical reports across repeated runs and thread "
                  f"counts: {all_same}")
