import numpy as np
import pytest

from potbal.fields import Grid, ScalarField
from potbal.geometry import CompactSet, Domain
from potbal.green import GreenSpec, green_values
from potbal.measures import DiscreteMeasure, counting_measure
from potbal.potentials import (Potential, classify_potential, duality_forward,
                               duality_inverse, jensen_measure_check,
                               poisson_jensen_check, potential_eval,
                               potential_lower_bound,
                               potential_lower_bound_dirac, potential_values)

LN2 = np.log(2.0)


def sample_grid(half=1.3, n=330):
    h = 2 * half / n
    return Grid((-half + h / 3, -half + h / 2.7), h, (n + 1, n + 1))


class TestPotentialEval:
    def test_unit_distance_dirac(self):
        P = Potential(DiscreteMeasure.dirac([0.3, 0.4]))
        assert potential_eval(P, [0.3, 1.4]) == pytest.approx(0.0, abs=1e-15)

    def test_circle_measure_against_oracle(self):
        # circle-potential oracle: ln max(|y|, R) for the unit circle
        tagged = DiscreteMeasure.uniform_circle([0, 0], 1.0, 1024)
        mu = DiscreteMeasure(2, tagged.points, tagged.masses)
        P = Potential(mu)  # untagged: honest quadrature
        for y, expect in [([0.5, 0.0], 0.0), ([0.0, 0.25], 0.0),
                          ([2.0, 0.0], LN2), ([0.0, -3.0], np.log(3.0))]:
            assert potential_eval(P, y) == pytest.approx(expect, abs=1e-9)

    def test_pole_subtraction_gives_green(self, unit_disc):
        mu = DiscreteMeasure.uniform_circle([0, 0], 1.0, 512)
        P = duality_forward(mu, (0, 0))
        spec = GreenSpec(unit_disc, (0, 0))
        for y in ([0.5, 0.0], [0.0, 0.9], [-0.3, 0.3]):
            assert potential_eval(P, y) == pytest.approx(
                float(green_values(spec, [y])[0]), abs=1e-12)

    def test_dirac_at_own_pole_is_zero_potential(self):
        mu = DiscreteMeasure.dirac([0.2, 0.2])
        P = duality_forward(mu, (0.2, 0.2))
        assert potential_eval(P, [0.7, -0.1]) == pytest.approx(0.0, abs=1e-15)

    def test_affinity(self, rng):
        pts1 = rng.uniform(-0.5, 0.5, (3, 2))
        pts2 = rng.uniform(-0.5, 0.5, (4, 2))
        m1 = DiscreteMeasure(2, pts1, rng.dirichlet(np.ones(3)))
        m2 = DiscreteMeasure(2, pts2, rng.dirichlet(np.ones(4)))
        t = 0.3
        mix = m1.scaled(t) + m2.scaled(1 - t)
        y = np.array([[1.7, 0.4], [0.9, -1.1]])
        lhs = potential_values(duality_forward(mix, (0, 0)), y)
        rhs = (t * potential_values(duality_forward(m1, (0, 0)), y)
               + (1 - t) * potential_values(duality_forward(m2, (0, 0)), y))
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_density_cell_self_average(self):
        g = Grid((-0.5, -0.5), 1 / 64, (65, 65))
        dens = ScalarField.constant(g, 1.0)
        mu = DiscreteMeasure.from_density(dens)
        P = Potential(mu)
        # finite at an interior point despite the kernel singularity
        assert np.isfinite(potential_eval(P, [0.0, 0.0]))


def test_potential_subharmonic_off_support_super_on_density():
    from potbal.fields import subharmonicity_test

    g = Grid((-1 + 0.0007, -1 + 0.00093), 2 / 128, (129, 129))
    r = np.linalg.norm(g.points(), axis=1).reshape(g.shape)
    dens_vals = np.where(r < 0.3, 1.0 / (np.pi * 0.09), 0.0)
    mu = DiscreteMeasure.from_density(ScalarField(g, dens_vals))
    P = Potential(mu)
    fld = ScalarField(g, potential_values(P, g.points()).reshape(g.shape))
    # subharmonic away from the support
    rep = subharmonicity_test(fld, [3 * g.h],
                              cells_mask=(r > 0.3 + 2 * g.h) & (r < 0.85))
    assert rep.violations == 0
    # the negated potential fails the sub-mean test inside the density:
    # at radius ~10h the superharmonic deficit (rho^2 Lap/4) clears the
    # O(h^2)-scaled stencil tolerance
    neg = ScalarField(g, -fld.values)
    rep2 = subharmonicity_test(neg, [0.15], cells_mask=r < 0.12)
    assert rep2.violations == rep2.tested > 0


class TestLowerBounds:
    def test_dirac_unit_distance(self):
        mu = DiscreteMeasure.dirac([2.0, 0.0])
        L = CompactSet.closed_ball([0, 0], 1.0)
        assert potential_lower_bound(mu, L) == pytest.approx(0.0, abs=1e-12)

    def test_mass_two_distance_e(self):
        mu = DiscreteMeasure.dirac([np.e + 1.0, 0.0], 2.0)
        L = CompactSet.closed_ball([0, 0], 1.0)
        assert potential_lower_bound(mu, L) == pytest.approx(2.0, rel=1e-9)

    def test_touching_support_minus_inf(self):
        mu = DiscreteMeasure.dirac([0.5, 0.0])
        L = CompactSet.closed_ball([0, 0], 1.0)
        assert potential_lower_bound(mu, L) == -np.inf

    def test_dirac_variant_circle_case(self):
        mu = DiscreteMeasure.uniform_circle([0, 0], 1.0, 512)
        L = CompactSet.closed_ball([0, 0], 0.5)
        bound = potential_lower_bound_dirac(mu, (0, 0), L)
        assert bound == pytest.approx(0.0, abs=1e-12)
        # actual infimum of pt_{mu - delta_0} on L is ln 2 > 0
        P = duality_forward(mu, (0, 0))
        ang = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        rim = 0.5 * np.stack([np.cos(ang), np.sin(ang)], -1)
        assert potential_values(P, rim).min() >= bound - 1e-12

    def test_randomized_certified_bound(self, rng):
        for _ in range(100):
            pts = rng.uniform(-1, 1, (int(rng.integers(1, 5)), 2))
            mu = DiscreteMeasure(2, pts, rng.uniform(0.1, 2.0, len(pts)))
            o = rng.uniform(-0.3, 0.3, 2)
            Lc = rng.uniform(-0.5, 0.5, 2)
            L = CompactSet.closed_ball(Lc, rng.uniform(0.1, 0.5))
            bound = potential_lower_bound_dirac(mu, o, L)
            ang = np.linspace(0, 2 * np.pi, 48, endpoint=False)
            rad = rng.uniform(0, 1, 16)[:, None, None]
            sample = Lc + rad * (L.balls[1][0]
                                 * np.stack([np.cos(ang), np.sin(ang)], -1))
            sample = sample.reshape(-1, 2)
            keep = np.linalg.norm(sample - o, axis=1) > 1e-9
            vals = potential_values(duality_forward(mu, o), sample[keep])
            assert vals.min() >= bound - 1e-9


class TestDuality:
    def test_g_disc_inverse(self, unit_disc):
        g = sample_grid()
        spec = GreenSpec(unit_disc, (0, 0))
        V = ScalarField(g, green_values(spec, g.points()).reshape(g.shape))
        res = duality_inverse(V, (0, 0))
        assert res.measure.total_mass() == pytest.approx(1.0, abs=0.02)
        assert abs(res.dirac_coefficient) <= 0.05
        dist = np.linalg.norm(g.points(), axis=1).reshape(g.shape)
        near_circle = np.abs(dist - 1.0) < 3 * g.h
        assert res.measure.cell_masses[near_circle].sum() == \
            pytest.approx(1.0, abs=0.02)

    def test_zero_field_gives_dirac(self):
        g = sample_grid(n=200)
        V = ScalarField.constant(g, 0.0)
        res = duality_inverse(V, (0, 0))
        assert abs(res.measure.total_mass()) < 1e-9
        assert res.dirac_coefficient == pytest.approx(1.0, abs=1e-9)

    def test_three_atom_round_trip(self, rng):
        ang = rng.uniform(0, 2 * np.pi, 3)
        rad = rng.uniform(0.3, 0.7, 3)
        pts = np.stack([rad * np.cos(ang), rad * np.sin(ang)], -1)
        mu = DiscreteMeasure(2, pts, rng.dirichlet(np.ones(3)))
        g = sample_grid(half=1.0, n=256)
        V = ScalarField(g, potential_values(
            duality_forward(mu, (0, 0)), g.points()).reshape(g.shape))
        res = duality_inverse(V, (0, 0))
        assert res.measure.total_mass() == pytest.approx(1.0, abs=0.02)
        assert abs(res.dirac_coefficient) <= 0.05

    def test_round_trip_mass_conservation(self):
        mu = DiscreteMeasure(2, [[0.5, 0.0], [0.0, 0.55], [-0.45, -0.2]],
                             [0.25, 0.35, 0.4])
        g = sample_grid(half=1.0, n=256)
        V = ScalarField(g, potential_values(
            duality_forward(mu, (0, 0)), g.points()).reshape(g.shape))
        res = duality_inverse(V, (0, 0))
        total = res.measure.total_mass() + res.dirac_coefficient
        assert total == pytest.approx(1.0, abs=0.03)


@pytest.fixture(scope="module")
def classify_setup():
    ambient = Domain.ball([0, 0], 2.0)
    inner = Domain.ball([0, 0], 1.0)
    g = Grid((-2 + 0.0011, -2 + 0.0007), 4.0 / 320, (321, 321))
    spec = GreenSpec(inner, (0, 0))
    vals = green_values(spec, g.points())
    V = ScalarField(g, np.where(np.isfinite(vals),
                                vals, 0.0).reshape(g.shape))
    return ambient, V


class TestClassify:

    def test_green_is_jp1(self, classify_setup):
        ambient, V = classify_setup
        assert classify_potential(V, ambient, (0, 0)).label == "JP1"

    def test_half_green_is_jp(self, classify_setup):
        ambient, V = classify_setup
        half = ScalarField(V.grid, 0.5 * V.values)
        assert classify_potential(half, ambient, (0, 0)).label == "JP"

    def test_double_green_is_none(self, classify_setup):
        ambient, V = classify_setup
        dbl = ScalarField(V.grid, 2.0 * V.values)
        assert classify_potential(dbl, ambient, (0, 0)).label == "none"

    def test_nonvanishing_is_none(self, classify_setup):
        ambient, V = classify_setup
        shifted = ScalarField(V.grid, V.values + 1.0)
        assert classify_potential(shifted, ambient, (0, 0)).label == "none"


class TestJensenCheck:
    def test_area_measure_passes(self, unit_disc):
        g = Grid((-1 + 0.001, -1 + 0.0013), 2 / 128, (129, 129))
        r = np.linalg.norm(g.points(), axis=1).reshape(g.shape)
        dens = ScalarField(g, np.where(r < 1.0, 1 / np.pi, 0.0))
        mu = DiscreteMeasure.from_density(dens)
        rep = jensen_measure_check(mu, (0, 0), unit_disc, probe_count=48,
                                   seed=2, tol=0.02)
        assert rep.ok

    def test_circle_measure_harmonic_equality(self, unit_disc):
        mu = DiscreteMeasure.uniform_circle([0, 0], 0.7, 512)
        rep = jensen_measure_check(mu, (0, 0), unit_disc, probe_count=32,
                                   seed=3)
        assert rep.ok
        assert rep.as_worst < 1e-7

    def test_shifted_dirac_fails(self, unit_disc):
        mu = DiscreteMeasure.dirac([0.4, 0.0])
        rep = jensen_measure_check(mu, (0, 0), unit_disc, probe_count=64,
                                   seed=4)
        assert not rep.ok
        assert rep.verdict == "violated"


class TestPoissonJensen:
    def test_single_log_closed_form(self):
        # u = ln|z - a|, |a| = 0.3, mu = uniform unit circle, o = 0:
        # u(0) = ln 0.3, int u dmu = 0, int pt dDelta = -ln 0.3
        a = np.array([0.3, 0.0])
        mu = DiscreteMeasure.uniform_circle([0, 0], 1.0, 512)
        Du = DiscreteMeasure.dirac(a)
        out = poisson_jensen_check(
            lambda p: np.log(np.linalg.norm(np.atleast_2d(p) - a, axis=-1)),
            Du, mu, (0, 0))
        assert out["u_at_o"] == pytest.approx(np.log(0.3))
        assert out["integral_u_dmu"] == pytest.approx(0.0, abs=1e-12)
        assert out["integral_potential_dDelta"] == \
            pytest.approx(-np.log(0.3), abs=1e-12)
        assert out["residual"] < 1e-12

    def test_harmonic_mean_value(self):
        mu = DiscreteMeasure.uniform_circle([0, 0], 0.8, 512)
        Du = DiscreteMeasure(2)
        out = poisson_jensen_check(lambda p: 2.0 + np.atleast_2d(p)[:, 0],
                                   Du, mu, (0, 0))
        assert out["residual"] < 1e-12

    def test_random_cubic_classic(self, rng):
        # classical Poisson-Jensen on disc(0, 0.8) via quadrature oracle
        for _ in range(5):
            zs = rng.uniform(-0.6, 0.6, (3, 2)).view(complex).ravel()
            zs = zs[np.abs(np.abs(zs) - 0.8) > 0.05]
            if len(zs) == 0 or np.abs(np.polyval(np.poly(zs), 0)) < 1e-3:
                continue
            mu = DiscreteMeasure.uniform_circle([0, 0], 0.8, 1024)

            def u(p, zs=zs):
                z = np.atleast_2d(p)[:, 0] + 1j * np.atleast_2d(p)[:, 1]
                return np.sum(np.log(np.abs(z[:, None] - zs)), axis=1)

            Du = counting_measure([((z.real, z.imag), 1) for z in zs])
            out = poisson_jensen_check(u, Du, mu, (0, 0))
            assert out["residual"] < 1e-3

    def test_minus_inf_at_o_rejected(self):
        mu = DiscreteMeasure.uniform_circle([0, 0], 1.0, 64)
        Du = DiscreteMeasure.dirac([0.0, 0.0])
        with np.errstate(divide="ignore"), pytest.raises(ValueError):
            poisson_jensen_check(
                lambda p: np.log(np.linalg.norm(np.atleast_2d(p), axis=-1)),
                Du, mu, (0, 0))
