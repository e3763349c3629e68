import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laxkit import elliptic as ell
from laxkit.elliptic import EllipticContext
from laxkit.errors import ConfigError, PoleError, SeriesCapError
from laxkit.report import Sampler

from oracles import eisenstein_g2_g3, theta1_series, theta_mp, wp_mp

PTS = [0.13 + 0.07j, 0.41 - 0.2j, 0.77 + 0.11j, -0.3 + 0.02j, 1.6 - 0.1j]


class TestTheta:
    @pytest.mark.parametrize("z", PTS)
    def test_matches_jacobi_series(self, ell_ctx, z):
        ref = theta1_series(z, ell_ctx.tau)
        assert abs(ell.theta(ell_ctx, z) - ref) <= 1e-13 * max(1, abs(ref))

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_derivatives_match_mpmath(self, ell_ctx, order):
        for z in PTS[:3]:
            ref = theta_mp(z, ell_ctx.tau, order)
            assert abs(ell.theta(ell_ctx, z, order) - ref) <= 1e-12 * max(1, abs(ref))

    def test_quasi_periodicity(self, ell_ctx):
        tau = ell_ctx.tau
        for z in PTS:
            t = ell.theta(ell_ctx, z)
            assert abs(ell.theta(ell_ctx, z + 1) + t) < 1e-12 * max(1, abs(t))
            shifted = -np.exp(-1j * np.pi * tau - 2j * np.pi * z) * t
            assert abs(ell.theta(ell_ctx, z + tau) - shifted) < 1e-11 * max(1, abs(shifted))

    def test_odd(self, ctx):
        z = np.array(PTS)
        np.testing.assert_allclose(ell.theta(ctx, -z), -ell.theta(ctx, z), atol=1e-14)

    def test_vector_shape_preserved(self, ctx):
        z = np.array(PTS).reshape(5, 1)
        assert ell.theta(ctx, z).shape == (5, 1)
        assert isinstance(ell.theta(ctx, 0.3), complex)

    def test_series_cap(self):
        c = EllipticContext(0.01j, max_terms=8)
        with pytest.raises(SeriesCapError):
            ell.theta(c, 0.3)
        with pytest.raises(ConfigError):
            EllipticContext(1j, max_terms=2)

    def test_trig_backend_closed_form(self, trig_ctx):
        for z in PTS:
            assert abs(ell.theta(trig_ctx, z) - np.sin(np.pi * z) / np.pi) < 1e-15
        assert abs(trig_ctx.theta_ratio + np.pi ** 2) < 1e-13

    def test_bad_context(self):
        with pytest.raises(ConfigError):
            EllipticContext(-1j)
        with pytest.raises(ConfigError):
            EllipticContext(1j, backend="hyperbolic")


class TestDerivedFunctions:
    h = 1e-5

    def test_e1_is_log_derivative(self, ell_ctx):
        for z in PTS:
            fd = (np.log(ell.theta(ell_ctx, z + self.h)) - np.log(ell.theta(ell_ctx, z - self.h))) / (2 * self.h)
            assert abs(ell.e1(ell_ctx, z) - fd) < 1e-8 * max(1, abs(fd))

    def test_f0_is_e1_derivative(self, ell_ctx):
        for z in PTS:
            fd = (ell.e1(ell_ctx, z + self.h) - ell.e1(ell_ctx, z - self.h)) / (2 * self.h)
            assert abs(ell.f0(ell_ctx, z) - fd) < 1e-7 * max(1, abs(fd))

    def test_phi_dq_finite_difference(self, ell_ctx):
        z = 0.23 + 0.05j
        for q in PTS:
            fd = (ell.kronecker_phi(ell_ctx, z, q + self.h) - ell.kronecker_phi(ell_ctx, z, q - self.h)) / (2 * self.h)
            assert abs(ell.phi_dq(ell_ctx, z, q) - fd) < 1e-7 * max(1, abs(fd))

    def test_phi_symmetric_and_residue(self, ell_ctx):
        q = 0.31 + 0.04j
        assert abs(ell.kronecker_phi(ell_ctx, 0.2, q) - ell.kronecker_phi(ell_ctx, q, 0.2)) < 1e-13
        # phi(z, q) = 1/z + E1(q) + O(z)
        for z in (1e-3, -1e-3):
            approx = 1 / z + ell.e1(ell_ctx, q)
            assert abs(ell.kronecker_phi(ell_ctx, z, q) - approx) < 5e-2 * abs(z) * 100

    def test_wp_prime_finite_difference(self, ell_ctx):
        for z in PTS:
            fd = (ell.wp(ell_ctx, z + self.h) - ell.wp(ell_ctx, z - self.h)) / (2 * self.h)
            assert abs(ell.wp_prime(ell_ctx, z) - fd) < 1e-6 * max(1, abs(fd))

    def test_wp_against_mpmath(self, ell_ctx):
        for z in PTS:
            ref = wp_mp(z, ell_ctx.tau)
            assert abs(ell.wp(ell_ctx, z) - ref) < 1e-12 * max(1, abs(ref))

    def test_weierstrass_ode_with_eisenstein_invariants(self, ell_ctx):
        g2, g3 = eisenstein_g2_g3(ell_ctx.tau)
        for z in PTS:
            w, wp1 = ell.weierstrass(ell_ctx, z)
            lhs = wp1 ** 2
            rhs = 4 * w ** 3 - g2 * w - g3
            assert abs(lhs - rhs) < 1e-10 * max(1, abs(lhs))

    def test_wp_lattice_route(self, ell_ctx):
        z = np.array(PTS)
        np.testing.assert_allclose(ell.wp(ell_ctx, z), ell.wp_lattice(ell_ctx, z), rtol=1e-12)

    def test_wp_doubly_periodic_and_even(self, ell_ctx):
        for z in PTS:
            w = ell.wp(ell_ctx, z)
            for shift in (1, ell_ctx.tau, -1 - ell_ctx.tau):
                assert abs(ell.wp(ell_ctx, z + shift) - w) < 1e-10 * max(1, abs(w))
            assert abs(ell.wp(ell_ctx, -z) - w) < 1e-12 * max(1, abs(w))

    def test_wp_laurent(self, ctx):
        z = 1e-3
        assert abs(ell.wp(ctx, z) - 1 / z ** 2) < 1e-3

    def test_trig_limit_of_elliptic(self, trig_ctx):
        far = EllipticContext(20j)
        for z in (0.21 + 0.03j, 0.6 - 0.05j):
            assert abs(ell.wp(far, z) - ell.wp(trig_ctx, z)) < 1e-9
            assert abs(ell.kronecker_phi(far, z, 0.37) - ell.kronecker_phi(trig_ctx, z, 0.37)) < 1e-9
            assert abs(ell.e1(far, z) - ell.e1(trig_ctx, z)) < 1e-9

    def test_trig_closed_forms(self, trig_ctx):
        z, q = 0.21 + 0.03j, 0.37
        pi = np.pi
        assert abs(ell.kronecker_phi(trig_ctx, z, q) - pi * (1 / np.tan(pi * z) + 1 / np.tan(pi * q))) < 1e-12
        assert abs(ell.f0(trig_ctx, q) + pi ** 2 / np.sin(pi * q) ** 2) < 1e-11
        assert abs(ell.wp(trig_ctx, z) - (pi ** 2 / np.sin(pi * z) ** 2 - pi ** 2 / 3)) < 1e-11

    def test_pole_error(self, ctx):
        with pytest.raises(PoleError):
            ell.e1(ctx, 1 + ctx.tau)
        with pytest.raises(PoleError):
            ell.kronecker_phi(ctx, 0.2, 0.0)


class TestIdentities:
    @settings(max_examples=40, deadline=None)
    @given(
        st.floats(0.05, 0.95), st.floats(-0.2, 0.2), st.floats(0.05, 0.95),
        st.floats(-0.2, 0.2), st.floats(0.05, 0.45), st.floats(0.05, 0.45),
    )
    def test_fay_identity(self, zr, zi, wr, wi, a, b):
        c = EllipticContext(1j)
        z, w = complex(zr, zi), complex(wr, wi)
        qab, qbc = a, b
        qac = qab + qbc
        args = np.array([z, w, z - w, qab, qbc, qac])
        if np.min(ell.lattice_distance(c, args)) < 0.05:
            return
        phi = lambda x, y: ell.kronecker_phi(c, x, y)
        lhs = phi(z, qab) * phi(w, qbc)
        rhs = phi(w, qac) * phi(z - w, qab) + phi(w - z, qbc) * phi(z, qac)
        assert abs(lhs - rhs) <= 1e-9 * max(1, abs(lhs))

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.06, 0.94), st.floats(-0.2, 0.2), st.floats(0.06, 0.94))
    def test_unitarity_relation(self, zr, zi, q):
        c = EllipticContext(0.8j)
        z = complex(zr, zi)
        lhs = ell.kronecker_phi(c, z, q) * ell.kronecker_phi(c, z, -q)
        rhs = ell.wp(c, z) - ell.wp(c, q)
        assert abs(lhs - rhs) <= 1e-9 * max(1, abs(lhs))

    def test_suite_passes(self, ell_ctx, small_sampler):
        rep = ell.scalar_identity_suite(ell_ctx, small_sampler)
        assert rep.passed, rep.summary_lines()

    def test_suite_perturbed_fails(self, ctx, small_sampler):
        rep = ell.scalar_identity_suite(ctx, small_sampler, perturb=1e-3)
        assert not rep["fay"].passed

    def test_suite_is_deterministic(self, ctx):
        a = ell.scalar_identity_suite(ctx, Sampler(5, seed=9)).to_json()
        b = ell.scalar_identity_suite(ctx, Sampler(5, seed=9)).to_json()
        assert a == b
