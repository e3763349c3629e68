import csv

import numpy as np
import pytest

from laxkit import chain as ch
from laxkit import elliptic as ell
from laxkit import rmatrix as rm
from laxkit.elliptic import EllipticContext
from laxkit.errors import BackendError, ConfigError, DimensionCapError, HermiticityError
from laxkit.report import rel_residual

from oracles import swap_matrix

COMMUTING = ["xyz", "bb:N=2", "bb:N=3", "xxz", "perm:N=2:trig"]


def make(spec, n, tau=1j, **kw):
    m = rm.parse_model(spec)
    return ch.ChainSpec(n, m, rm.default_context(m, tau), **kw)


class TestSpec:
    def test_default_positions(self):
        assert ch.default_positions(4) == (0.25, 0.5, 0.75, 1.0)
        with pytest.raises(ConfigError):
            ch.default_positions(1)

    def test_validation(self, ctx):
        m = rm.XYZ()
        with pytest.raises(ConfigError):
            ch.ChainSpec(1, m, ctx)
        with pytest.raises(ConfigError):
            ch.ChainSpec(3, m, ctx, positions=(0.1, 0.2))
        with pytest.raises(ConfigError):
            ch.ChainSpec(3, m, ctx, positions=(0.1, 0.5, 1.1))
        with pytest.raises(BackendError):
            ch.ChainSpec(3, m, ell.trigonometric())

    def test_dimension_cap(self, ctx):
        with pytest.raises(DimensionCapError):
            ch.ChainSpec(15, rm.XYZ(), ctx)
        with pytest.raises(DimensionCapError):
            ch.ChainSpec(4, rm.XYZ(), ctx, cap=8)

    def test_perturbed(self):
        s = make("xyz", 4)
        assert s.is_equidistant()
        p = s.perturbed(site=2, delta=0.02)
        assert not p.is_equidistant()
        assert p.positions[2] == pytest.approx(0.77)

    def test_embedded_cache(self):
        s = make("xyz", 3)
        a = s.embedded("F0", 0, 1)
        assert s.embedded("F0", 0, 1) is a
        with pytest.raises(KeyError):
            s.embedded("Q", 0, 1)

    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_equilibrium(self, ctx, n):
        assert ch.equilibrium_residual(ch.ChainSpec(n, rm.XYZ(), ctx)) < 1e-10
        bad = ch.ChainSpec(n, rm.XYZ(), ctx).perturbed()
        assert ch.equilibrium_residual(bad) > 1e-3


class TestQuantumLax:
    @pytest.mark.parametrize("n", [3, 4, 5])
    @pytest.mark.parametrize("spec", ["xyz", "perm:N=2:elliptic", "perm:N=2:trig", "bb:N=3", "xxz"])
    def test_residual(self, spec, n):
        s = make(spec, n)
        for z in (0.21 + 0.07j, 0.43 - 0.11j, 0.67 + 0.02j):
            assert ch.quantum_lax_residual(s, z) < 1e-10

    def test_non_equidistant_fails(self):
        s = make("xyz", 4).perturbed()
        assert ch.quantum_lax_residual(s, 0.21 + 0.07j) > 1e-3

    def test_inozemtsev_sign(self):
        s = make("perm:N=2:elliptic", 4)
        z = 0.3 + 0.1j
        _, m_ino = ch.inozemtsev_lax_pair(s, z)
        # the chain M coincides with the Inozemtsev M; in the Inozemtsev form
        # the Lax equation reads [H, L] = [L, -M]
        np.testing.assert_allclose(ch.m_chain(s, z).entries, m_ino.entries, atol=1e-12)
        assert ch.inozemtsev_lax_residual(s, z, m_sign=-1.0) < 1e-12
        assert ch.inozemtsev_lax_residual(s, z, m_sign=1.0) > 1.0

    def test_suite(self):
        rep = ch.chain_lax_suite(make("xyz", 4), [0.21 + 0.07j], seed=3)
        assert rep.names() == ["quantum_lax", "equilibrium", "quantum_lax_perturbed"]
        assert rep.passed


class TestHamiltonians:
    def test_h3_needs_three_sites(self):
        s = make("xyz", 2)
        with pytest.warns(ch.ChainWarning):
            h = ch.h3_chain(s)
        assert np.all(h.entries == 0)
        with pytest.warns(ch.ChainWarning):
            ch.h3_unordered(s)
        assert ch.commutator_residual(s, h3=h) == 0.0

    def test_unknown_hamiltonian(self):
        with pytest.raises(ConfigError):
            ch.hamiltonian(make("xyz", 3), "h4")

    @pytest.mark.parametrize("spec", COMMUTING)
    def test_unordered_sum_is_minus_three_times(self, spec):
        c, misfit = ch.h3_ratio(make(spec, 4))
        assert abs(c + 3) < 1e-12 and misfit < 1e-12

    def test_perm_elliptic_has_no_such_ratio(self):
        c, misfit = ch.h3_ratio(make("perm:N=2:elliptic", 4))
        assert misfit > 1e-3

    @pytest.mark.parametrize("spec", ["xyz", "bb:N=2", "xxz", "perm:N=2:trig", "perm:N=2:elliptic"])
    def test_hermiticity(self, spec):
        s = make(spec, 4)
        h2, h3 = ch.h2_chain(s), ch.h3_chain(s)
        assert ch.hermiticity_deviation(h2) < 1e-12
        # H3 comes out anti-Hermitian
        np.testing.assert_allclose(h3.entries.conj().T, -h3.entries, atol=1e-11)

    def test_brute_force_three_site_trig(self, trig_ctx):
        s = ch.ChainSpec(3, rm.PermutationKronecker(2, ell.TRIGONOMETRIC), trig_ctx)
        P = {(i, j): swap_matrix(3, 2, i, j) for i in range(3) for j in range(3) if i != j}
        x = lambda i, j: (i - j) / 3
        f0 = lambda i, j: -np.pi ** 2 / np.sin(np.pi * x(i, j)) ** 2 * P[i, j]
        r = lambda i, j: np.pi / np.tan(np.pi * x(i, j)) * P[i, j]
        h2 = f0(1, 0) + f0(2, 0) + f0(2, 1)
        a, b = f0(0, 1), r(0, 2) + r(1, 2)
        np.testing.assert_allclose(ch.h2_chain(s).entries, h2, atol=1e-12)
        np.testing.assert_allclose(ch.h3_chain(s).entries, a @ b - b @ a, atol=1e-12)


class TestCommutativity:
    @pytest.mark.parametrize("n", [3, 4, 5])
    @pytest.mark.parametrize("spec", COMMUTING)
    def test_commute(self, spec, n):
        assert ch.commutator_residual(make(spec, n)) < 1e-10

    @pytest.mark.parametrize("spec", ["xyz", "xxz"])
    def test_non_equidistant_control(self, spec):
        assert ch.commutator_residual(make(spec, 4).perturbed()) > 1e-4

    def test_perm_elliptic_does_not_commute(self):
        rep = ch.chain_commute_suite(make("perm:N=2:elliptic", 4))
        assert rep.conjecture_status == "falsified"
        assert rep["commutator"].max_residual > 1e-5

    def test_suite_metadata(self):
        rep = ch.chain_commute_suite(make("xyz", 4))
        assert rep.conjecture_status == "verified" and rep.passed
        assert rep.metadata["hermiticity_h3"] == pytest.approx(2.0)
        assert "commutator_perturbed" in rep.names()
        assert ch.chain_commute_suite(make("xyz", 4), control=False).names() == ["commutator"]


class TestTranslation:
    @pytest.mark.parametrize("spec", COMMUTING)
    def test_twisted_shift_symmetry(self, spec):
        s = make(spec, 4)
        for h in (ch.h2_chain(s), ch.h3_chain(s)):
            assert ch.translation_residual(s, h) < 1e-12

    def test_untwisted_shift_breaks_xyz(self):
        s = make("xyz", 4)
        assert ch.translation_residual(s, ch.h2_chain(s), twisted=False) > 1e-2

    def test_perm_elliptic_h3_not_shift_invariant(self):
        s = make("perm:N=2:elliptic", 4)
        assert ch.translation_residual(s, ch.h2_chain(s)) < 1e-12
        assert ch.translation_residual(s, ch.h3_chain(s)) > 1e-4

    @pytest.mark.parametrize("spec", ["xyz", "xxz"])
    def test_spin_flip(self, spec):
        s = make(spec, 4)
        f = ch.spin_flip_operator(s).entries
        h = ch.h2_chain(s).entries
        np.testing.assert_allclose(f @ h @ f, h, atol=1e-12)

    def test_spin_flip_needs_qubits(self):
        with pytest.raises(ConfigError):
            ch.spin_flip_operator(make("bb:N=3", 3))


class TestInozemtsev:
    @pytest.mark.parametrize("n", [4, 5])
    def test_h2(self, n):
        s = make("perm:N=2:elliptic", n)
        want = ch.permutation_sum(s) * (s.ctx.theta_ratio / 3) - ch.inozemtsev_h2(s)
        assert rel_residual(ch.h2_chain(s).entries, want.entries) < 1e-12

    @pytest.mark.parametrize("n", [4, 5])
    def test_higher_charges_commute(self, n):
        s = make("perm:N=2:elliptic", n)
        ino = ch.inozemtsev_h2(s)
        for j in (ch.j1(s), ch.j2(s)):
            assert ch.commutator_residual(s, ino, j) < 1e-9

    def test_trig_j_relation(self, trig_ctx):
        # exact with coefficient 2 theta'''/theta' in front of J1
        s = ch.ChainSpec(4, rm.PermutationKronecker(2, ell.TRIGONOMETRIC), trig_ctx)
        J1, J2 = ch.j1(s), ch.j2(s)
        want = -(J2 - J1 * (2 * trig_ctx.theta_ratio)) / 36
        assert rel_residual(ch.h3_chain(s).entries, want.entries) < 1e-12

    def test_haldane_shastry_limit(self, trig_ctx):
        s = ch.ChainSpec(5, rm.PermutationKronecker(2, ell.TRIGONOMETRIC), trig_ctx)
        want = -np.pi ** 2 * ch.haldane_shastry_h2(s).entries
        assert rel_residual(ch.h2_chain(s).entries, want) < 1e-12
        far = ch.ChainSpec(5, rm.PermutationKronecker(2), EllipticContext(20j))
        assert rel_residual(ch.h2_chain(far).entries, want) < 1e-9


class TestClosedForms:
    @pytest.mark.parametrize("n", [3, 4, 5])
    @pytest.mark.parametrize("tau", [1j, 0.8j, 0.5 + 0.8j])
    def test_xyz_h2_forms(self, n, tau):
        s = make("xyz", n, tau)
        h2 = ch.h2_chain(s).entries
        for form in (ch.xyz_h2_product_form, ch.xyz_h2_e1_form, ch.xyz_h2_wp_form):
            assert rel_residual(h2, form(s).entries) < 1e-10

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_xxz_h2(self, n):
        s = make("xxz", n)
        assert rel_residual(ch.h2_chain(s).entries, ch.xxz_h2_closed_form(s).entries) < 1e-10

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_xxz_h3_compact_up_to_4i(self, n):
        s = make("xxz", n)
        assert rel_residual(ch.h3_chain(s).entries, 4j * ch.xxz_h3_compact(s).entries) < 1e-12

    def test_closed_forms_need_qubits(self):
        s = make("bb:N=3", 3)
        with pytest.raises(ConfigError):
            ch.xyz_h2_product_form(s)

    def test_crosscheck_suites(self):
        assert ch.chain_crosscheck_suite(make("xyz", 4)).passed
        rep = ch.chain_crosscheck_suite(make("perm:N=2:trig", 4))
        assert rep["h2_inozemtsev"].passed and rep["h2_haldane_shastry"].passed
        # the displayed J1 coefficient is off by a factor 6 in the trig limit
        assert not rep["h3_j_relation"].passed
        assert "note" in ch.chain_crosscheck_suite(make("bb:N=3", 3)).metadata


class TestSpectrum:
    def test_h2_spectrum(self, tmp_path):
        s = make("xxz", 4)
        sp = ch.spectrum(s)
        assert sp.hermitian and len(sp.values) == 16
        assert np.all(np.diff(sp.values) >= 0)
        np.testing.assert_allclose(sp.values, np.linalg.eigvalsh(ch.h2_chain(s).entries), atol=1e-10)
        path = tmp_path / "spec.csv"
        ch.write_spectrum_csv(path, sp)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["index", "eigenvalue", "multiplicity"]
        assert len(rows) == 17
        assert [int(r[0]) for r in rows[1:]] == list(range(16))

    def test_multiplicities_sum(self):
        sp = ch.spectrum(make("perm:N=2:trig", 4))
        # each cluster of size m is listed m times
        counts = {}
        for v, m in zip(np.round(sp.values, 8), sp.multiplicity):
            counts[v] = m
        assert sum(counts.values()) == 16

    def test_h3_requires_force(self):
        s = make("xyz", 4)
        with pytest.raises(HermiticityError):
            ch.spectrum(s, "h3")
        sp = ch.spectrum(s, "h3", force=True)
        assert not sp.hermitian and sp.deviation == pytest.approx(2.0)
        # anti-Hermitian: purely imaginary eigenvalues
        assert np.max(np.abs(np.asarray(sp.values).real)) < 1e-9

    def test_su2_degeneracy_of_haldane_shastry(self):
        sp = ch.spectrum(make("perm:N=2:trig", 4))
        assert max(sp.multiplicity) >= 3
