import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laxkit import operators as ops
from laxkit.errors import DimensionCapError, HermiticityError, SpaceMismatchError
from laxkit.operators import Operator, SpaceDescriptor

from oracles import site_op, swap_matrix


def random_matrix(rng, dim):
    return rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))


class TestSpaces:
    def test_dimensions(self):
        s = SpaceDescriptor(3, 2)
        assert s.quantum_dim == 8 and s.dim == 8
        a = s.with_aux()
        assert a.dim == 24 and a.aux_dim == 3
        assert a.quantum() == s

    def test_cap(self):
        with pytest.raises(DimensionCapError):
            SpaceDescriptor(15, 2)
        with pytest.raises(DimensionCapError):
            SpaceDescriptor(4, 2, cap=8)

    def test_shape_mismatch(self):
        with pytest.raises(SpaceMismatchError):
            Operator(SpaceDescriptor(2, 2), np.eye(3))

    def test_mixed_spaces_rejected(self):
        a = ops.identity(SpaceDescriptor(2, 2))
        b = ops.identity(SpaceDescriptor(1, 4))
        with pytest.raises(SpaceMismatchError):
            _ = a @ b
        with pytest.raises(SpaceMismatchError):
            _ = a + b


class TestBases:
    def test_pauli_algebra(self):
        s = [ops.pauli_matrix(a) for a in range(4)]
        np.testing.assert_allclose(s[1] @ s[2], 1j * s[3])
        for a in (1, 2, 3):
            np.testing.assert_allclose(s[a] @ s[a], np.eye(2))
        with pytest.raises(ValueError):
            ops.pauli(4)

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_permutation_matches_bookkeeping(self, d):
        np.testing.assert_array_equal(ops.permutation_matrix(d), swap_matrix(2, d, 0, 1))

    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_heisenberg_relations(self, d):
        q, lam = ops.heisenberg_q(d), ops.heisenberg_lambda(d)
        w = np.exp(2j * np.pi / d)
        np.testing.assert_allclose(np.linalg.matrix_power(q, d), np.eye(d), atol=1e-13)
        np.testing.assert_allclose(np.linalg.matrix_power(lam, d), np.eye(d), atol=1e-13)
        # Q Lambda = w^{-1} Lambda Q with the 1-based diagonal convention
        np.testing.assert_allclose(q @ lam, lam @ q / w, atol=1e-13)

    @pytest.mark.parametrize("d", [2, 3])
    def test_t_basis_is_orthogonal(self, d):
        ts = [ops.heisenberg_t_matrix(a, b, d) for a in range(d) for b in range(d)]
        gram = np.array([[np.trace(x.conj().T @ y) for y in ts] for x in ts])
        np.testing.assert_allclose(gram, d * np.eye(d * d), atol=1e-12)

    @pytest.mark.parametrize("d", [2, 3])
    def test_permutation_expansion(self, d):
        # P = (1/d) sum_a T_a (x) T_-a
        acc = sum(np.kron(ops.heisenberg_t_matrix(a, b, d), ops.heisenberg_t_matrix(-a, -b, d))
                  for a in range(d) for b in range(d)) / d
        np.testing.assert_allclose(acc, ops.permutation_matrix(d), atol=1e-12)

    def test_swap_factors(self, rng):
        d = 3
        m = random_matrix(rng, d * d)
        p = ops.permutation_matrix(d)
        np.testing.assert_allclose(ops.swap_factors(m, d), p @ m @ p, atol=1e-13)


class TestEmbedding:
    @pytest.mark.parametrize("n,d", [(3, 2), (4, 2), (3, 3)])
    def test_pair_embedding_of_flip(self, n, d):
        space = SpaceDescriptor(n, d)
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                if i != j:
                    got = ops.embed_pair(ops.permutation_matrix(d), i, j, space).entries
                    np.testing.assert_array_equal(got.real, swap_matrix(n, d, i - 1, j - 1))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(3, 5), st.data())
    def test_product_embedding(self, n, data):
        i = data.draw(st.integers(1, n))
        j = data.draw(st.integers(1, n).filter(lambda k: k != i))
        rng = np.random.default_rng(n * 100 + i * 10 + j)
        a, b = random_matrix(rng, 2), random_matrix(rng, 2)
        got = ops.embed_pair(np.kron(a, b), i, j, SpaceDescriptor(n, 2)).entries
        want = site_op(n, 2, i - 1, a) @ site_op(n, 2, j - 1, b)
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_reversed_order_is_conjugation_by_flip(self, rng):
        space = SpaceDescriptor(3, 2)
        m = random_matrix(rng, 4)
        a = ops.embed_pair(m, 3, 1, space).entries
        b = ops.embed_pair(ops.swap_factors(m, 2), 1, 3, space).entries
        np.testing.assert_allclose(a, b, atol=1e-13)

    def test_embed_site(self, rng):
        a = random_matrix(rng, 3)
        got = ops.embed_site(a, 2, SpaceDescriptor(3, 3)).entries
        np.testing.assert_allclose(got, site_op(3, 3, 1, a))

    def test_bad_indices(self):
        space = SpaceDescriptor(3, 2)
        with pytest.raises(ValueError):
            ops.embed_pair(np.eye(4), 2, 2, space)
        with pytest.raises(IndexError):
            ops.embed_pair(np.eye(4), 1, 4, space)
        with pytest.raises(SpaceMismatchError):
            ops.embed_pair(np.eye(9), 1, 2, space)
        with pytest.raises(SpaceMismatchError):
            ops.embed_pair(np.eye(4), 1, 2, space.with_aux())

    def test_product_operator(self, rng):
        a, b, c = (random_matrix(rng, 2) for _ in range(3))
        got = ops.product_operator([a, b, c]).entries
        np.testing.assert_allclose(got, np.kron(np.kron(a, b), c))

    def test_kron_requires_quantum(self):
        a = ops.identity(SpaceDescriptor(2, 2))
        assert ops.kron(a, a).space == SpaceDescriptor(4, 2)
        with pytest.raises(SpaceMismatchError):
            ops.kron(ops.lift_aux(a), a)


class TestShift:
    @pytest.mark.parametrize("n,d", [(3, 2), (4, 2), (3, 3)])
    def test_shift_conjugates_sites(self, n, d, rng):
        space = SpaceDescriptor(n, d)
        s = ops.cyclic_shift(space).entries
        a = random_matrix(rng, d)
        for j in range(n):
            moved = s @ site_op(n, d, j, a) @ s.conj().T
            np.testing.assert_allclose(moved, site_op(n, d, (j + 1) % n, a), atol=1e-13)
        np.testing.assert_allclose(np.linalg.matrix_power(s, n), np.eye(d ** n), atol=1e-13)


class TestAux:
    def test_assemble_and_block(self, rng):
        space = SpaceDescriptor(2, 2)
        blocks = [[Operator(space, random_matrix(rng, 4)) for _ in range(2)] for _ in range(2)]
        full = ops.aux_assemble(blocks)
        assert full.space.has_aux and full.dim == 8
        for i in range(2):
            for j in range(2):
                np.testing.assert_array_equal(ops.aux_block(full, i, j).entries, blocks[i][j].entries)
        tr = ops.trace_aux(full)
        np.testing.assert_allclose(tr.entries, blocks[0][0].entries + blocks[1][1].entries)

    def test_none_blocks_are_zero(self):
        space = SpaceDescriptor(2, 2)
        full = ops.aux_assemble([[ops.identity(space), None], [None, None]])
        assert ops.frobenius_norm(ops.aux_block(full, 1, 1)) == 0.0
        with pytest.raises(ValueError):
            ops.aux_assemble([[None, None], [None, None]])

    def test_block_count_must_match_sites(self):
        space = SpaceDescriptor(3, 2)
        with pytest.raises(SpaceMismatchError):
            ops.aux_assemble([[ops.identity(space)] * 2] * 2)

    def test_lift(self, rng):
        a = Operator(SpaceDescriptor(2, 2), random_matrix(rng, 4))
        lifted = ops.lift_aux(a)
        np.testing.assert_allclose(ops.trace_aux(lifted).entries, 2 * a.entries)
        with pytest.raises(SpaceMismatchError):
            ops.lift_aux(lifted)
        with pytest.raises(SpaceMismatchError):
            ops.trace_aux(a)


class TestSpectra:
    def test_hermitian_eigenvalues(self, rng):
        m = random_matrix(rng, 8)
        h = Operator(SpaceDescriptor(3, 2), m + m.conj().T)
        np.testing.assert_allclose(ops.hermitian_eigenvalues(h), np.linalg.eigvalsh(h.entries), atol=1e-12)
        with pytest.raises(HermiticityError):
            ops.hermitian_eigenvalues(Operator(h.space, m))

    def test_multiplicities(self):
        assert ops.multiplicities([0.0, 1.0, 1.0 + 1e-12, 1.0, 3.0]) == [1, 3, 3, 3, 1]
        assert ops.multiplicities([]) == []

    def test_json_roundtrip(self, rng, tmp_path):
        a = Operator(SpaceDescriptor(2, 2), random_matrix(rng, 4))
        back = ops.operator_from_json(json.loads(json.dumps(ops.operator_to_json(a))), a.space)
        np.testing.assert_array_equal(back.entries, a.entries)
        path = tmp_path / "op.json"
        ops.dump_operator(a, path)
        doc = json.loads(path.read_text())
        assert doc["dims"] == 4 and len(doc["entries"]) == 16

    def test_json_rejects_bad_entries(self):
        with pytest.raises(ValueError):
            ops.operator_from_json({"dims": 2, "entries": [[0, 0]] * 3})
