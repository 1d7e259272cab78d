import math

import numpy as np
import pytest
import scipy.sparse as sp

from qlre.hilbert import (
    Backend,
    BasisDescriptor,
    DensityMatrix,
    PureState,
    basis_isometry,
    collective_jz,
    collective_lowering,
    dicke_level_vector,
    embed,
    fidelity_with_pure,
    ground_state,
    partial_trace,
    product_state,
    pure_product_state,
    reservoir_jump,
    single_spin_lowering,
    single_spin_z,
    symmetric_isometry,
    to_collective_basis,
    to_full_basis,
    trace_distance,
)


def dense(op):
    return op.toarray() if hasattr(op, "toarray") else np.asarray(op)


class TestBasisDescriptor:
    def test_dims_collective(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (2, 3, 1))
        assert b.domain_dims == (3, 4, 2)
        assert b.dim == 24

    def test_dims_full(self):
        b = BasisDescriptor(Backend.FULL, (2, 3))
        assert b.domain_dims == (4, 8)
        assert b.dim == 32

    @pytest.mark.parametrize("pops", [(), (0,), (-1, 2), (2.5,)])
    def test_invalid_populations(self, pops):
        with pytest.raises(ValueError):
            BasisDescriptor(Backend.COLLECTIVE, pops)

    def test_subset_preserves_order(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (1, 4, 2))
        assert b.subset([2, 0]).domain_pops == (1, 2)


class TestCollectiveOperators:
    def test_ladder_n2_elements(self):
        # j = 1 ladder: <0|J-|1> = <−1|J-|0> = sqrt(2)
        Jm = collective_lowering(2, Backend.COLLECTIVE).toarray()
        expected = np.zeros((3, 3))
        expected[1, 0] = expected[2, 1] = math.sqrt(2)
        assert np.allclose(Jm, expected)

    def test_ladder_n1_is_sigma_minus(self):
        Jm = collective_lowering(1, Backend.COLLECTIVE).toarray()
        assert np.allclose(Jm, [[0, 0], [1, 0]])

    @pytest.mark.parametrize("N", range(1, 7))
    @pytest.mark.parametrize("backend", [Backend.COLLECTIVE, Backend.FULL])
    def test_su2_commutators(self, N, backend):
        Jm = dense(collective_lowering(N, backend).matrix)
        Jp = Jm.conj().T
        Jz = dense(collective_jz(N, backend).matrix)
        assert np.allclose(Jp @ Jm - Jm @ Jp, 2 * Jz)
        assert np.allclose(Jz @ Jm - Jm @ Jz, -Jm)

    @pytest.mark.parametrize("N", range(1, 7))
    def test_casimir_on_ladder(self, N):
        # J^2 = j(j+1) identity on the maximal-spin ladder
        Jm = collective_lowering(N, Backend.COLLECTIVE).toarray()
        Jp = Jm.conj().T
        Jz = collective_jz(N, Backend.COLLECTIVE).toarray()
        J2 = 0.5 * (Jp @ Jm + Jm @ Jp) + Jz @ Jz
        j = N / 2
        assert np.allclose(J2, j * (j + 1) * np.eye(N + 1))

    @pytest.mark.parametrize("N", range(1, 6))
    def test_full_backend_matches_conjugated_ladder(self, N):
        S = symmetric_isometry(N)
        Jm_full = collective_lowering(N, Backend.FULL).matrix
        projected = (S.conj().T @ Jm_full @ S).toarray()
        assert np.allclose(projected, collective_lowering(N, Backend.COLLECTIVE).toarray())

    def test_full_jump_is_sparse(self):
        assert collective_lowering(3, Backend.FULL).is_sparse

    def test_jz_diagonals(self):
        assert np.allclose(np.diag(collective_jz(2, Backend.COLLECTIVE).toarray()), [1, 0, -1])
        assert np.allclose(
            np.diag(dense(collective_jz(2, Backend.FULL).matrix)), [1, 0, 0, -1]
        )

    @pytest.mark.parametrize("bad", [0, -3, 1.5])
    def test_bad_spin_count(self, bad):
        with pytest.raises(ValueError):
            collective_lowering(bad, Backend.COLLECTIVE)


class TestEmbedAndReservoir:
    def test_embed_identity_elsewhere(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (1, 2))
        op = collective_jz(2, Backend.COLLECTIVE)
        emb = dense(embed(op, b, 1).matrix)
        assert np.allclose(emb, np.kron(np.eye(2), op.toarray()))

    def test_embed_dimension_mismatch(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (1, 2))
        op = collective_jz(3, Backend.COLLECTIVE)
        with pytest.raises(ValueError):
            embed(op, b, 1)

    def test_reservoir_jump_sum(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (1, 2))
        J = dense(reservoir_jump(b, [0, 1]).matrix)
        ja = np.kron(collective_lowering(1, Backend.COLLECTIVE).toarray(), np.eye(3))
        jb = np.kron(np.eye(2), collective_lowering(2, Backend.COLLECTIVE).toarray())
        assert np.allclose(J, ja + jb)

    def test_reservoir_jump_annihilates_ground(self):
        for be in (Backend.COLLECTIVE, Backend.FULL):
            b = BasisDescriptor(be, (1, 3, 1))
            J = reservoir_jump(b, [1, 2])
            g = pure_product_state(b, [0, 0, 0])
            assert np.linalg.norm(dense(J.matrix) @ g.amplitudes) < 1e-14

    def test_reservoir_jump_annihilates_singlet(self):
        # antisymmetric two-spin state is dark for the summed lowering operator
        b = BasisDescriptor(Backend.FULL, (1, 1))
        J = reservoir_jump(b, [0, 1])
        singlet = np.array([0, 1, -1, 0]) / math.sqrt(2)
        assert np.linalg.norm(dense(J.matrix) @ singlet) < 1e-14

    def test_full_backend_reservoir_always_sparse(self):
        b = BasisDescriptor(Backend.FULL, (1, 1))
        assert reservoir_jump(b, [0, 1]).is_sparse

    def test_invalid_domain_set(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (1, 2))
        with pytest.raises(ValueError):
            reservoir_jump(b, [0, 5])
        with pytest.raises(ValueError):
            reservoir_jump(b, [])


class TestSingleSpinOperators:
    def test_collective_backend_refused(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (2,))
        with pytest.raises(ValueError):
            single_spin_lowering(b, 0, 0)

    def test_sum_of_sites_equals_collective(self):
        b = BasisDescriptor(Backend.FULL, (3,))
        total = sum(dense(single_spin_lowering(b, 0, s).matrix) for s in range(3))
        assert np.allclose(total, dense(collective_lowering(3, Backend.FULL).matrix))

    def test_sigma_z_algebra(self):
        b = BasisDescriptor(Backend.FULL, (2, 1))
        for dom, site in [(0, 0), (0, 1), (1, 0)]:
            sm = dense(single_spin_lowering(b, dom, site).matrix)
            sz = dense(single_spin_z(b, dom, site).matrix)
            assert np.allclose(sz @ sm - sm @ sz, -2 * sm)
            assert np.allclose(sz @ sz, np.eye(b.dim))

    def test_site_out_of_range(self):
        b = BasisDescriptor(Backend.FULL, (2,))
        with pytest.raises(ValueError):
            single_spin_lowering(b, 0, 2)


class TestStates:
    def test_ground_state_is_last_index(self):
        for be in (Backend.COLLECTIVE, Backend.FULL):
            b = BasisDescriptor(be, (2, 2))
            g = ground_state(b)
            expected = np.zeros((b.dim, b.dim))
            expected[-1, -1] = 1.0
            assert np.allclose(g.matrix, expected)

    def test_dicke_vector_full_backend(self):
        # one excitation among two spins: (|ud> + |du>)/sqrt(2), up = bit 0
        v = dicke_level_vector(2, 1, Backend.FULL)
        assert np.allclose(v, np.array([0, 1, 1, 0]) / math.sqrt(2))

    def test_dicke_vector_collective_backend(self):
        v = dicke_level_vector(3, 2, Backend.COLLECTIVE)
        expected = np.zeros(4)
        expected[1] = 1.0  # N - k = 1
        assert np.allclose(v, expected)

    def test_bitstring_state(self):
        b = BasisDescriptor(Backend.FULL, (2,))
        psi = pure_product_state(b, ["du"])
        expected = np.zeros(4)
        expected[2] = 1.0  # 'd'=1 at the most significant bit
        assert np.allclose(psi.amplitudes, expected)

    def test_bitstring_needs_full_backend(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (2,))
        with pytest.raises(ValueError):
            pure_product_state(b, ["du"])

    def test_product_state_factorizes(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (2, 3))
        rho = product_state(b, [1, 3])
        va = dicke_level_vector(2, 1, Backend.COLLECTIVE)
        vb = dicke_level_vector(3, 3, Backend.COLLECTIVE)
        expected = np.kron(np.outer(va, va), np.outer(vb, vb))
        assert np.allclose(rho.matrix, expected)

    def test_product_state_accepts_matrices(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (1, 1))
        mixed = np.diag([0.25, 0.75]).astype(complex)
        rho = product_state(b, [mixed, 0])
        assert np.allclose(np.diag(rho.matrix).real, [0, 0.25, 0, 0.75])

    def test_level_out_of_range(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (2,))
        with pytest.raises(ValueError):
            product_state(b, [3])

    def test_pure_state_norm_enforced(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (1,))
        with pytest.raises(ValueError):
            PureState(np.array([1.0, 1.0]), b)

    def test_density_matrix_validation(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (1,))
        with pytest.raises(ValueError):
            DensityMatrix(np.array([[0.5, 0.5j], [0.5j, 0.5]]), b)  # not Hermitian
        with pytest.raises(ValueError):
            DensityMatrix(np.diag([0.7, 0.7]), b)  # trace 1.4
        with pytest.raises(ValueError):
            DensityMatrix(np.diag([1.5, -0.5]), b)  # negative eigenvalue


class TestPartialTrace:
    def test_product_state_reduces_to_factors(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (2, 3, 1))
        rho = product_state(b, [0, 2, 1])
        for m in range(3):
            red = partial_trace(rho, [m])
            sub = product_state(b.subset([m]), [[0, 2, 1][m]])
            assert np.allclose(red.matrix, sub.matrix)

    def test_trace_preserved(self):
        rng = np.random.default_rng(7)
        b = BasisDescriptor(Backend.COLLECTIVE, (2, 2))
        for _ in range(5):
            A = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
            M = A @ A.conj().T
            rho = DensityMatrix(M / M.trace(), b)
            red = partial_trace(rho, [0])
            assert abs(red.matrix.trace() - 1) < 1e-12

    def test_entangled_pair_reduces_to_mixture(self):
        b = BasisDescriptor(Backend.FULL, (1, 1))
        bell = PureState(np.array([0, 1, 1, 0]) / math.sqrt(2), b)
        red = partial_trace(bell.projector(), [1])
        assert np.allclose(red.matrix, 0.5 * np.eye(2))

    def test_keep_all_is_identity(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (1, 2))
        rho = product_state(b, [0, 1])
        assert partial_trace(rho, [0, 1]) is rho

    def test_partial_trace_consistency_across_backends(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (2, 2))
        psi = pure_product_state(b, [1, 2])
        red_c = partial_trace(psi.projector(), [0])
        red_f = partial_trace(to_full_basis(psi.projector()), [0])
        back = to_collective_basis(red_f)
        assert np.allclose(back.matrix, red_c.matrix)


class TestIsometry:
    @pytest.mark.parametrize("N", range(1, 7))
    def test_columns_orthonormal(self, N):
        S = symmetric_isometry(N)
        gram = (S.conj().T @ S).toarray()
        assert np.allclose(gram, np.eye(N + 1))

    def test_isometry_entries(self):
        S = symmetric_isometry(2).toarray()
        # column 1 holds the single-excitation Dicke amplitudes
        assert np.allclose(S[:, 1], np.array([0, 1, 1, 0]) / math.sqrt(2))

    def test_basis_isometry_multi_domain(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (1, 2))
        S = basis_isometry(b)
        assert S.shape == (8, 6)
        gram = (S.conj().T @ S).toarray()
        assert np.allclose(gram, np.eye(6))

    def test_round_trip_state(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (2, 2))
        rho = product_state(b, [1, 2])
        back = to_collective_basis(to_full_basis(rho))
        assert np.allclose(back.matrix, rho.matrix)

    def test_round_trip_preserves_purity_and_trace(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (3,))
        psi = pure_product_state(b, [2])
        full = to_full_basis(psi)
        assert abs(np.linalg.norm(full.amplitudes) - 1) < 1e-12

    def test_dynamics_commutes_with_isometry(self):
        # conjugating the full-backend jump into the ladder reproduces
        # the collective-backend jump, domain by domain
        b = BasisDescriptor(Backend.COLLECTIVE, (2, 1))
        J_coll = dense(reservoir_jump(b, [0, 1]).matrix)
        J_full = reservoir_jump(b.counterpart(), [0, 1]).matrix
        S = basis_isometry(b)
        assert np.allclose((S.conj().T @ J_full @ S).toarray(), J_coll)


class TestMetrics:
    def test_fidelity_pure_on_pure(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (2,))
        psi = pure_product_state(b, [1])
        assert fidelity_with_pure(psi.projector(), psi) == pytest.approx(1.0)
        phi = pure_product_state(b, [0])
        assert fidelity_with_pure(psi.projector(), phi) == pytest.approx(0.0)

    def test_trace_distance_extremes(self):
        b = BasisDescriptor(Backend.COLLECTIVE, (1,))
        up = product_state(b, [1])
        down = product_state(b, [0])
        assert trace_distance(up, down) == pytest.approx(1.0)
        assert trace_distance(up, up) == pytest.approx(0.0)

    def test_trace_distance_triangle(self):
        rng = np.random.default_rng(11)
        b = BasisDescriptor(Backend.COLLECTIVE, (2,))
        mats = []
        for _ in range(3):
            A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
            M = A @ A.conj().T
            mats.append(DensityMatrix(M / M.trace(), b))
        a, b_, c = mats
        assert trace_distance(a, c) <= trace_distance(a, b_) + trace_distance(b_, c) + 1e-12
