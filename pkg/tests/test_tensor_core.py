import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from errors import (
    DimensionError,
    NormalizationError,
    NotHermitianError,
    RankDeficiencyError,
    SizeLimitError,
)
from particle_statistics import SIGMA_Y, rotation
from tensor_core import (
    DensityMatrix,
    Hamiltonian,
    StateVector,
    Subspace,
    basis_labels,
    eig_hermitian,
    ground_space,
    is_unitary,
    kron,
    mat_exp,
    partial_trace,
    projector_from_basis,
    reduced_density,
    subspace_intersect,
)

KET = {
    "00": np.array([1, 0, 0, 0], dtype=complex),
    "01": np.array([0, 1, 0, 0], dtype=complex),
    "10": np.array([0, 0, 1, 0], dtype=complex),
    "11": np.array([0, 0, 0, 1], dtype=complex),
}


class TestKron:
    def test_identities(self):
        assert_allclose(kron(np.eye(2), np.eye(2)), np.eye(4))

    def test_hand_product(self):
        assert_allclose(kron([[0, 1], [1, 0]], [[2]]), [[0, 2], [2, 0]])

    def test_left_factor_is_slowest(self):
        assert_allclose(kron(np.eye(2), SIGMA_Y)[:2, :2], SIGMA_Y)
        assert_allclose(kron(SIGMA_Y, np.eye(2))[:2, :2], np.zeros((2, 2)))

    def test_no_factors(self):
        with pytest.raises(DimensionError):
            kron()


class TestStateVector:
    def test_requires_unit_norm(self):
        with pytest.raises(NormalizationError):
            StateVector.from_amplitudes([1.0, 1.0])

    def test_normalize_flag(self):
        s = StateVector.from_amplitudes([3.0, 4.0], normalize=True)
        assert_allclose(s.amplitudes, [0.6, 0.8])

    def test_zero_vector_cannot_be_normalized(self):
        with pytest.raises(NormalizationError):
            StateVector.from_amplitudes([0.0, 0.0], normalize=True)

    def test_canonical_phase(self):
        s = StateVector.from_amplitudes([0.0, -1j])
        assert_allclose(s.amplitudes, [0.0, 1.0])

    def test_dims_must_match(self):
        with pytest.raises(DimensionError):
            StateVector.from_amplitudes(KET["01"], dims=(2, 3))

    def test_labels(self):
        s = StateVector.from_amplitudes(KET["01"], dims=(2, 2), names=("r", "s"))
        assert s.labels[1] == "|0⟩_r|1⟩_s"
        assert basis_labels((3,)) == ("|0⟩", "|1⟩", "|2⟩")

    def test_amplitudes_are_read_only(self):
        s = StateVector.from_amplitudes(KET["10"], dims=(2, 2))
        with pytest.raises(ValueError):
            s.amplitudes[0] = 1.0

    def test_phase_distance_ignores_global_phase(self):
        a = StateVector.from_amplitudes(KET["01"])
        b = StateVector(np.array(-KET["01"]), (4,), a.labels)
        assert a.phase_distance(b) == pytest.approx(0.0)
        assert a.distance(b) == pytest.approx(2.0)

    def test_marginals(self):
        phi = 0.3
        s = StateVector.from_amplitudes([0, math.cos(phi), math.sin(phi), 0], dims=(2, 2))
        assert_allclose(s.marginal(0), [math.cos(phi) ** 2, math.sin(phi) ** 2])
        assert_allclose(s.marginal(1), [math.sin(phi) ** 2, math.cos(phi) ** 2])


class TestReducedDensity:
    def test_product_state(self):
        s = StateVector.from_amplitudes(KET["01"], dims=(2, 2))
        assert_allclose(reduced_density(s, 0).matrix, np.diag([1, 0]))
        assert_allclose(reduced_density(s, 1).matrix, np.diag([0, 1]))

    def test_partial_trace_matches_pure_state_route(self):
        s = StateVector.from_amplitudes([0.5, 0.5j, -0.5, 0.5], dims=(2, 2))
        for keep in (0, 1):
            assert_allclose(partial_trace(s.density(), s.dims, keep).matrix, reduced_density(s, keep).matrix, atol=1e-15)

    def test_three_subsystems(self):
        psi = np.zeros(8, dtype=complex)
        psi[0b011] = 1.0
        rho = DensityMatrix(np.outer(psi, psi.conj()), (2, 2, 2))
        assert_allclose(partial_trace(rho, (2, 2, 2), 0).diagonal(), [1, 0])
        assert_allclose(partial_trace(rho, (2, 2, 2), 2).diagonal(), [0, 1])

    def test_keep_out_of_range(self):
        s = StateVector.from_amplitudes(KET["01"], dims=(2, 2))
        with pytest.raises(DimensionError):
            reduced_density(s, 2)

    def test_density_matrix_validation(self):
        with pytest.raises(NormalizationError):
            DensityMatrix(np.eye(2), (2,))
        with pytest.raises(NotHermitianError):
            DensityMatrix(np.array([[1, 1], [0, 0]]), (2,))


class TestSubspaces:
    def test_not_gate_span(self):
        sub = projector_from_basis([KET["01"], KET["10"]])
        assert sub.rank == 2
        assert_allclose(sub.projector @ sub.projector, sub.projector, atol=1e-12)
        assert sub.is_coordinate()
        assert list(sub.support()) == [1, 2]

    def test_single_vector(self):
        sub = projector_from_basis([KET["11"]])
        assert sub.rank == 1
        assert_allclose(sub.projector, np.diag([0, 0, 0, 1]))

    def test_triplet_basis_is_symmetrizer(self):
        swap = np.eye(4)[[0, 2, 1, 3]]
        sub = projector_from_basis([KET["00"], (KET["01"] + KET["10"]) / math.sqrt(2), KET["11"]])
        assert sub.rank == 3
        assert_allclose(sub.projector, (np.eye(4) + swap) / 2, atol=1e-12)

    def test_dependent_vectors(self):
        with pytest.raises(RankDeficiencyError):
            projector_from_basis([KET["01"], 2 * KET["01"]])

    def test_intersect_self(self):
        sub = projector_from_basis([KET["01"], KET["10"]])
        assert_allclose(subspace_intersect(sub, sub).projector, sub.projector)

    def test_intersect_coordinate(self):
        a = projector_from_basis([KET["01"], KET["10"]])
        b = projector_from_basis([KET["01"], KET["11"]])
        common = subspace_intersect(a, b)
        assert common.rank == 1
        assert_allclose(common.projector, np.diag([0, 1, 0, 0]))

    def test_intersect_orthogonal(self):
        a = projector_from_basis([KET["00"]])
        b = projector_from_basis([KET["11"]])
        assert subspace_intersect(a, b).rank == 0

    def test_intersect_general_position(self):
        a = projector_from_basis([KET["01"], KET["10"]])
        sym = projector_from_basis([KET["00"], (KET["01"] + KET["10"]) / math.sqrt(2), KET["11"]])
        common = subspace_intersect(a, sym)
        assert common.rank == 1
        v = common.basis[:, 0]
        assert abs(np.vdot(v, (KET["01"] + KET["10"]) / math.sqrt(2))) == pytest.approx(1.0)

    def test_project_and_contains(self):
        sub = Subspace.coordinate(4, [1, 2])
        assert sub.contains(KET["01"])
        assert not sub.contains(KET["00"])
        assert_allclose(sub.project(np.ones(4)), [0, 1, 1, 0])


class TestMatExp:
    @pytest.mark.parametrize("omega,t", [(1.0, 0.3), (2.0, 1.1), (0.5, math.pi)])
    def test_sigma_y_generates_rotation(self, omega, t):
        assert_allclose(mat_exp(Hamiltonian(omega * SIGMA_Y), t), rotation(omega * t), atol=1e-13)

    def test_zero_time(self):
        assert_allclose(mat_exp(Hamiltonian(SIGMA_Y), 0.0), np.eye(2))

    def test_unitary(self):
        rng = np.random.default_rng(7)
        a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        assert is_unitary(mat_exp(a + a.conj().T, 3.7))

    def test_not_hermitian(self):
        with pytest.raises(NotHermitianError):
            mat_exp(np.array([[0, 1], [0, 0]]), 1.0)
        with pytest.raises(NotHermitianError):
            Hamiltonian(np.array([[0, 1], [0, 0]]))


class TestEigen:
    def test_sigma_y(self):
        vals, vecs = eig_hermitian(SIGMA_Y)
        assert_allclose(vals, [-1, 1])
        assert_allclose(vecs.conj().T @ SIGMA_Y @ vecs, np.diag([-1, 1]), atol=1e-14)

    def test_degenerate_diagonal(self):
        vals, _ = eig_hermitian(np.diag([1.0, 2.0, 3.0, 4.0, 0.0, 0.0]))
        assert_allclose(vals, [0, 0, 1, 2, 3, 4])

    def test_size_limit(self):
        m = np.ones((65, 65))
        with pytest.raises(SizeLimitError):
            eig_hermitian(m)

    def test_large_diagonal_is_read_off(self):
        vals, _ = eig_hermitian(np.diag(np.arange(100.0)[::-1]))
        assert vals[0] == 0.0 and vals[-1] == 99.0

    def test_ground_space(self):
        e0, sub = ground_space(np.diag([1.0, 0.0, 0.0, 1.0]))
        assert e0 == 0.0
        assert sub.rank == 2
        assert_allclose(sub.projector, np.diag([0, 1, 1, 0]))


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def random_density(rng, n):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


class TestRandomized:
    def test_mat_exp_of_commuting_sum(self):
        rng = np.random.default_rng(3)
        q, _ = np.linalg.qr(rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5)))
        a = q @ np.diag(rng.normal(size=5)) @ q.conj().T
        b = q @ np.diag(rng.normal(size=5)) @ q.conj().T
        a, b = (a + a.conj().T) / 2, (b + b.conj().T) / 2
        assert_allclose(mat_exp(a, 1.3) @ mat_exp(b, 1.3), mat_exp(a + b, 1.3), atol=1e-12)

    @pytest.mark.parametrize("dims", [(2, 2), (2, 3), (4, 4)])
    def test_partial_trace_by_hand(self, dims):
        rng = np.random.default_rng(sum(dims))
        d0, d1 = dims
        rho = random_density(rng, d0 * d1)
        blocks = rho.reshape(d0, d1, d0, d1)
        keep_first = np.zeros((d0, d0), dtype=complex)
        keep_second = np.zeros((d1, d1), dtype=complex)
        for i in range(d0):
            for j in range(d0):
                keep_first[i, j] = sum(blocks[i, k, j, k] for k in range(d1))
        for i in range(d1):
            for j in range(d1):
                keep_second[i, j] = sum(blocks[k, i, k, j] for k in range(d0))
        first = partial_trace(DensityMatrix(rho, dims), dims, 0).matrix
        second = partial_trace(DensityMatrix(rho, dims), dims, 1).matrix
        assert_allclose(first, keep_first, atol=1e-14)
        assert_allclose(second, keep_second, atol=1e-14)
        assert np.trace(first).real == pytest.approx(1.0, abs=1e-12)
        assert np.trace(second).real == pytest.approx(1.0, abs=1e-12)

    def test_kron_is_associative(self):
        rng = np.random.default_rng(5)
        a, b, c = (random_hermitian(rng, n) for n in (2, 3, 2))
        assert_allclose(kron(kron(a, b), c), kron(a, kron(b, c)), atol=1e-12)
        assert_allclose(kron(a, b, c), kron(a, kron(b, c)), atol=1e-12)


class TestSubspaceConsistency:
    def test_basis_must_match_projector_rank(self):
        with pytest.raises(RankDeficiencyError):
            Subspace(np.eye(4)[:, [1]], np.diag([0.0, 1.0, 1.0, 0.0]))

    def test_basis_must_lie_in_projector_range(self):
        with pytest.raises(RankDeficiencyError):
            Subspace(np.eye(4)[:, [0]], np.diag([0.0, 1.0, 0.0, 0.0]))
