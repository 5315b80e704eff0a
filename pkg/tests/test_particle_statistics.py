import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from errors import DimensionError, InvalidTargetError
from particle_statistics import (
    DRIVE_SENSE,
    SIGMA_Y,
    TwoParticleSpace,
    free_vector_decomposition,
    not_gate_closed_form,
    pair_drive,
    rotation,
    single_drive,
    swap_operator,
    symmetrize_drive,
    symmetrize_two_particle,
    triplet_closed_form,
)
from schemas import DriveSpec
from tensor_core import kron, mat_exp

G12_LITERAL = 0.5 * np.array(
    [[0, 1j, 1j, 0], [-1j, 0, 0, 1j], [-1j, 0, 0, 1j], [0, -1j, -1j, 0]]
)


class TestSpaces:
    def test_swap_exchanges_particles(self):
        p = swap_operator(2)
        assert_allclose(p @ np.array([0, 1, 0, 0]), [0, 0, 1, 0])
        assert_allclose(p @ p, np.eye(4))

    @pytest.mark.parametrize("d,sym_rank,anti_rank", [(2, 3, 1), (3, 6, 3), (4, 10, 6)])
    def test_ranks(self, d, sym_rank, anti_rank):
        space = TwoParticleSpace(d)
        assert space.symmetric_subspace().rank == sym_rank
        assert space.antisymmetric_subspace().rank == anti_rank
        assert_allclose(space.symmetrizer + space.antisymmetrizer, np.eye(d * d))

    def test_single_state_space_rejected(self):
        with pytest.raises(DimensionError):
            TwoParticleSpace(1)


class TestClosedForms:
    def test_triplet_at_quarter_pi(self):
        assert_allclose(triplet_closed_form(math.pi / 4, 1.0, 0.0).amplitudes, [0.5] * 4, atol=1e-15)

    def test_triplet_is_symmetric(self):
        state = triplet_closed_form(0.3, 1.0, 0.7)
        assert free_vector_decomposition(state).is_symmetric

    def test_not_gate_marginals(self):
        state = not_gate_closed_form(math.pi / 4, 1.0, 0.0)
        assert_allclose(state.marginal(0), [0.5, 0.5])
        assert_allclose(state.marginal(1), [0.5, 0.5])

    def test_not_gate_quarter_period(self):
        state = not_gate_closed_form(0.0, 1.0, math.pi / 2)
        assert abs(state.amplitudes[2]) == pytest.approx(1.0)


class TestDrives:
    def test_single_drive_targets(self):
        g1 = single_drive(DriveSpec(omega=2.0, target=1))
        g2 = single_drive(DriveSpec(omega=2.0, target=2))
        assert_allclose(g1.matrix, 2.0 * kron(SIGMA_Y, np.eye(2)))
        assert_allclose(g2.matrix, 2.0 * kron(np.eye(2), SIGMA_Y))

    def test_single_drive_target_out_of_range(self):
        with pytest.raises(InvalidTargetError):
            single_drive(DriveSpec(omega=1.0, target=3))

    def test_symmetrized_sigma_y_literal(self):
        assert_allclose(symmetrize_drive(SIGMA_Y).matrix, G12_LITERAL)

    def test_symmetrized_zero(self):
        assert_allclose(symmetrize_drive(np.zeros((2, 2))).matrix, np.zeros((4, 4)))

    def test_symmetrized_propagator_runs_at_half_rate(self):
        u = mat_exp(symmetrize_drive(SIGMA_Y), 1.2)
        assert_allclose(u, kron(rotation(0.6), rotation(0.6)), atol=1e-13)

    def test_two_particle_symmetrization_agrees(self):
        g1 = single_drive(DriveSpec(omega=1.0, target=1))
        assert_allclose(symmetrize_two_particle(g1).matrix, G12_LITERAL, atol=1e-15)

    def test_pair_drive_rotates_each_particle(self):
        assert_allclose(mat_exp(pair_drive(1.0), 0.9), kron(rotation(0.9), rotation(0.9)), atol=1e-13)

    def test_drive_sense_reproduces_triplet(self):
        theta0, omega, t = math.pi / 6, 1.0, 0.4
        u = mat_exp(pair_drive(DRIVE_SENSE * omega), t)
        start = triplet_closed_form(theta0, omega, 0.0).amplitudes
        assert_allclose(u @ start, triplet_closed_form(theta0, omega, t).amplitudes, atol=1e-13)


class TestFreeVectors:
    def test_basis_state_splits_evenly(self):
        from tensor_core import StateVector

        parts = free_vector_decomposition(StateVector.basis_state(1, (2, 2)))
        assert_allclose(parts.symmetric, [0, 0.5, 0.5, 0])
        assert_allclose(parts.antisymmetric, [0, 0.5, -0.5, 0])
        assert parts.antisymmetric_amplitude == pytest.approx(0.5)
        assert not parts.is_symmetric

    def test_rejects_single_particle(self):
        from tensor_core import StateVector

        with pytest.raises(DimensionError):
            free_vector_decomposition(StateVector.basis_state(0, (4,)))


class TestRandomizedDrives:
    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_symmetrized_drive_commutes_with_swap(self, d):
        rng = np.random.default_rng(d)
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        g = (g + g.conj().T) / 2
        h = symmetrize_drive(g).matrix
        p = swap_operator(d)
        assert_allclose(h @ p - p @ h, 0.0, atol=1e-14)

    def test_rotations_reproduce_triplet(self):
        from tensor_core import StateVector

        rng = np.random.default_rng(20)
        for theta0, wt in rng.uniform(0.0, 2 * math.pi, size=(20, 2)):
            q = rotation(DRIVE_SENSE * wt)
            start = triplet_closed_form(theta0, 1.0, 0.0).amplitudes
            moved = StateVector.from_amplitudes(kron(q, q) @ start, dims=(2, 2))
            assert moved.phase_distance(triplet_closed_form(theta0, 1.0, wt)) <= 1e-12
