"""
Two-particle statistics: permutation, (anti)symmetrizers, drives and the
closed-form rotations they are checked against.

Single-particle spaces of dimension 2m are ordered site-major: index
``site * 2 + spin``. Drives act with sigma_y on the spin factor.
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Union

import numpy as np

from errors import DimensionError, InvalidTargetError
from schemas import DriveSpec
from tensor_core import (
    Hamiltonian,
    StateVector,
    Subspace,
    as_matrix,
    kron,
)

logger = logging.getLogger(__name__)

SIGMA_Y = np.array([[0, 1j], [-1j, 0]], dtype=complex)

# exp(-i w sigma_y t) carries (cos a, sin a) to (cos(a - w t), sin(a - w t)):
# a drive at frequency w traces the closed forms at frequency DRIVE_SENSE * w.
DRIVE_SENSE = -1

PAIR_NAMES = ("1", "2")
SITE_NAMES = ("r", "s")


def rotation(angle: float) -> np.ndarray:
    """Q(angle) = [[cos, sin], [-sin, cos]]"""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, s], [-s, c]], dtype=complex)


def swap_operator(d: int) -> np.ndarray:
    """P12 |i>|j> = |j>|i> on the d*d product basis."""
    if d < 2:
        raise DimensionError(f"per-particle dimension must be >= 2, got {d}")
    p = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            p[j * d + i, i * d + j] = 1.0
    return p


@dataclass(frozen=True)
class TwoParticleSpace:
    per_particle_dim: int = 2

    def __post_init__(self):
        if self.per_particle_dim < 2:
            raise DimensionError(f"per-particle dimension must be >= 2, got {self.per_particle_dim}")

    @property
    def ambient_dim(self) -> int:
        return self.per_particle_dim ** 2

    @property
    def dims(self):
        return (self.per_particle_dim, self.per_particle_dim)

    @cached_property
    def swap(self) -> np.ndarray:
        return swap_operator(self.per_particle_dim)

    @cached_property
    def symmetrizer(self) -> np.ndarray:
        return (np.eye(self.ambient_dim) + self.swap) / 2

    @cached_property
    def antisymmetrizer(self) -> np.ndarray:
        return (np.eye(self.ambient_dim) - self.swap) / 2

    def symmetric_subspace(self) -> Subspace:
        return Subspace.from_projector(self.symmetrizer)

    def antisymmetric_subspace(self) -> Subspace:
        return Subspace.from_projector(self.antisymmetrizer)


def symmetric_subspace(d: int = 2) -> Subspace:
    return TwoParticleSpace(d).symmetric_subspace()


def antisymmetric_subspace(d: int = 2) -> Subspace:
    return TwoParticleSpace(d).antisymmetric_subspace()


def triplet_closed_form(theta0: float, omega: float, t: float) -> StateVector:
    """Product rotation of |00>: (cos^2, sin cos, sin cos, sin^2) of theta0 + omega t."""
    phi = theta0 + omega * t
    c, s = math.cos(phi), math.sin(phi)
    return StateVector.from_amplitudes([c * c, s * c, s * c, s * s], dims=(2, 2), names=PAIR_NAMES)


def not_gate_closed_form(theta0: float, omega: float, t: float) -> StateVector:
    """cos(phi)|0>_r|1>_s + sin(phi)|1>_r|0>_s with phi = theta0 + omega t."""
    phi = theta0 + omega * t
    return StateVector.from_amplitudes(
        [0.0, math.cos(phi), math.sin(phi), 0.0], dims=(2, 2), names=SITE_NAMES
    )


def local_sigma_y(per_particle_dim: int) -> np.ndarray:
    if per_particle_dim % 2:
        raise DimensionError(f"sigma_y needs an even per-particle dimension, got {per_particle_dim}")
    return kron(np.eye(per_particle_dim // 2), SIGMA_Y)


def single_drive(spec: DriveSpec, n_particles: int = 2, per_particle_dim: int = 2) -> Hamiltonian:
    """omega * sigma_y on the target particle, identity on the others."""
    if not 1 <= spec.target <= n_particles:
        raise InvalidTargetError(f"target {spec.target} outside particles 1..{n_particles}")
    factors = [np.eye(per_particle_dim, dtype=complex)] * n_particles
    factors[spec.target - 1] = local_sigma_y(per_particle_dim)
    return Hamiltonian(
        spec.omega * kron(*factors),
        (per_particle_dim,) * n_particles,
        f"G_{spec.target}",
    )


def symmetrize_drive(g: Union[Hamiltonian, np.ndarray]) -> Hamiltonian:
    """1/2 (g x 1 + 1 x g) for a single-particle generator g."""
    m = as_matrix(g)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"single-particle generator must be square, got {m.shape}")
    d = m.shape[0]
    eye = np.eye(d, dtype=complex)
    return Hamiltonian((kron(m, eye) + kron(eye, m)) / 2, (d, d), "G_12")


def symmetrize_two_particle(g: Union[Hamiltonian, np.ndarray], per_particle_dim: Optional[int] = None) -> Hamiltonian:
    """1/2 (G + P12 G P12) for a generator already on the two-particle space."""
    m = as_matrix(g)
    d = per_particle_dim or int(round(math.sqrt(m.shape[0])))
    if d * d != m.shape[0]:
        raise DimensionError(f"dimension {m.shape[0]} is not a two-particle space")
    p = swap_operator(d)
    return Hamiltonian((m + p @ m @ p) / 2, (d, d), "sym(G)")


def pair_drive(omega: float, per_particle_dim: int = 2) -> Hamiltonian:
    """G_1 + G_2: rotates each particle at omega."""
    g1 = single_drive(DriveSpec(omega=omega, target=1), 2, per_particle_dim)
    g2 = single_drive(DriveSpec(omega=omega, target=2), 2, per_particle_dim)
    return Hamiltonian(g1.matrix + g2.matrix, g1.dims, "G_1+G_2")


@dataclass(frozen=True)
class FreeVectorParts:
    symmetric: np.ndarray
    antisymmetric: np.ndarray
    antisymmetric_amplitude: complex

    @property
    def is_symmetric(self) -> bool:
        return abs(self.antisymmetric_amplitude) <= 1e-12 and float(np.linalg.norm(self.antisymmetric)) <= 1e-12


def free_vector_decomposition(state: StateVector) -> FreeVectorParts:
    """Split a free two-particle vector into its S12 and A12 components."""
    if len(state.dims) != 2 or state.dims[0] != state.dims[1]:
        raise DimensionError(f"expected a two-particle state, got dims {state.dims}")
    space = TwoParticleSpace(state.dims[0])
    psi = state.amplitudes
    d = space.per_particle_dim
    return FreeVectorParts(
        symmetric=space.symmetrizer @ psi,
        antisymmetric=space.antisymmetrizer @ psi,
        antisymmetric_amplitude=complex((psi[1] - psi[d]) / 2),
    )
