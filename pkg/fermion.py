"""
Four-mode fermionic Fock space for two sites (r, s) carrying one spin-like
qubit each.

Modes are ordered (0r, 1r, 0s, 1s); mode 0 is the most significant bit of the
occupation index. Creation operators carry Jordan-Wigner parity strings over
the preceding modes, so every sign below comes out of the algebra.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Dict, NamedTuple, Optional

import numpy as np

from errors import DimensionError, SectorError
from particle_statistics import SIGMA_Y, SITE_NAMES, TwoParticleSpace
from schemas import PenaltyEnergies
from tensor_core import (
    ALGEBRA_TOL,
    Hamiltonian,
    StateVector,
    Subspace,
    anticommutator,
    dagger,
    eig_hermitian,
    ground_space,
    kron,
    subspace_intersect,
)

logger = logging.getLogger(__name__)

N_MODES = 4
FOCK_DIM = 2 ** N_MODES
FOCK_DIMS = (2,) * N_MODES


class Mode(NamedTuple):
    spin: int
    site: str

    @property
    def name(self) -> str:
        return f"{self.spin}{self.site}"

    @property
    def position(self) -> int:
        return MODES.index(self)


MODES = (Mode(0, "r"), Mode(1, "r"), Mode(0, "s"), Mode(1, "s"))
MODE_NAMES = tuple(m.name for m in MODES)

_PARITY = np.diag([1.0, -1.0]).astype(complex)
_RAISE = np.array([[0, 0], [1, 0]], dtype=complex)
_EYE2 = np.eye(2, dtype=complex)


def mode_index(mode) -> int:
    if isinstance(mode, int):
        if not 0 <= mode < N_MODES:
            raise DimensionError(f"mode index {mode} out of range")
        return mode
    if isinstance(mode, str):
        return MODE_NAMES.index(mode)
    return MODES.index(Mode(*mode))


@lru_cache(maxsize=None)
def _creation(k: int) -> np.ndarray:
    factors = [_PARITY] * k + [_RAISE] + [_EYE2] * (N_MODES - k - 1)
    m = kron(*factors)
    m.setflags(write=False)
    return m


def creation(mode) -> np.ndarray:
    return _creation(mode_index(mode))


def annihilation(mode) -> np.ndarray:
    return dagger(creation(mode))


def vacuum() -> np.ndarray:
    v = np.zeros(FOCK_DIM, dtype=complex)
    v[0] = 1.0
    return v


def occupation_index(modes) -> int:
    return sum(1 << (N_MODES - 1 - mode_index(m)) for m in modes)


def fock_state(amplitudes, normalize: bool = False) -> StateVector:
    return StateVector.from_amplitudes(amplitudes, dims=FOCK_DIMS, names=MODE_NAMES, normalize=normalize)


def anticommutation_residuals() -> Dict[str, float]:
    """Largest entrywise deviation of each family of canonical relations."""
    eye = np.eye(FOCK_DIM)
    worst = {"creation_annihilation": 0.0, "creation_creation": 0.0, "annihilation_annihilation": 0.0}
    for i in range(N_MODES):
        for j in range(N_MODES):
            expected = eye if i == j else 0.0
            ca = anticommutator(creation(i), annihilation(j)) - expected
            cc = anticommutator(creation(i), creation(j))
            aa = anticommutator(annihilation(i), annihilation(j))
            worst["creation_annihilation"] = max(worst["creation_annihilation"], float(np.max(np.abs(ca))))
            worst["creation_creation"] = max(worst["creation_creation"], float(np.max(np.abs(cc))))
            worst["annihilation_annihilation"] = max(worst["annihilation_annihilation"], float(np.max(np.abs(aa))))
    return worst


def number_operator() -> np.ndarray:
    return sum(creation(k) @ annihilation(k) for k in range(N_MODES))


def sector(n: int) -> Subspace:
    """Occupation states with exactly n particles."""
    if not 0 <= n <= N_MODES:
        raise DimensionError(f"particle number {n} out of range")
    indices = [x for x in range(FOCK_DIM) if bin(x).count("1") == n]
    return Subspace.coordinate(FOCK_DIM, indices)


def _create(*modes) -> np.ndarray:
    """a+_m1 a+_m2 ... |0>, leftmost operator applied last."""
    v = vacuum()
    for m in reversed(modes):
        v = creation(m) @ v
    return v


def named_basis() -> Dict[str, StateVector]:
    """The six two-particle states a..f built from the vacuum."""
    root = 1 / math.sqrt(2)
    raw = {
        "a": _create("0r", "1r"),
        "b": _create("0s", "1s"),
        "c": _create("0r", "0s"),
        "d": _create("1r", "1s"),
        "e": root * (_create("0r", "1s") + _create("1r", "0s")),
        "f": root * (_create("0r", "1s") - _create("1r", "0s")),
    }
    return {name: fock_state(vec) for name, vec in raw.items()}


def penalty_hamiltonian(energies: Optional[PenaltyEnergies] = None) -> Hamiltonian:
    """-(E_a a+0r a+1r a0r a1r + E_b ... + E_c ... + E_d ...), assembled term by term."""
    energies = energies or PenaltyEnergies()
    terms = (
        (energies.e_a, "0r", "1r"),
        (energies.e_b, "0s", "1s"),
        (energies.e_c, "0r", "0s"),
        (energies.e_d, "1r", "1s"),
    )
    h = np.zeros((FOCK_DIM, FOCK_DIM), dtype=complex)
    for e, p, q in terms:
        h -= e * (creation(p) @ creation(q) @ annihilation(p) @ annihilation(q))
    return Hamiltonian(h, FOCK_DIMS, "H_rs")


def one_body_operator(g) -> np.ndarray:
    """Second-quantized sum_ij g_ij a+_i a_j of a single-particle operator."""
    g = np.asarray(g, dtype=complex)
    if g.shape != (N_MODES, N_MODES):
        raise DimensionError(f"single-particle operator must be {N_MODES}x{N_MODES}, got {g.shape}")
    out = np.zeros((FOCK_DIM, FOCK_DIM), dtype=complex)
    for i in range(N_MODES):
        for j in range(N_MODES):
            if g[i, j] != 0:
                out += g[i, j] * creation(i) @ annihilation(j)
    return out


class QubitEmbedding:
    """
    Bijection between the two-qubit space |x>_r|y>_s and the one-particle-per-site
    Fock states a+_{x r} a+_{y s}|0>.
    """

    QUBIT_MODES = (("0r", "0s"), ("0r", "1s"), ("1r", "0s"), ("1r", "1s"))

    def __init__(self):
        self.isometry = np.column_stack([_create(*pair) for pair in self.QUBIT_MODES])
        self.isometry.setflags(write=False)
        self.fock_indices = tuple(occupation_index(pair) for pair in self.QUBIT_MODES)

    @property
    def projector(self) -> np.ndarray:
        return self.isometry @ self.isometry.conj().T

    def subspace(self) -> Subspace:
        return Subspace.from_orthonormal(self.isometry)

    def lift_state(self, state: StateVector) -> StateVector:
        if state.dim != 4:
            raise DimensionError(f"qubit state must have 4 amplitudes, got {state.dim}")
        return fock_state(self.isometry @ state.amplitudes)

    def lower_state(self, state: StateVector, tol: float = 1e-10) -> StateVector:
        if state.dim != FOCK_DIM:
            raise DimensionError(f"Fock state must have {FOCK_DIM} amplitudes, got {state.dim}")
        leak = np.linalg.norm(state.amplitudes - self.projector @ state.amplitudes)
        if leak > tol:
            raise SectorError(f"state has weight {leak:.3e} outside the one-particle-per-site sector")
        return StateVector.from_amplitudes(
            self.isometry.conj().T @ state.amplitudes, dims=(2, 2), names=SITE_NAMES, normalize=True
        )

    def lift_operator(self, op) -> np.ndarray:
        m = op.matrix if isinstance(op, Hamiltonian) else np.asarray(op, dtype=complex)
        if m.shape != (4, 4):
            raise DimensionError(f"qubit operator must be 4x4, got {m.shape}")
        return self.isometry @ m @ self.isometry.conj().T

    def lower_operator(self, op, tol: float = 1e-10) -> np.ndarray:
        m = op.matrix if isinstance(op, Hamiltonian) else np.asarray(op, dtype=complex)
        if m.shape != (FOCK_DIM, FOCK_DIM):
            raise DimensionError(f"Fock operator must be {FOCK_DIM}x{FOCK_DIM}, got {m.shape}")
        image = m @ self.isometry
        leak = np.linalg.norm(image - self.projector @ image)
        if leak > tol:
            raise SectorError(f"operator leaks {leak:.3e} out of the one-particle-per-site sector")
        return self.isometry.conj().T @ image

    def lower_hamiltonian(self, h: Hamiltonian) -> Hamiltonian:
        return Hamiltonian(self.lower_operator(h), (2, 2), h.label)


EMBEDDING = QubitEmbedding()


@dataclass(frozen=True, eq=False)
class AntisymmetrizerIdentification:
    subspace: Subspace
    identification: np.ndarray  # first-quantized (16) x Fock (16), supported on sector(2)
    gram_fidelity: float

    def first_quantized(self, state: StateVector) -> StateVector:
        """The antisymmetrized first-quantized vector a two-particle Fock state denotes."""
        if state.dim != FOCK_DIM:
            raise DimensionError(f"expected a Fock state, got {state.dim} amplitudes")
        return StateVector.from_amplitudes(
            self.identification @ state.amplitudes, dims=(N_MODES, N_MODES), normalize=True
        )


def first_quantized_antisymmetrizer() -> AntisymmetrizerIdentification:
    """A12 on (site x spin)^2 and its identification with the two-particle sector."""
    space = TwoParticleSpace(N_MODES)
    anti = space.antisymmetric_subspace()
    w = np.zeros((N_MODES * N_MODES, FOCK_DIM), dtype=complex)
    root = 1 / math.sqrt(2)
    for i, j in combinations(range(N_MODES), 2):
        col = occupation_index((i, j))
        w[i * N_MODES + j, col] = root
        w[j * N_MODES + i, col] = -root
    images = w[:, sector(2).support()]
    overlap = anti.basis.conj().T @ images
    fidelity = float(np.min(np.linalg.svd(overlap, compute_uv=False)) ** 2)
    logger.debug("antisymmetrizer rank %d, identification fidelity %.15f", anti.rank, fidelity)
    return AntisymmetrizerIdentification(anti, w, fidelity)


def generic_ground_state(alpha: complex, beta: complex) -> StateVector:
    """alpha|0>_r|1>_s + beta|1>_r|0>_s, normalized and lifted into the Fock space."""
    qubit = StateVector.from_amplitudes([0, alpha, beta, 0], dims=(2, 2), names=SITE_NAMES, normalize=True)
    return EMBEDDING.lift_state(qubit)


def ground_space_constraint(energies: Optional[PenaltyEnergies] = None) -> Subspace:
    """Two-particle sector intersected with the H_rs ground space."""
    _, ground = ground_space(penalty_hamiltonian(energies))
    return subspace_intersect(sector(2), ground)


def commutator_check(
    energies: Optional[PenaltyEnergies] = None,
    omega: float = 1.0,
    embedded: bool = True,
) -> float:
    """
    Spectral norm of [G, H_rs] on the qubit sector.

    With embedded=True, G is the drive transported onto the NOT-gate constrained
    subspace; otherwise it is the bare omega sigma_y on qubit r.
    """
    from network import embed_drive, not_gate_network

    h = EMBEDDING.lower_operator(penalty_hamiltonian(energies))
    if embedded:
        g = embed_drive(not_gate_network(), driven_qubit=0, omega=omega).generator.matrix
    else:
        g = omega * kron(SIGMA_Y, np.eye(2))
    residual = float(np.linalg.norm(g @ h - h @ g, 2))
    if residual > ALGEBRA_TOL and embedded:
        logger.warning("embedded drive fails to commute with H_rs, residual %.3e", residual)
    return residual


def sector_spectrum(energies: Optional[PenaltyEnergies] = None) -> np.ndarray:
    """Ascending eigenvalues of H_rs restricted to the two-particle sector."""
    idx = sector(2).support()
    h = penalty_hamiltonian(energies).matrix[np.ix_(idx, idx)]
    return eig_hermitian(h)[0]
