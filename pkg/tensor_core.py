"""
Dense complex linear algebra for small Hilbert spaces.

Value types (StateVector, DensityMatrix, Subspace, Hamiltonian) wrap read-only
numpy arrays and validate their invariants on construction, so anything that
reaches an engine is already normalized, Hermitian or idempotent.

Tolerances:
    1e-12  construction (norm, hermiticity, trace)
    1e-10  algebraic identities (unitarity, idempotence)
    1e-8   rank decisions
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import reduce
from math import prod
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as la

from errors import (
    DimensionError,
    NormalizationError,
    NotHermitianError,
    RankDeficiencyError,
    SizeLimitError,
)

logger = logging.getLogger(__name__)

CONSTRUCTION_TOL = 1e-12
ALGEBRA_TOL = 1e-10
RANK_TOL = 1e-8
MAX_DENSE_EIG_DIM = 64
MAX_AMPLITUDES = 2 ** 12

ComplexMatrix = np.ndarray


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=complex, copy=True)
    out.setflags(write=False)
    return out


def as_matrix(m) -> ComplexMatrix:
    if isinstance(m, Hamiltonian):
        return m.matrix
    if isinstance(m, DensityMatrix):
        return m.matrix
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {arr.shape}")
    return arr


def dagger(m) -> ComplexMatrix:
    return as_matrix(m).conj().T


def is_hermitian(m, tol: float = CONSTRUCTION_TOL) -> bool:
    arr = as_matrix(m)
    if arr.shape[0] != arr.shape[1]:
        return False
    return bool(np.max(np.abs(arr - arr.conj().T), initial=0.0) <= tol)


def is_unitary(u, tol: float = ALGEBRA_TOL) -> bool:
    arr = as_matrix(u)
    if arr.shape[0] != arr.shape[1]:
        return False
    drift = arr.conj().T @ arr - np.eye(arr.shape[0])
    return bool(np.max(np.abs(drift), initial=0.0) <= tol)


def is_diagonal(m, tol: float = CONSTRUCTION_TOL) -> bool:
    arr = as_matrix(m)
    off = arr - np.diag(np.diag(arr))
    return bool(np.max(np.abs(off), initial=0.0) <= tol)


def commutator(a, b) -> ComplexMatrix:
    a, b = as_matrix(a), as_matrix(b)
    return a @ b - b @ a


def anticommutator(a, b) -> ComplexMatrix:
    a, b = as_matrix(a), as_matrix(b)
    return a @ b + b @ a


def basis_labels(dims: Sequence[int], names: Optional[Sequence[str]] = None) -> Tuple[str, ...]:
    """Labels of the computational product basis, e.g. '|0⟩_r|1⟩_s'."""
    dims = tuple(int(d) for d in dims)
    if len(dims) == 1 and names is None:
        return tuple(f"|{k}⟩" for k in range(dims[0]))
    if names is None:
        names = [str(i + 1) for i in range(len(dims))]
    if len(names) != len(dims):
        raise DimensionError(f"{len(names)} subsystem names for {len(dims)} subsystems")
    labels = []
    for digits in np.ndindex(*dims):
        labels.append("".join(f"|{v}⟩_{name}" for v, name in zip(digits, names)))
    return tuple(labels)


def canonical_phase(vec: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the first significant amplitude is real and >= 0."""
    significant = np.flatnonzero(np.abs(vec) > CONSTRUCTION_TOL)
    if significant.size == 0:
        return vec
    lead = vec[significant[0]]
    return vec * (np.conj(lead) / abs(lead))


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    dims: Tuple[int, ...]
    labels: Tuple[str, ...]

    @classmethod
    def from_amplitudes(
        cls,
        amplitudes,
        dims: Optional[Sequence[int]] = None,
        labels: Optional[Sequence[str]] = None,
        names: Optional[Sequence[str]] = None,
        normalize: bool = False,
    ) -> "StateVector":
        vec = np.asarray(amplitudes, dtype=complex).ravel()
        if vec.size > MAX_AMPLITUDES:
            raise SizeLimitError(f"{vec.size} amplitudes exceed the {MAX_AMPLITUDES} limit")
        dims = (vec.size,) if dims is None else tuple(int(d) for d in dims)
        if prod(dims) != vec.size:
            raise DimensionError(f"dims {dims} do not match {vec.size} amplitudes")
        norm = float(np.linalg.norm(vec))
        if normalize:
            if norm < CONSTRUCTION_TOL:
                raise NormalizationError("cannot normalize a zero vector")
            vec = vec / norm
        elif abs(norm - 1.0) > CONSTRUCTION_TOL:
            raise NormalizationError(f"amplitudes have norm {norm!r}, expected 1")
        labels = basis_labels(dims, names) if labels is None else tuple(labels)
        if len(labels) != vec.size:
            raise DimensionError(f"{len(labels)} labels for {vec.size} amplitudes")
        return cls(_frozen(canonical_phase(vec)), dims, labels)

    @classmethod
    def basis_state(cls, index: int, dims: Sequence[int], names: Optional[Sequence[str]] = None) -> "StateVector":
        vec = np.zeros(prod(dims), dtype=complex)
        vec[index] = 1.0
        return cls.from_amplitudes(vec, dims=dims, names=names)

    def replace(self, amplitudes, normalize: bool = True) -> "StateVector":
        """Same space and labels, new amplitudes."""
        return StateVector.from_amplitudes(amplitudes, dims=self.dims, labels=self.labels, normalize=normalize)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def inner(self, other: Union["StateVector", np.ndarray]) -> complex:
        """<self|other>"""
        other_vec = other.amplitudes if isinstance(other, StateVector) else np.asarray(other)
        return complex(np.vdot(self.amplitudes, other_vec))

    def fidelity(self, other: Union["StateVector", np.ndarray]) -> float:
        return abs(self.inner(other)) ** 2

    def distance(self, other: "StateVector") -> float:
        return float(np.linalg.norm(self.amplitudes - other.amplitudes))

    def phase_distance(self, other: "StateVector") -> float:
        """Distance after aligning the global phase of `other` to this state."""
        overlap = np.vdot(other.amplitudes, self.amplitudes)
        phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
        return float(np.linalg.norm(self.amplitudes - phase * other.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def marginal(self, keep: int) -> np.ndarray:
        """Diagonal of the reduced density matrix of subsystem `keep`."""
        return marginal_probabilities(self.amplitudes, self.dims, keep)

    def density(self) -> "DensityMatrix":
        return DensityMatrix.from_state(self)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray
    dims: Tuple[int, ...]

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got {m.shape}")
        if prod(self.dims) != m.shape[0]:
            raise DimensionError(f"dims {self.dims} do not match dimension {m.shape[0]}")
        if not is_hermitian(m, CONSTRUCTION_TOL):
            raise NotHermitianError("density matrix is not Hermitian")
        trace = complex(np.trace(m))
        if abs(trace - 1.0) > CONSTRUCTION_TOL:
            raise NormalizationError(f"density matrix trace is {trace!r}")
        if np.min(np.linalg.eigvalsh(m)) < -ALGEBRA_TOL:
            raise NormalizationError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        psi = state.amplitudes
        return cls(np.outer(psi, psi.conj()), state.dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()


@dataclass(frozen=True, eq=False)
class Subspace:
    basis: np.ndarray
    projector: np.ndarray

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=complex)
        proj = np.asarray(self.projector, dtype=complex)
        if basis.ndim != 2 or proj.shape != (basis.shape[0], basis.shape[0]):
            raise DimensionError(f"basis {basis.shape} and projector {proj.shape} disagree")
        if np.max(np.abs(proj @ proj - proj), initial=0.0) > ALGEBRA_TOL or not is_hermitian(proj, ALGEBRA_TOL):
            raise RankDeficiencyError("projector is not an orthogonal projector")
        trace = float(np.trace(proj).real)
        if abs(trace - basis.shape[1]) > ALGEBRA_TOL * max(1, basis.shape[0]):
            raise RankDeficiencyError(f"projector has rank {trace:.6g} but the basis has {basis.shape[1]} columns")
        if np.max(np.abs(proj @ basis - basis), initial=0.0) > ALGEBRA_TOL:
            raise RankDeficiencyError("basis columns lie outside the projector's range")
        object.__setattr__(self, "basis", _frozen(basis))
        object.__setattr__(self, "projector", _frozen(proj))

    @classmethod
    def from_orthonormal(cls, basis: np.ndarray) -> "Subspace":
        basis = np.asarray(basis, dtype=complex)
        return cls(basis, basis @ basis.conj().T)

    @classmethod
    def full(cls, dim: int) -> "Subspace":
        return cls.from_orthonormal(np.eye(dim, dtype=complex))

    @classmethod
    def empty(cls, dim: int) -> "Subspace":
        return cls(np.zeros((dim, 0), dtype=complex), np.zeros((dim, dim), dtype=complex))

    @classmethod
    def coordinate(cls, dim: int, indices: Sequence[int]) -> "Subspace":
        """Span of computational basis vectors."""
        indices = sorted(int(i) for i in indices)
        basis = np.zeros((dim, len(indices)), dtype=complex)
        for col, idx in enumerate(indices):
            basis[idx, col] = 1.0
        return cls.from_orthonormal(basis)

    @classmethod
    def from_projector(cls, projector) -> "Subspace":
        proj = as_matrix(projector)
        vals, vecs = np.linalg.eigh((proj + proj.conj().T) / 2)
        keep = vals > 0.5
        return cls(vecs[:, keep], proj)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def is_coordinate(self) -> bool:
        return is_diagonal(self.projector, ALGEBRA_TOL)

    def support(self) -> np.ndarray:
        """Basis indices spanned by a coordinate subspace."""
        return np.flatnonzero(np.real(np.diag(self.projector)) > 0.5)

    def project(self, vec) -> np.ndarray:
        vec = vec.amplitudes if isinstance(vec, StateVector) else np.asarray(vec, dtype=complex)
        if self.is_coordinate():
            out = np.zeros_like(vec)
            idx = self.support()
            out[idx] = vec[idx]
            return out
        return self.projector @ vec

    def contains(self, vec, tol: float = RANK_TOL) -> bool:
        vec = vec.amplitudes if isinstance(vec, StateVector) else np.asarray(vec, dtype=complex)
        return bool(np.linalg.norm(self.project(vec) - vec) <= tol)


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """Hermitian generator; propagators follow U(t) = exp(-iHt)."""

    matrix: np.ndarray
    dims: Tuple[int, ...] = ()
    label: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"Hamiltonian must be square, got {m.shape}")
        if not is_hermitian(m, CONSTRUCTION_TOL):
            raise NotHermitianError(f"{self.label or 'Hamiltonian'} is not Hermitian")
        dims = tuple(int(d) for d in self.dims) or (m.shape[0],)
        if prod(dims) != m.shape[0]:
            raise DimensionError(f"dims {dims} do not match dimension {m.shape[0]}")
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "dims", dims)

    @classmethod
    def zero(cls, dims: Sequence[int], label: str = "0") -> "Hamiltonian":
        d = prod(dims)
        return cls(np.zeros((d, d), dtype=complex), tuple(dims), label)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def scaled(self, factor: float, label: Optional[str] = None) -> "Hamiltonian":
        return Hamiltonian(self.matrix * factor, self.dims, label or self.label)

    def expectation(self, state) -> float:
        vec = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
        if self.is_diagonal():
            return float(np.real(np.diag(self.matrix)) @ (np.abs(vec) ** 2))
        return float(np.real(np.vdot(vec, self.matrix @ vec)))

    def is_diagonal(self) -> bool:
        return is_diagonal(self.matrix)

    def commutator_norm(self, other) -> float:
        return float(np.linalg.norm(commutator(self.matrix, as_matrix(other)), 2))

    def propagator(self, t: float) -> ComplexMatrix:
        return mat_exp(self, t)


def kron(*factors) -> ComplexMatrix:
    """Kronecker product of any number of factors, left factor slowest."""
    if not factors:
        raise DimensionError("kron needs at least one factor")
    return reduce(np.kron, (as_matrix(f) for f in factors))


def marginal_probabilities(amplitudes: np.ndarray, dims: Sequence[int], keep: int) -> np.ndarray:
    dims = tuple(dims)
    if not 0 <= keep < len(dims):
        raise DimensionError(f"subsystem {keep} out of range for dims {dims}")
    probs = (np.abs(np.asarray(amplitudes)) ** 2).reshape(dims)
    others = tuple(i for i in range(len(dims)) if i != keep)
    return probs.sum(axis=others) if others else probs


def reduced_density(state: StateVector, keep: int) -> DensityMatrix:
    """Partial trace of a pure state without forming the full density matrix."""
    dims = state.dims
    if not 0 <= keep < len(dims):
        raise DimensionError(f"subsystem {keep} out of range for dims {dims}")
    psi = np.moveaxis(state.amplitudes.reshape(dims), keep, 0).reshape(dims[keep], -1)
    return DensityMatrix(psi @ psi.conj().T, (dims[keep],))


def partial_trace(rho: Union[DensityMatrix, np.ndarray], dims: Sequence[int], keep: int) -> DensityMatrix:
    """Reduced density matrix of subsystem `keep`; every other subsystem is traced out."""
    matrix = as_matrix(rho)
    dims = tuple(int(d) for d in dims)
    if prod(dims) != matrix.shape[0]:
        raise DimensionError(f"dims {dims} do not match density dimension {matrix.shape[0]}")
    if not 0 <= keep < len(dims):
        raise DimensionError(f"subsystem {keep} out of range for dims {dims}")
    n = len(dims)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = list(letters[:n])
    cols = list(letters[n:2 * n])
    for i in range(n):
        if i != keep:
            cols[i] = rows[i]
    spec = "".join(rows) + "".join(cols) + "->" + rows[keep] + cols[keep]
    reduced = np.einsum(spec, matrix.reshape(dims + dims))
    return DensityMatrix(reduced, (dims[keep],))


def projector_from_basis(vectors: Sequence[Union[StateVector, np.ndarray]]) -> Subspace:
    """Orthonormalize by modified Gram-Schmidt and build the projector."""
    columns = [v.amplitudes if isinstance(v, StateVector) else np.asarray(v, dtype=complex).ravel() for v in vectors]
    if not columns:
        raise RankDeficiencyError("no basis vectors given")
    dim = columns[0].size
    if any(c.size != dim for c in columns):
        raise DimensionError("basis vectors have different dimensions")
    basis = []
    for k, col in enumerate(columns):
        w = np.array(col, dtype=complex)
        for q in basis:
            w = w - np.vdot(q, w) * q
        norm = np.linalg.norm(w)
        if norm < RANK_TOL * max(1.0, np.linalg.norm(col)):
            raise RankDeficiencyError(f"vector {k} is linearly dependent on the previous ones")
        basis.append(w / norm)
    return Subspace.from_orthonormal(np.column_stack(basis))


def subspace_intersect(a: Subspace, b: Subspace) -> Subspace:
    """Eigenspace of P_a + P_b at eigenvalue 2."""
    if a.ambient_dim != b.ambient_dim:
        raise DimensionError(f"ambient dims {a.ambient_dim} and {b.ambient_dim} differ")
    if a.rank == 0 or b.rank == 0:
        return Subspace.empty(a.ambient_dim)
    if a.is_coordinate() and b.is_coordinate():
        common = np.intersect1d(a.support(), b.support())
        return Subspace.coordinate(a.ambient_dim, common)
    vals, vecs = np.linalg.eigh(a.projector + b.projector)
    keep = vals > 2.0 - RANK_TOL
    return Subspace.from_orthonormal(vecs[:, keep])


def mat_exp(h: Union[Hamiltonian, np.ndarray], t: float) -> ComplexMatrix:
    """exp(-iHt) by Pade scaling-and-squaring, with a polar correction on unitarity drift."""
    matrix = as_matrix(h)
    if not is_hermitian(matrix, CONSTRUCTION_TOL):
        raise NotHermitianError("mat_exp needs a Hermitian generator")
    if t == 0:
        return np.eye(matrix.shape[0], dtype=complex)
    u = la.expm(-1j * float(t) * matrix)
    drift = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])), initial=0.0)
    if drift > ALGEBRA_TOL:
        logger.debug("restoring unitarity, drift %.3e at t=%r", drift, t)
        u, _ = la.polar(u)
    return u


def eig_hermitian(h: Union[Hamiltonian, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvector columns."""
    matrix = as_matrix(h)
    if not is_hermitian(matrix, CONSTRUCTION_TOL):
        raise NotHermitianError("eig_hermitian needs a Hermitian matrix")
    if is_diagonal(matrix):
        vals = np.real(np.diag(matrix))
        order = np.argsort(vals, kind="stable")
        return vals[order].copy(), np.eye(matrix.shape[0], dtype=complex)[:, order]
    if matrix.shape[0] > MAX_DENSE_EIG_DIM:
        raise SizeLimitError(
            f"dense eigensolver limited to dim {MAX_DENSE_EIG_DIM}, got {matrix.shape[0]}"
        )
    vals, vecs = np.linalg.eigh(matrix)
    return vals, vecs


def ground_space(h: Union[Hamiltonian, np.ndarray], tol: float = RANK_TOL) -> Tuple[float, Subspace]:
    vals, vecs = eig_hermitian(h)
    keep = vals <= vals[0] + tol
    return float(vals[0]), Subspace.from_orthonormal(vecs[:, keep])
