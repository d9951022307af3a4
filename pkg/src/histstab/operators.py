"""Dense operator primitives.

Operators are plain read-only complex ``numpy`` arrays. ``Projector`` and
``DensityMatrix`` wrap an array together with the checks that make it one.
Units are chosen so that hbar = 1, and composite spaces are always ordered
environment (x) system.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, StructuralError

TAU_STRUCT = 1e-10


def as_operator(m, name: str = "operator") -> np.ndarray:
    """Return a read-only complex copy of ``m`` after checking it is square and finite."""
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise StructuralError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise StructuralError(f"{name} has non-finite entries")
    a.setflags(write=False)
    return a


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def max_abs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


def is_hermitian(m: np.ndarray, tol: float = TAU_STRUCT) -> bool:
    return max_abs(m - dagger(m)) <= tol


def is_unitary(m: np.ndarray, tol: float = TAU_STRUCT) -> bool:
    return max_abs(m @ dagger(m) - np.eye(m.shape[0])) <= tol


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


@dataclass(frozen=True, eq=False)
class Projector:
    """Orthogonal projector. ``rank`` is the rounded trace."""

    matrix: np.ndarray
    label: str = ""
    rank: int = field(init=False)

    def __post_init__(self, tol: float = TAU_STRUCT):
        m = as_operator(self.matrix, "projector")
        if not is_hermitian(m, tol):
            raise StructuralError(f"projector {self.label!r} is not Hermitian")
        if max_abs(m @ m - m) > tol:
            raise StructuralError(f"projector {self.label!r} is not idempotent")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "rank", int(round(np.trace(m).real)))

    @classmethod
    def checked(cls, matrix, label: str = "", tol: float = TAU_STRUCT) -> "Projector":
        """Construct with a non-default structural tolerance."""
        obj = cls.__new__(cls)
        object.__setattr__(obj, "matrix", matrix)
        object.__setattr__(obj, "label", label)
        obj.__post_init__(tol)
        return obj

    @classmethod
    def _trusted(cls, matrix: np.ndarray, label: str, rank: int) -> "Projector":
        # skips validation; only for results of structure-preserving maps
        obj = cls.__new__(cls)
        object.__setattr__(obj, "matrix", _frozen(np.asarray(matrix, dtype=complex)))
        object.__setattr__(obj, "label", label)
        object.__setattr__(obj, "rank", rank)
        return obj

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, dim: int, label: str = "I") -> "Projector":
        return cls._trusted(np.eye(dim, dtype=complex), label, dim)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Unit-trace, Hermitian, positive semidefinite operator."""

    matrix: np.ndarray

    def __post_init__(self, tol: float = TAU_STRUCT):
        m = as_operator(self.matrix, "density matrix")
        if not is_hermitian(m, tol):
            raise StructuralError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > tol:
            raise StructuralError(f"density matrix has trace {np.trace(m).real:.6g}, expected 1")
        if np.linalg.eigvalsh((m + dagger(m)) / 2)[0] < -tol:
            raise StructuralError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def checked(cls, matrix, tol: float = TAU_STRUCT) -> "DensityMatrix":
        obj = cls.__new__(cls)
        object.__setattr__(obj, "matrix", matrix)
        obj.__post_init__(tol)
        return obj

    @classmethod
    def from_vector(cls, psi) -> "DensityMatrix":
        """Pure state |psi><psi|; ``psi`` is normalized first."""
        v = np.asarray(psi, dtype=complex).ravel()
        norm = np.linalg.norm(v)
        if norm == 0 or not np.isfinite(norm):
            raise DegenerateInputError("cannot build a state from a zero vector")
        v = v / norm
        return cls(np.outer(v, v.conj()))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.sum(self.matrix * self.matrix.T)))


@dataclass(frozen=True)
class FactoredSpace:
    """Bipartite space H_E (x) H_S with the environment as the major factor."""

    dim_env: int
    dim_sys: int

    def __post_init__(self):
        for name in ("dim_env", "dim_sys"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise StructuralError(f"{name} must be a positive integer, got {v!r}")

    @property
    def dim(self) -> int:
        return self.dim_env * self.dim_sys


def tensor(a, b) -> np.ndarray:
    """Kronecker product with ``a`` carrying the major (slow) indices."""
    return _frozen(np.kron(as_operator(a, "left factor"), as_operator(b, "right factor")))


def partial_trace_env(m, space: FactoredSpace) -> np.ndarray:
    """Trace out the environment factor of an operator on H_E (x) H_S."""
    m = np.asarray(m, dtype=complex)
    if m.shape != (space.dim, space.dim):
        raise StructuralError(
            f"operator of shape {m.shape} does not act on a space of dimension "
            f"{space.dim_env}x{space.dim_sys}"
        )
    blocks = m.reshape(space.dim_env, space.dim_sys, space.dim_env, space.dim_sys)
    return _frozen(np.einsum("eiej->ij", blocks))


def embed_system(op, space: FactoredSpace) -> np.ndarray:
    """I_E (x) op."""
    return tensor(np.eye(space.dim_env), op)


def projector_from_vectors(vectors, label: str = "", tol: float = TAU_STRUCT) -> Projector:
    """Projector onto the span of linearly independent ``vectors``."""
    try:
        cols = np.array([np.asarray(v, dtype=complex).ravel() for v in vectors]).T
    except ValueError as exc:
        raise StructuralError(f"vectors for {label!r} have mismatched lengths") from exc
    if cols.ndim != 2 or cols.shape[1] == 0:
        raise StructuralError(f"no vectors given for {label!r}")
    if not np.all(np.isfinite(cols)):
        raise StructuralError(f"vectors for {label!r} have non-finite entries")
    if cols.shape[1] > cols.shape[0]:
        raise DegenerateInputError(
            f"{cols.shape[1]} vectors in dimension {cols.shape[0]} cannot be independent"
        )
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    # Gram eigenvalues are s**2
    if s[0] == 0 or (s[-1] / s[0]) ** 2 <= tol:
        raise DegenerateInputError(f"vectors for {label!r} are linearly dependent")
    p = u @ dagger(u)
    return Projector._trusted((p + dagger(p)) / 2, label, cols.shape[1])


class Propagator:
    """exp(-iHt) from a cached eigendecomposition H = Q diag(E) Q^dagger.

    Building one costs a single Hermitian eigensolve; each time point after
    that is a diagonal phase plus two products.
    """

    def __init__(self, hamiltonian, tol: float = TAU_STRUCT):
        h = as_operator(hamiltonian, "Hamiltonian")
        if not is_hermitian(h, tol):
            raise StructuralError("Hamiltonian is not Hermitian")
        self.hamiltonian = h
        energies, basis = np.linalg.eigh((h + dagger(h)) / 2)
        self.energies = _frozen(energies)
        self.basis = _frozen(basis)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def unitary(self, t: float) -> np.ndarray:
        if t == 0:
            return np.eye(self.dim, dtype=complex)
        q = self.basis
        return (q * np.exp(-1j * self.energies * t)) @ dagger(q)

    def to_eigenbasis(self, op) -> np.ndarray:
        return dagger(self.basis) @ op @ self.basis

    def heisenberg(self, op, t: float) -> np.ndarray:
        """exp(iHt) op exp(-iHt)."""
        op = np.asarray(op, dtype=complex)
        if t == 0:
            return op
        u = self.unitary(t)
        out = dagger(u) @ op @ u
        return out

    def evolve(self, rho, t: float) -> np.ndarray:
        """Schroedinger picture: exp(-iHt) rho exp(iHt)."""
        rho = np.asarray(rho, dtype=complex)
        if t == 0:
            return rho
        u = self.unitary(t)
        return u @ rho @ dagger(u)

    def evolve_vector(self, psi, times) -> np.ndarray:
        """Rows are exp(-iHt) psi for each t in ``times``."""
        coeffs = dagger(self.basis) @ np.asarray(psi, dtype=complex)
        phases = np.exp(-1j * np.outer(np.asarray(times, dtype=float), self.energies))
        return (phases * coeffs) @ self.basis.T


def heisenberg_evolve(p: Projector, hamiltonian, t: float, tol: float = TAU_STRUCT) -> Projector:
    """P_t = exp(iHt) P exp(-iHt), computed spectrally."""
    if t == 0:
        Propagator(hamiltonian, tol)  # still validate H
        return p
    m = Propagator(hamiltonian, tol).heisenberg(p.matrix, t)
    return Projector._trusted((m + dagger(m)) / 2, p.label, p.rank)


def evolve_state(rho: DensityMatrix, hamiltonian, t: float) -> DensityMatrix:
    m = Propagator(hamiltonian).evolve(rho.matrix, t)
    return DensityMatrix.checked((m + dagger(m)) / 2, tol=1e-8)
