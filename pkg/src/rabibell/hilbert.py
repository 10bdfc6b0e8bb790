"""Dense linear algebra on the composite space qubit 1 (x) qubit 2 (x) boson.

Layout conventions used everywhere in the package:

* subsystem order is (qubit 1, qubit 2, boson);
* single-qubit basis is ``|g> = index 0``, ``|e> = index 1``, so that
  ``sigma_z = diag(-1, +1)``;
* the product basis state ``|Q n>`` sits at index ``q * N + n`` with
  ``q`` in ``gg=0, ge=1, eg=2, ee=3`` (first letter is qubit 1).

All containers copy their input and freeze it; they are safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

from rabibell.errors import DegenerateInputError, DimensionMismatchError, InvalidArgumentError

QUBIT_LABELS = ("gg", "ge", "eg", "ee")

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10


def _frozen(array, dtype=complex):
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _check_dims(dim, space_dims):
    space_dims = tuple(int(d) for d in space_dims)
    if any(d < 1 for d in space_dims) or int(np.prod(space_dims)) != dim:
        raise DimensionMismatchError(f"space_dims {space_dims} incompatible with dimension {dim}")
    return space_dims


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    space_dims: tuple = None

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 1 or amps.size == 0:
            raise InvalidArgumentError("amplitudes must be a non-empty 1-d array")
        dims = self.space_dims if self.space_dims is not None else (amps.size,)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "space_dims", _check_dims(amps.size, dims))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        """Inner product <self|other>."""
        if other.dim != self.dim:
            raise DimensionMismatchError(f"{self.dim} != {other.dim}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def as_matrix(self) -> np.ndarray:
        """Amplitudes reshaped to (4, N) for states on the (2, 2, N) space."""
        _require_composite(self.space_dims)
        return self.amplitudes.reshape(4, self.space_dims[2])


@dataclass(frozen=True, eq=False)
class Operator:
    entries: np.ndarray
    hermitian: bool = False
    unitary: bool = False
    space_dims: tuple = None
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        mat = _frozen(self.entries)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] == 0:
            raise InvalidArgumentError(f"operator must be square, got shape {mat.shape}")
        dims = self.space_dims if self.space_dims is not None else (mat.shape[0],)
        object.__setattr__(self, "entries", mat)
        object.__setattr__(self, "space_dims", _check_dims(mat.shape[0], dims))
        if self.check:
            if self.hermitian and hermiticity_error(mat) > HERMITIAN_TOL:
                raise InvalidArgumentError("operator tagged hermitian is not Hermitian")
            if self.unitary and unitarity_error(mat) > UNITARY_TOL:
                raise InvalidArgumentError("operator tagged unitary is not unitary")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            return apply(self, other)
        if isinstance(other, Operator):
            if other.dim != self.dim:
                raise DimensionMismatchError(f"{self.dim} != {other.dim}")
            return Operator(self.entries @ other.entries, space_dims=self.space_dims)
        return NotImplemented


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray
    space_dims: tuple = None
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        mat = _frozen(self.entries)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] == 0:
            raise InvalidArgumentError(f"density matrix must be square, got shape {mat.shape}")
        dims = self.space_dims if self.space_dims is not None else (mat.shape[0],)
        object.__setattr__(self, "entries", mat)
        object.__setattr__(self, "space_dims", _check_dims(mat.shape[0], dims))
        if self.check:
            if hermiticity_error(mat) > HERMITIAN_TOL:
                raise InvalidArgumentError("density matrix is not Hermitian")
            if abs(np.trace(mat) - 1.0) > TRACE_TOL:
                raise InvalidArgumentError(f"density matrix trace {np.trace(mat).real:.3g} != 1")
            if np.linalg.eigvalsh(mat)[0] < -POSITIVITY_TOL:
                raise InvalidArgumentError("density matrix has negative eigenvalues")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        psi = state.amplitudes
        return cls(np.outer(psi, psi.conj()), state.space_dims, check=False)


def hermiticity_error(mat) -> float:
    mat = np.asarray(mat)
    return float(np.max(np.abs(mat - mat.conj().T))) if mat.size else 0.0


def unitarity_error(mat) -> float:
    mat = np.asarray(mat)
    return float(np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0]))))


def _require_composite(space_dims):
    if len(space_dims) != 3 or space_dims[0] != 2 or space_dims[1] != 2:
        raise DimensionMismatchError(f"expected space_dims (2, 2, N), got {space_dims}")


def _entries(op):
    return op.entries if isinstance(op, Operator) else np.asarray(op, dtype=complex)


def tensor(factors: Sequence) -> Operator:
    """Kronecker product in the given order (qubit 1, qubit 2, boson).

    Accepts :class:`Operator` instances or plain square arrays.
    """
    factors = list(factors)
    if not factors:
        raise InvalidArgumentError("tensor() needs at least one factor")
    mats = [_entries(f) for f in factors]
    for m in mats:
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidArgumentError(f"tensor factors must be square, got shape {m.shape}")
    dims = []
    for f, m in zip(factors, mats):
        dims.extend(f.space_dims if isinstance(f, Operator) else (m.shape[0],))
    herm = all(isinstance(f, Operator) and f.hermitian for f in factors)
    unit = all(isinstance(f, Operator) and f.unitary for f in factors)
    return Operator(reduce(np.kron, mats), hermitian=herm, unitary=unit,
                    space_dims=tuple(dims), check=False)


def dagger(op: Operator) -> Operator:
    return Operator(op.entries.conj().T, hermitian=op.hermitian, unitary=op.unitary,
                    space_dims=op.space_dims, check=False)


def apply(op: Operator, s: StateVector) -> StateVector:
    if op.dim != s.dim:
        raise DimensionMismatchError(f"operator dim {op.dim} != state dim {s.dim}")
    return StateVector(op.entries @ s.amplitudes, s.space_dims)


def normalize(s: StateVector) -> StateVector:
    nrm = s.norm()
    if nrm <= 1e-14:
        raise DegenerateInputError("cannot normalize a (numerically) zero vector")
    return StateVector(s.amplitudes / nrm, s.space_dims)


def _as_blocks(rho):
    """Return the full-space density matrix as a (4, N, 4, N) array."""
    _require_composite(rho.space_dims)
    n = rho.space_dims[2]
    if isinstance(rho, StateVector):
        psi = rho.amplitudes
        return np.einsum("i,j->ij", psi, psi.conj()).reshape(4, n, 4, n)
    return rho.entries.reshape(4, n, 4, n)


def partial_trace_boson(rho) -> DensityMatrix:
    """Reduced two-qubit state ``Tr_b[rho]`` (4x4).

    Pure states may be passed as :class:`StateVector`; that path avoids
    forming the full outer product.
    """
    if isinstance(rho, StateVector):
        m = rho.as_matrix()
        return DensityMatrix(m @ m.conj().T, (2, 2), check=False)
    return DensityMatrix(np.einsum("injn->ij", _as_blocks(rho)), (2, 2), check=False)


def partial_trace_qubits(rho) -> DensityMatrix:
    """Reduced boson state ``Tr_q[rho]`` (N x N)."""
    if isinstance(rho, StateVector):
        m = rho.as_matrix()
        return DensityMatrix(m.T @ m.conj(), (m.shape[1],), check=False)
    n = rho.space_dims[2]
    return DensityMatrix(np.einsum("imin->mn", _as_blocks(rho)), (n,), check=False)


def basis_index(q: str, n: int, n_max: int) -> int:
    try:
        qi = QUBIT_LABELS.index(q)
    except ValueError:
        raise InvalidArgumentError(f"unknown two-qubit label {q!r}") from None
    if not 0 <= n < n_max:
        raise InvalidArgumentError(f"Fock index {n} outside [0, {n_max})")
    return qi * n_max + n


def basis_state(q: str, n: int, n_max: int) -> StateVector:
    """The product basis state ``|Q n>``."""
    amps = np.zeros(4 * n_max, dtype=complex)
    amps[basis_index(q, n, n_max)] = 1.0
    return StateVector(amps, (2, 2, n_max))


def qubit_ket(q: str) -> np.ndarray:
    """Two-qubit computational basis vector for label ``q`` (length 4)."""
    if q not in QUBIT_LABELS:
        raise InvalidArgumentError(f"unknown two-qubit label {q!r}")
    v = np.zeros(4, dtype=complex)
    v[QUBIT_LABELS.index(q)] = 1.0
    return v


def product_state(qubits, boson) -> StateVector:
    """``|qubits> (x) |boson>`` from a length-4 and a length-N vector."""
    qubits = np.asarray(getattr(qubits, "amplitudes", qubits), dtype=complex)
    boson = np.asarray(getattr(boson, "amplitudes", boson), dtype=complex)
    if qubits.shape != (4,):
        raise DimensionMismatchError("qubit factor must have length 4")
    return StateVector(np.kron(qubits, boson), (2, 2, boson.size))


def product_density(rho_q, rho_b) -> DensityMatrix:
    rq = rho_q.entries if isinstance(rho_q, DensityMatrix) else np.asarray(rho_q)
    rb = rho_b.entries if isinstance(rho_b, DensityMatrix) else np.asarray(rho_b)
    if rq.shape != (4, 4):
        raise DimensionMismatchError("qubit factor must be 4x4")
    return DensityMatrix(np.kron(rq, rb), (2, 2, rb.shape[0]), check=False)
