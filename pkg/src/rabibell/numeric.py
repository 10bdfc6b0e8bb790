"""Exact propagation of time-independent Hamiltonians on the truncated space.

One dense Hermitian eigendecomposition per Hamiltonian; every time point is
then a phase multiplication, so there is no step size to tune.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rabibell.errors import DimensionMismatchError, InvalidArgumentError
from rabibell.hilbert import DensityMatrix, Operator, StateVector, hermiticity_error
from rabibell.model import FockCutoff, RabiParams, cutoff_for_displacement


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def residual(self, h: Operator) -> float:
        """``max|H V - V diag(E)|`` relative to ``max|H|``."""
        hv = h.entries @ self.eigenvectors
        scale = max(float(np.max(np.abs(h.entries))), 1e-300)
        return float(np.max(np.abs(hv - self.eigenvectors * self.eigenvalues))) / scale


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-ordered states on the (2, 2, N) space.

    ``states`` is ``(T, dim)`` for pure states or ``(T, dim, dim)`` for
    density matrices. ``times`` are physical; ``t_delta`` rescales them by
    the detuning the trajectory was generated for.
    """

    times: np.ndarray
    states: np.ndarray
    space_dims: tuple
    delta: float = 1.0

    def __post_init__(self):
        times = np.atleast_1d(np.asarray(self.times, dtype=float))
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise InvalidArgumentError("trajectory times must be strictly increasing")
        states = np.asarray(self.states)
        if states.shape[0] != times.size:
            raise DimensionMismatchError("one state per time point required")
        times.setflags(write=False)
        states.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "space_dims", tuple(self.space_dims))

    @property
    def t_delta(self) -> np.ndarray:
        return self.times * self.delta

    @property
    def is_pure(self) -> bool:
        return self.states.ndim == 2

    @property
    def n_max(self) -> int:
        return self.space_dims[2]

    def __len__(self):
        return self.times.size

    def state(self, i: int):
        if self.is_pure:
            return StateVector(self.states[i], self.space_dims)
        return DensityMatrix(self.states[i], self.space_dims, check=False)

    def boson_populations(self) -> np.ndarray:
        """``(T, N)`` Fock-level populations summed over the qubits."""
        t, n = len(self), self.n_max
        if self.is_pure:
            return (np.abs(self.states.reshape(t, 4, n)) ** 2).sum(axis=1)
        diag = np.real(np.diagonal(self.states, axis1=1, axis2=2))
        return diag.reshape(t, 4, n).sum(axis=1)

    def expectation(self, op) -> np.ndarray:
        """``<op>(t)`` for an :class:`Operator` or a diagonal given as a vector."""
        mat = op.entries if isinstance(op, Operator) else np.asarray(op)
        if self.is_pure:
            psi = self.states
            if mat.ndim == 1:
                return np.real(np.einsum("ti,i,ti->t", psi.conj(), mat, psi))
            return np.real(np.einsum("ti,ij,tj->t", psi.conj(), mat, psi))
        if mat.ndim == 1:
            return np.real(np.einsum("tii,i->t", self.states, mat))
        return np.real(np.einsum("tij,ji->t", self.states, mat))

    def norms(self) -> np.ndarray:
        if self.is_pure:
            return np.linalg.norm(self.states, axis=1)
        return np.real(np.trace(self.states, axis1=1, axis2=2))


@dataclass(frozen=True)
class FrameSpec:
    """Frame generated by ``f_boson a^dag a + sum_i (f_qubit_i / 2) sigma_z^(i)``."""

    kind: str = "lab"
    f_boson: float = 0.0
    f_qubit1: float = 0.0
    f_qubit2: float = 0.0

    def __post_init__(self):
        if self.kind not in ("lab", "rotating"):
            raise InvalidArgumentError(f"unknown frame kind {self.kind!r}")
        if self.kind == "lab" and (self.f_boson or self.f_qubit1 or self.f_qubit2):
            raise InvalidArgumentError("lab frame must have zero rotation frequencies")

    @classmethod
    def lab(cls) -> "FrameSpec":
        return cls()

    @classmethod
    def rotating(cls, p: RabiParams) -> "FrameSpec":
        # Unequal qubits: the boson rotates with the slower qubit.
        return cls("rotating", min(p.omega1, p.omega2), p.omega1, p.omega2)

    def generator_diagonal(self, n_max: int) -> np.ndarray:
        sz1 = np.array([-1, -1, 1, 1], dtype=float)
        sz2 = np.array([-1, 1, -1, 1], dtype=float)
        qubit = 0.5 * (self.f_qubit1 * sz1 + self.f_qubit2 * sz2)
        return (qubit[:, None] + self.f_boson * np.arange(n_max)[None, :]).ravel()


def eigendecompose(h: Operator) -> Spectrum:
    if not h.hermitian:
        raise InvalidArgumentError("eigendecompose() needs a Hermitian-tagged operator")
    if hermiticity_error(h.entries) > 1e-12:
        raise InvalidArgumentError("operator is not Hermitian")
    evals, evecs = np.linalg.eigh(h.entries)
    evals.setflags(write=False)
    evecs.setflags(write=False)
    return Spectrum(evals, evecs)


def _space_dims(state, dim):
    dims = state.space_dims
    return dims if len(dims) == 3 else (dim,)


def propagate(spec: Spectrum, psi0: StateVector, times, delta: float = 1.0) -> Trajectory:
    if psi0.dim != spec.dim:
        raise DimensionMismatchError(f"state dim {psi0.dim} != spectrum dim {spec.dim}")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    v = spec.eigenvectors
    coeffs = v.conj().T @ psi0.amplitudes
    phases = np.exp(-1j * np.outer(times, spec.eigenvalues))
    states = (phases * coeffs[None, :]) @ v.T
    return Trajectory(times, states, _space_dims(psi0, spec.dim), delta)


def propagate_density(spec: Spectrum, rho0: DensityMatrix, times, delta: float = 1.0) -> Trajectory:
    if rho0.dim != spec.dim:
        raise DimensionMismatchError(f"density dim {rho0.dim} != spectrum dim {spec.dim}")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    v = spec.eigenvectors
    rho_eig = v.conj().T @ rho0.entries @ v
    out = np.empty((times.size, spec.dim, spec.dim), dtype=complex)
    for i, t in enumerate(times):
        ph = np.exp(-1j * spec.eigenvalues * t)
        out[i] = v @ (ph[:, None] * rho_eig * ph.conj()[None, :]) @ v.conj().T
    return Trajectory(times, out, _space_dims(rho0, spec.dim), delta)


def to_frame(s: StateVector, t: float, frame: FrameSpec) -> StateVector:
    """Multiply by ``exp(+i t G)`` with ``G`` the (diagonal) frame generator."""
    if frame.kind == "lab" or t == 0:
        return s
    gen = frame.generator_diagonal(s.space_dims[2])
    return StateVector(np.exp(1j * t * gen) * s.amplitudes, s.space_dims)


def trajectory_to_frame(traj: Trajectory, frame: FrameSpec) -> Trajectory:
    if frame.kind == "lab":
        return traj
    gen = frame.generator_diagonal(traj.n_max)
    ph = np.exp(1j * np.outer(traj.times, gen))
    if traj.is_pure:
        states = ph * traj.states
    else:
        states = ph[:, :, None] * traj.states * ph.conj()[:, None, :]
    return Trajectory(traj.times, states, traj.space_dims, traj.delta)


def max_displacement(p: RabiParams, scale: float = None) -> float:
    """Largest branch amplitude ``2 (Gamma1 + Gamma2) / scale`` of the slow-qubit model."""
    scale = p.delta if scale is None else scale
    if scale <= 0:
        raise InvalidArgumentError(f"detuning must be > 0, got {scale}")
    return 2.0 * (p.gamma1 + p.gamma2) / scale


def required_cutoff(p: RabiParams, extent: float = 0.0, scale: float = None) -> FockCutoff:
    """Fock cutoff for the conditional displacements of ``p``.

    ``extent`` widens the estimate for a non-vacuum boson preparation (its
    rough amplitude); ``scale`` overrides the frequency the couplings are
    measured against, which defaults to the detuning.
    """
    return FockCutoff(cutoff_for_displacement(max_displacement(p, scale) + extent))


@dataclass(frozen=True)
class CutoffReport:
    passed: bool
    max_tail: float
    n_max: int
    tail_levels: int
    tolerance: float
    recommended: int = None


def cutoff_convergence(traj: Trajectory, tolerance: float = 1e-10) -> CutoffReport:
    """Largest population found on the top 10% of Fock levels over the trajectory."""
    n = traj.n_max
    top = max(1, math.ceil(0.1 * n))
    pops = traj.boson_populations()
    tail = float(np.max(pops[:, n - top:].sum(axis=1)))
    passed = tail <= tolerance
    recommended = None
    if not passed:
        mean_n = float(np.max(pops @ np.arange(n)))
        recommended = max(cutoff_for_displacement(math.sqrt(max(mean_n, 0.0))),
                          int(math.ceil(1.5 * n)))
    return CutoffReport(passed, tail, n, top, tolerance, recommended)
