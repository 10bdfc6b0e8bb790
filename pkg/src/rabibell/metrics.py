"""Figures of merit: joint probabilities, purity, concurrence, Bell fidelity."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from rabibell.analytic import BellLabel, bell_state
from rabibell.errors import InvalidArgumentError
from rabibell.hilbert import (
    QUBIT_LABELS,
    DensityMatrix,
    StateVector,
    basis_index,
    partial_trace_boson,
)
from rabibell.model import parity_diagonal
from rabibell.numeric import Trajectory

JOINT_PROB_THRESHOLD = 1e-12

# sigma_y (x) sigma_y in the {gg, ge, eg, ee} basis (real).
SIGMA_YY = np.array([[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=float)


@dataclass(frozen=True)
class MetricsRecord:
    t_delta: float
    joint_probs: dict = field(default_factory=dict)
    purity_q: float = 1.0
    concurrence: float = 0.0
    fidelity: dict = field(default_factory=dict)
    parity_expectation: float = 0.0


def _matrix(rho):
    if isinstance(rho, DensityMatrix):
        return rho.entries
    if isinstance(rho, StateVector):
        return np.outer(rho.amplitudes, rho.amplitudes.conj())
    return np.asarray(rho, dtype=complex)


def _qubit_matrix(rho):
    m = _matrix(rho)
    if m.shape != (4, 4):
        raise InvalidArgumentError(f"expected a 4x4 two-qubit state, got shape {m.shape}")
    return m


def joint_probability(state, q: str, n: int) -> float:
    """Population ``P_{Q n}`` of the product basis state ``|Q n>``."""
    n_max = state.space_dims[2] if len(state.space_dims) == 3 else None
    if n_max is None:
        raise InvalidArgumentError("joint_probability needs a state on the (2, 2, N) space")
    i = basis_index(q, n, n_max)
    if isinstance(state, StateVector):
        return float(abs(state.amplitudes[i]) ** 2)
    return float(np.real(state.entries[i, i]))


def purity(rho) -> float:
    m = _matrix(rho)
    # Tr[rho^2] = sum |rho_ij|^2 for Hermitian rho.
    return float(np.sum(np.abs(m) ** 2))


def concurrence(rho_q) -> float:
    """Wootters concurrence of a two-qubit density matrix.

    The ``lambda_i`` (square roots of the eigenvalues of ``rho rho~``) are
    obtained as singular values of ``tau = W^T (sigma_y x sigma_y) W`` with
    ``rho = W W^dag``. This never takes square roots of round-off-level
    eigenvalues, which matters for pure and product states.
    """
    m = _qubit_matrix(rho_q)
    m = 0.5 * (m + m.conj().T)
    evals, evecs = np.linalg.eigh(m)
    w = evecs * np.sqrt(np.clip(evals, 0.0, None))[None, :]
    lam = np.linalg.svd(w.T @ SIGMA_YY @ w, compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def fidelity_to_bell(rho_q, label) -> float:
    m = _qubit_matrix(rho_q)
    b = bell_state(label).amplitudes
    return float(np.clip(np.real(np.vdot(b, m @ b)), 0.0, 1.0))


def record(state, t_delta: float = 0.0, threshold: float = JOINT_PROB_THRESHOLD) -> MetricsRecord:
    """All metrics of one full-space state (pure or mixed)."""
    n_max = state.space_dims[2]
    if isinstance(state, StateVector):
        pops = np.abs(state.amplitudes) ** 2
    else:
        pops = np.real(np.diagonal(state.entries))
    joint = {}
    for qi, q in enumerate(QUBIT_LABELS):
        for n in np.nonzero(pops[qi * n_max:(qi + 1) * n_max] > threshold)[0]:
            joint[(q, int(n))] = float(pops[qi * n_max + n])
    rho_q = partial_trace_boson(state)
    return MetricsRecord(
        t_delta=float(t_delta),
        joint_probs=joint,
        purity_q=purity(rho_q),
        concurrence=concurrence(rho_q),
        fidelity={label: fidelity_to_bell(rho_q, label) for label in BellLabel},
        parity_expectation=float(np.dot(pops, parity_diagonal(n_max))),
    )


def reduced_qubit_states(traj: Trajectory) -> np.ndarray:
    """``(T, 4, 4)`` two-qubit reduced states along a trajectory."""
    t, n = len(traj), traj.n_max
    if traj.is_pure:
        m = traj.states.reshape(t, 4, n)
        return np.einsum("tin,tjn->tij", m, m.conj())
    return np.einsum("tinjn->tij", traj.states.reshape(t, 4, n, 4, n))


def trajectory_metrics(traj: Trajectory) -> dict:
    """Column arrays of the standard metrics, one entry per time point."""
    return ensemble_metrics([(1.0, traj)])


def ensemble_metrics(members) -> dict:
    """Metrics of the mixture ``sum_k w_k rho_k(t)`` of ``(w_k, trajectory)`` pairs.

    All members must share the time grid and the cutoff. Only the
    populations and the reduced qubit state are needed, and both are
    linear in the state, so members are never combined at full size.
    """
    members = list(members)
    first = members[0][1]
    n = first.n_max
    pops = 0.0
    rho_q = 0.0
    for weight, traj in members:
        if traj.n_max != n or len(traj) != len(first):
            raise InvalidArgumentError("ensemble members must share times and cutoff")
        if traj.is_pure:
            pops = pops + weight * np.abs(traj.states) ** 2
        else:
            pops = pops + weight * np.real(np.diagonal(traj.states, axis1=1, axis2=2))
        rho_q = rho_q + weight * reduced_qubit_states(traj)
    cols = {
        "t_delta": first.t_delta,
        "P_gg_0": pops[:, basis_index("gg", 0, n)],
        "P_ee_0": pops[:, basis_index("ee", 0, n)],
        "purity_q": np.sum(np.abs(rho_q) ** 2, axis=(1, 2)),
        "concurrence": np.array([concurrence(r) for r in rho_q]),
    }
    for label in BellLabel:
        b = bell_state(label).amplitudes
        cols[f"fid_{label.value}"] = np.clip(
            np.real(np.einsum("i,tij,j->t", b.conj(), rho_q, b)), 0.0, 1.0)
    cols["parity_exp"] = pops @ parity_diagonal(n)
    return cols
