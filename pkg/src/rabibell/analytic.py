"""Closed-form dynamics of the slow-qubit Hamiltonian.

The propagator factorizes as

    U(t) = exp(i phi_t gamma^2) D(gamma_t) exp(-i t Delta a^dag a),
    gamma_t = (exp(-i t Delta) - 1) gamma,   phi_t = t Delta - sin(t Delta),

and since ``gamma`` is diagonal on the rotated basis ``|+-+->`` each of the
four branches is a scalar phase times an ordinary coherent displacement.
At the revival times ``t_n = 2 pi n / Delta`` the boson factor is the
identity and only the two-qubit entangler ``exp(i 2 pi n gamma^2)`` remains.

Two independent constructions are kept on purpose: the branch propagator
(used by every engine) and the explicit cat-state expansion of the state
evolved from ``|gg 0>`` (:func:`cat_superposition_state`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from rabibell.errors import (
    ConvergenceError,
    DegenerateInputError,
    InvalidArgumentError,
    VerificationError,
)
from rabibell.hilbert import (
    QUBIT_LABELS,
    DensityMatrix,
    Operator,
    StateVector,
    basis_state,
    partial_trace_boson,
    partial_trace_qubits,
    product_density,
    product_state,
    qubit_ket,
)
from rabibell.model import (
    ROTATED_BASIS,
    GateDesign,
    RabiParams,
    cutoff_for_displacement,
    gamma_eigenvalues,
    n_levels,
    solve_gamma2,
)
from rabibell.numeric import Trajectory

FACTORIZATION_TOL = 1e-8
ZERO_DISPLACEMENT = 1e-12


class BellLabel(str, enum.Enum):
    PSI_PLUS = "psi_plus"
    PSI_MINUS = "psi_minus"
    PHI_PLUS = "phi_plus"
    PHI_MINUS = "phi_minus"


@dataclass(frozen=True)
class PhasePair:
    phi_g: float
    phi_l: float


def phi_t(t, delta):
    x = np.asarray(t, dtype=float) * delta
    out = x - np.sin(x)
    return float(out) if out.ndim == 0 else out


def phases(t, p: RabiParams) -> PhasePair:
    """Global and local (entangling) phases carried by ``exp(i phi_t gamma^2)``."""
    delta = _slow_qubit_delta(p)
    ph = phi_t(t, delta)
    return PhasePair(
        phi_g=ph * (p.gamma1**2 + p.gamma2**2) / delta**2,
        phi_l=ph * 2.0 * p.gamma1 * p.gamma2 / delta**2,
    )


def peak_time(n: int, delta: float) -> float:
    return 2.0 * math.pi * n / delta


def _slow_qubit_delta(p):
    if not p.equal_frequencies:
        raise InvalidArgumentError("slow-qubit dynamics requires omega1 == omega2")
    if p.delta <= 0:
        raise InvalidArgumentError(f"detuning must be > 0, got {p.delta}")
    return p.delta


# -- displacement -----------------------------------------------------------

@lru_cache(maxsize=16)
def _momentum_eigh(n):
    # P = i (a^dag - a) is Hermitian; exp(r (a^dag - a)) = W exp(-i r k) W^dag.
    a = np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1)
    k, w = np.linalg.eigh(1j * (a.T - a))
    w.setflags(write=False)
    return k, w


def _check_cutoff(r, n):
    # Round-off sized displacements (revival times) are the identity at any cutoff.
    if r <= ZERO_DISPLACEMENT:
        return
    need = cutoff_for_displacement(r)
    if n < need:
        raise ConvergenceError(
            f"{n} Fock levels cannot hold a displacement of modulus {r:.3g}; need >= {need}",
            recommended=need,
        )


def displace_rows(alpha, vectors):
    """Apply truncated ``D(alpha_t)`` to each row ``vectors[t]``.

    ``alpha`` is a scalar or an array broadcasting against the leading axis.
    Uses ``alpha a^dag - alpha* a = r R(theta) (a^dag - a) R(theta)^dag`` with
    ``R(theta) = exp(i theta a^dag a)``, so a single cached eigendecomposition
    serves every amplitude.
    """
    vectors = np.atleast_2d(np.asarray(vectors, dtype=complex))
    n = vectors.shape[-1]
    k, w = _momentum_eigh(n)
    alpha = np.broadcast_to(np.asarray(alpha, dtype=complex), vectors.shape[:1])
    r = np.abs(alpha)[:, None]
    rot = np.exp(1j * np.angle(alpha)[:, None] * np.arange(n)[None, :])
    y = (vectors * rot.conj()) @ w.conj()
    y *= np.exp(-1j * r * k[None, :])
    return (y @ w.T) * rot


def displacement_operator(alpha: complex, cutoff) -> Operator:
    """Truncated ``exp(alpha a^dag - alpha* a)`` (exactly unitary)."""
    n = n_levels(cutoff)
    _check_cutoff(abs(alpha), n)
    k, w = _momentum_eigh(n)
    theta = np.angle(alpha)
    rot = np.exp(1j * theta * np.arange(n))
    core = (w * np.exp(-1j * abs(alpha) * k)) @ w.conj().T
    return Operator(rot[:, None] * core * rot.conj()[None, :], unitary=True)


def coherent_state(alpha: complex, cutoff) -> StateVector:
    """Coherent-state amplitudes from the Poisson formula, projected on N levels."""
    n = n_levels(cutoff)
    levels = np.arange(n)
    r = abs(alpha)
    if r == 0:
        amps = np.zeros(n, dtype=complex)
        amps[0] = 1.0
        return StateVector(amps)
    log_mag = -0.5 * r * r + levels * math.log(r) - 0.5 * gammaln(levels + 1)
    return StateVector(np.exp(log_mag + 1j * np.angle(alpha) * levels))


def _raw_cat(alpha, sign, n):
    return coherent_state(alpha, n).amplitudes + sign * coherent_state(-alpha, n).amplitudes


def cat_state(alpha: complex, parity: str, cutoff) -> StateVector:
    """Normalized ``|alpha> + |-alpha>`` (even) or ``|alpha> - |-alpha>`` (odd)."""
    if parity not in ("even", "odd"):
        raise InvalidArgumentError(f"parity must be 'even' or 'odd', got {parity!r}")
    n = n_levels(cutoff)
    _check_cutoff(abs(alpha), n)
    raw = _raw_cat(alpha, 1.0 if parity == "even" else -1.0, n)
    nrm = np.linalg.norm(raw)
    if nrm <= 1e-14:
        raise DegenerateInputError("odd cat state with alpha = 0 vanishes")
    return StateVector(raw / nrm)


def boson_vacuum(cutoff) -> StateVector:
    return coherent_state(0.0, cutoff)


def fock_state(k: int, cutoff) -> StateVector:
    n = n_levels(cutoff)
    if not 0 <= k < n:
        raise InvalidArgumentError(f"Fock level {k} outside [0, {n})")
    amps = np.zeros(n, dtype=complex)
    amps[k] = 1.0
    return StateVector(amps)


def thermal_state(nbar: float, cutoff) -> DensityMatrix:
    """Thermal boson state with mean occupation ``nbar``, renormalized on N levels."""
    if nbar < 0:
        raise InvalidArgumentError("thermal occupation must be >= 0")
    n = n_levels(cutoff)
    if nbar == 0:
        pops = np.zeros(n)
        pops[0] = 1.0
    else:
        pops = (nbar / (1.0 + nbar)) ** np.arange(n)
        pops /= pops.sum()
    return DensityMatrix(np.diag(pops))


# -- propagator -------------------------------------------------------------

def _branch_data(t, p):
    delta = _slow_qubit_delta(p)
    g = gamma_eigenvalues(p)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    shift = np.exp(-1j * t * delta) - 1.0
    alphas = shift[:, None] * g[None, :]               # (T, 4)
    scalar = np.exp(1j * phi_t(t, delta)[:, None] * g[None, :] ** 2)
    return t, delta, alphas, scalar


def analytic_propagator(t: float, p: RabiParams, cutoff) -> Operator:
    """Full ``4N x 4N`` matrix of the slow-qubit propagator at time ``t``.

    The cutoff must hold the largest branch displacement reached at ``t``
    (at most ``2 max|gamma_s|``, zero at the revival times).
    """
    n = n_levels(cutoff)
    _, delta, alphas, scalar = _branch_data(t, p)
    _check_cutoff(np.max(np.abs(alphas)), n)
    free = np.exp(-1j * t * delta * np.arange(n))
    blocks = np.empty((4, n, n), dtype=complex)
    for s in range(4):
        d = displacement_operator(alphas[0, s], n).entries
        blocks[s] = scalar[0, s] * d * free[None, :]
    rq = ROTATED_BASIS
    u = np.einsum("qs,snm,ps->qnpm", rq, blocks, rq.conj()).reshape(4 * n, 4 * n)
    return Operator(u, unitary=True, space_dims=(2, 2, n))


def analytic_evolve(psi0: StateVector, times, p: RabiParams, delta_scale: float = None) -> Trajectory:
    """Evolve a pure state on many time points with the branch propagator.

    ``times`` are physical times. The returned trajectory reports
    ``t_delta = times * delta_scale`` (defaults to the model detuning).
    """
    n = psi0.space_dims[2] if len(psi0.space_dims) == 3 else None
    if n is None:
        raise InvalidArgumentError("initial state must live on the (2, 2, N) space")
    t, delta, alphas, scalar = _branch_data(times, p)
    _check_cutoff(np.max(np.abs(alphas)) if t.size else 0.0, n)
    rotated = ROTATED_BASIS.conj().T @ psi0.as_matrix()      # (4, N) in +- basis
    free = np.exp(-1j * np.outer(t * delta, np.arange(n)))   # (T, N)
    out = np.empty((t.size, 4, n), dtype=complex)
    for s in range(4):
        rows = free * rotated[s][None, :]
        out[:, s, :] = scalar[:, s, None] * displace_rows(alphas[:, s], rows)
    states = np.einsum("qs,tsn->tqn", ROTATED_BASIS, out).reshape(t.size, 4 * n)
    return Trajectory(t, states, (2, 2, n), delta_scale if delta_scale is not None else delta)


def cat_superposition_state(t: float, p: RabiParams, cutoff) -> StateVector:
    """State evolved from ``|gg 0>``, written as qubit-conditioned cat states.

    ``|psi(t)> = (1/4) exp(i(phi_G + phi_L)) sum_Q |Q> (x) [c^(+) +- e^{-2 i phi_L} c^(-)]``
    with even cats on ``gg, ee`` and odd cats on ``ge, eg``; coherent states
    come from the Poisson formula, not from the propagator.
    """
    n = n_levels(cutoff)
    delta = _slow_qubit_delta(p)
    gp = (p.gamma1 + p.gamma2) / delta
    gm = (p.gamma1 - p.gamma2) / delta
    shift = np.exp(-1j * t * delta) - 1.0
    _check_cutoff(abs(shift) * max(abs(gp), abs(gm)), n)
    ph = phases(t, p)
    even_p, odd_p = _raw_cat(shift * gp, 1.0, n), _raw_cat(shift * gp, -1.0, n)
    even_m, odd_m = _raw_cat(shift * gm, 1.0, n), _raw_cat(shift * gm, -1.0, n)
    rel = np.exp(-2j * ph.phi_l)
    boson = {
        "gg": even_p + rel * even_m,
        "ge": odd_p - rel * odd_m,
        "eg": odd_p + rel * odd_m,
        "ee": even_p - rel * even_m,
    }
    amps = np.concatenate([boson[q] for q in QUBIT_LABELS])
    return StateVector(0.25 * np.exp(1j * (ph.phi_g + ph.phi_l)) * amps, (2, 2, n))


def analytic_evolved_state(t: float, q0: str, p: RabiParams, cutoff) -> StateVector:
    """``U(t) |Q0 0>``; the ``gg`` case uses the explicit cat expansion."""
    if q0 == "gg":
        return cat_superposition_state(t, p, cutoff)
    n = n_levels(cutoff)
    return analytic_propagator(t, p, n) @ basis_state(q0, 0, n)


def revival_state(n: int, p: RabiParams) -> StateVector:
    """Two-qubit state left at ``t_n`` when starting from ``|gg 0>``."""
    if n < 1:
        raise InvalidArgumentError("revival index must be >= 1")
    delta = _slow_qubit_delta(p)
    phi_l = phases(peak_time(n, delta), p).phi_l
    amps = math.cos(phi_l) * qubit_ket("gg") + 1j * math.sin(phi_l) * qubit_ket("ee")
    return StateVector(amps, (2, 2))


# -- Bell states and the gate ----------------------------------------------

_S = 1.0 / math.sqrt(2.0)


def bell_state(label) -> StateVector:
    label = BellLabel(label)
    if label is BellLabel.PSI_PLUS:
        amps = _S * (qubit_ket("gg") + 1j * qubit_ket("ee"))
    elif label is BellLabel.PSI_MINUS:
        amps = _S * (qubit_ket("gg") - 1j * qubit_ket("ee"))
    elif label is BellLabel.PHI_PLUS:
        amps = _S * (qubit_ket("eg") + 1j * qubit_ket("ge"))
    else:
        amps = _S * (qubit_ket("eg") - 1j * qubit_ket("ge"))
    return StateVector(amps, (2, 2))


_EVEN_M_MAP = {
    "gg": BellLabel.PSI_PLUS,
    "ee": BellLabel.PSI_MINUS,
    "eg": BellLabel.PHI_PLUS,
    "ge": BellLabel.PHI_MINUS,
}
_FLIP = {
    BellLabel.PSI_PLUS: BellLabel.PSI_MINUS,
    BellLabel.PSI_MINUS: BellLabel.PSI_PLUS,
    BellLabel.PHI_PLUS: BellLabel.PHI_MINUS,
    BellLabel.PHI_MINUS: BellLabel.PHI_PLUS,
}


def gate_map(q0: str, m: int) -> BellLabel:
    """Bell state reached from ``|Q0 0>`` at the design peak time."""
    if q0 not in _EVEN_M_MAP:
        raise InvalidArgumentError(f"unknown two-qubit label {q0!r}")
    label = _EVEN_M_MAP[q0]
    return label if m % 2 == 0 else _FLIP[label]


def design_gate(gamma1: float, delta: float, n: int, m: int) -> GateDesign:
    gamma2 = solve_gamma2(gamma1, delta, n, m)
    return GateDesign(
        n=n, m=m, gamma1=gamma1, gamma2=gamma2, delta=delta,
        t_peak=peak_time(n, delta),
        bell_map={q: gate_map(q, m) for q in QUBIT_LABELS},
    )


def design_params(design: GateDesign, omega: float = None) -> RabiParams:
    """Slow-qubit parameters realizing a design (qubit frequencies set from ``omega``)."""
    omega = design.delta if omega is None else omega
    omega_q = omega - design.delta
    return RabiParams(omega=omega, omega1=omega_q, omega2=omega_q,
                      gamma1=design.gamma1, gamma2=design.gamma2)


def gate_overlaps(design: GateDesign, cutoff=16) -> dict:
    """``|<bell, 0| U(t_peak) |Q 0>|`` for each initial label."""
    p = design_params(design)
    n = n_levels(cutoff)
    u = analytic_propagator(design.t_peak, p, n)
    vac = boson_vacuum(n)
    out = {}
    for q, label in design.bell_map.items():
        evolved = u @ basis_state(q, 0, n)
        out[q] = abs(product_state(bell_state(label), vac).overlap(evolved))
    return out


def mixed_boson_revival(rho_b0: DensityMatrix, n: int, p: RabiParams, cutoff) -> DensityMatrix:
    """Evolve ``|gg><gg| (x) rho_b0`` to ``t_n`` and check it factorizes.

    Raises :class:`VerificationError` if the evolved state differs from
    ``rho_q (x) rho_b`` by more than ``1e-8`` in any entry.
    """
    if n < 1:
        raise InvalidArgumentError("revival index must be >= 1")
    size = n_levels(cutoff)
    if rho_b0.dim != size:
        raise InvalidArgumentError(f"boson state has dimension {rho_b0.dim}, cutoff is {size}")
    gg = np.outer(qubit_ket("gg"), qubit_ket("gg").conj())
    rho0 = product_density(gg, rho_b0)
    u = analytic_propagator(peak_time(n, _slow_qubit_delta(p)), p, size).entries
    rho = DensityMatrix(u @ rho0.entries @ u.conj().T, (2, 2, size), check=False)
    rebuilt = product_density(partial_trace_boson(rho), partial_trace_qubits(rho))
    err = np.max(np.abs(rebuilt.entries - rho.entries))
    if err > FACTORIZATION_TOL:
        raise VerificationError(f"state at t_{n} does not factorize (max deviation {err:.3g})")
    return rho
