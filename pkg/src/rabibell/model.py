"""Physical operators of the two-qubit Rabi model (hbar = 1, omega = 1 by default).

The full Hamiltonian is

    H = omega a^dag a + sum_i (omega_i / 2) sigma_z^(i) + sum_i Gamma_i sigma_x^(i) (a + a^dag)

and its slow-qubit (degenerate) limit, with a common qubit frequency
``omega_q`` and detuning ``Delta = omega - omega_q``, is

    H' = Delta a^dag a + sum_i Gamma_i sigma_x^(i) (a + a^dag)
       = Delta [D^dag(gamma) a^dag a D(gamma) - gamma^2],
    gamma = (Gamma_1 sigma_x^(1) + Gamma_2 sigma_x^(2)) / Delta.

Truncation note: on ``N`` Fock levels ``[a, a^dag]`` equals the identity
except on the top level, where it is ``-(N - 1)``. Dynamics is only
trustworthy while the top levels stay empty; see
:func:`rabibell.numeric.cutoff_convergence`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from rabibell.errors import InvalidArgumentError
from rabibell.hilbert import QUBIT_LABELS, Operator, tensor

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |e><g|
SIGMA_MINUS = SIGMA_PLUS.T.copy()
IDENTITY_2 = np.eye(2, dtype=complex)

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
# Columns are |++>, |+->, |-+>, |--> with |+-> = (|g> +- |e>)/sqrt(2).
ROTATED_BASIS = np.kron(HADAMARD, HADAMARD)
ROTATED_LABELS = ("++", "+-", "-+", "--")

COUPLING_TOL = 1e-12


@dataclass(frozen=True)
class RabiParams:
    """Model parameters in natural units (all frequencies relative to ``omega``)."""

    omega: float = 1.0
    omega1: float = 0.0
    omega2: float = 0.0
    gamma1: float = 0.0
    gamma2: float = 0.0

    def __post_init__(self):
        for name in ("omega", "omega1", "omega2", "gamma1", "gamma2"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0:
                raise InvalidArgumentError(f"{name} must be finite and >= 0, got {value}")
            object.__setattr__(self, name, value)
        if self.omega <= 0:
            raise InvalidArgumentError("omega must be > 0")

    @property
    def equal_frequencies(self) -> bool:
        return self.omega1 == self.omega2

    @property
    def omega_q(self) -> float:
        """Qubit frequency used for the detuning: the common one, or the smaller."""
        return min(self.omega1, self.omega2)

    @property
    def delta(self) -> float:
        """Detuning ``omega - omega_q``."""
        return self.omega - self.omega_q

    def with_(self, **changes) -> "RabiParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class FockCutoff:
    n_max: int
    tail_tolerance: float = 1e-10

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 2:
            raise InvalidArgumentError(f"n_max must be an integer >= 2, got {self.n_max}")
        object.__setattr__(self, "n_max", int(self.n_max))


@dataclass(frozen=True)
class GateDesign:
    """A solution ``(n, m)`` of the Bell-gate coupling condition."""

    n: int
    m: int
    gamma1: float
    gamma2: float
    delta: float
    t_peak: float
    bell_map: dict = field(default_factory=dict)

    def __post_init__(self):
        target = (2 * self.m + 1) * self.delta**2 / (16 * self.n)
        if abs(self.gamma1 * self.gamma2 - target) > COUPLING_TOL * max(abs(target), 1e-300):
            raise InvalidArgumentError("couplings do not satisfy the Bell-gate condition")


def n_levels(cutoff) -> int:
    """Accept a :class:`FockCutoff` or a plain integer."""
    if isinstance(cutoff, FockCutoff):
        return cutoff.n_max
    return FockCutoff(cutoff).n_max


def cutoff_for_displacement(r: float) -> int:
    """Fock levels needed to hold a coherent amplitude of modulus ``r``.

    ``ceil(r**2 + 8 r + 20)``: mean photon number plus a wide Poisson tail
    margin, floored at 20 levels.
    """
    r = abs(float(r))
    return int(math.ceil(r * r + 8.0 * r + 20.0))


def annihilation(cutoff) -> Operator:
    n = n_levels(cutoff)
    return Operator(np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1), check=False)


def number_diagonal(cutoff) -> np.ndarray:
    return np.arange(n_levels(cutoff), dtype=float)


_SINGLE_QUBIT = {"x": SIGMA_X, "z": SIGMA_Z, "plus": SIGMA_PLUS, "minus": SIGMA_MINUS}


def pauli(which: str, qubit: int, cutoff) -> Operator:
    """Single-qubit operator embedded in the full (2, 2, N) space."""
    if which not in _SINGLE_QUBIT:
        raise InvalidArgumentError(f"unknown qubit operator {which!r}")
    if qubit not in (1, 2):
        raise InvalidArgumentError(f"qubit must be 1 or 2, got {qubit}")
    n = n_levels(cutoff)
    mat = _SINGLE_QUBIT[which]
    herm = which in ("x", "z")
    factors = [Operator(mat, hermitian=herm), Operator(IDENTITY_2, hermitian=True)]
    if qubit == 2:
        factors.reverse()
    return tensor(factors + [Operator(np.eye(n), hermitian=True)])


def _field_quadrature(n):
    a = np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1)
    return a + a.T


def _assemble(omega_b, omega1, omega2, gamma1, gamma2, n):
    # Diagonal part and the qubit-boson coupling are built blockwise in the
    # 4 x 4 qubit index; avoids forming 4N x 4N Kronecker products.
    sz1 = np.array([-1, -1, 1, 1], dtype=float)
    sz2 = np.array([-1, 1, -1, 1], dtype=float)
    diag = (omega_b * np.arange(n)[None, :] + (0.5 * omega1 * sz1 + 0.5 * omega2 * sz2)[:, None])
    coupling = gamma1 * np.kron(SIGMA_X, IDENTITY_2) + gamma2 * np.kron(IDENTITY_2, SIGMA_X)
    h = np.kron(coupling, _field_quadrature(n))
    h[np.diag_indices_from(h)] += diag.ravel()
    return Operator(h, hermitian=True, space_dims=(2, 2, n), check=False)


def build_full_hamiltonian(p: RabiParams, cutoff) -> Operator:
    return _assemble(p.omega, p.omega1, p.omega2, p.gamma1, p.gamma2, n_levels(cutoff))


def build_slow_qubit_hamiltonian(p: RabiParams, cutoff) -> Operator:
    if not p.equal_frequencies:
        raise InvalidArgumentError("slow-qubit Hamiltonian requires omega1 == omega2")
    if p.delta <= 0:
        raise InvalidArgumentError(f"detuning must be > 0, got {p.delta}")
    return _assemble(p.delta, 0.0, 0.0, p.gamma1, p.gamma2, n_levels(cutoff))


def parity_diagonal(cutoff) -> np.ndarray:
    """Diagonal of ``sigma_z^(1) sigma_z^(2) (-1)^(a^dag a)`` in the product basis."""
    n = n_levels(cutoff)
    qubit_sign = np.array([1, -1, -1, 1], dtype=float)
    return np.kron(qubit_sign, (-1.0) ** np.arange(n))


def parity_operator(cutoff) -> Operator:
    n = n_levels(cutoff)
    return Operator(np.diag(parity_diagonal(n)), hermitian=True, unitary=True,
                    space_dims=(2, 2, n), check=False)


def parity_chain_of(q: str, n: int) -> str:
    """``"even"`` for parity +1, ``"odd"`` for -1."""
    if q not in QUBIT_LABELS:
        raise InvalidArgumentError(f"unknown two-qubit label {q!r}")
    excitations = q.count("e") + int(n)
    return "even" if excitations % 2 == 0 else "odd"


def _require_delta(p):
    if p.delta <= 0:
        raise InvalidArgumentError(f"detuning must be > 0, got {p.delta}")
    return p.delta


def gamma_operator(p: RabiParams) -> Operator:
    delta = _require_delta(p)
    g = (p.gamma1 * np.kron(SIGMA_X, IDENTITY_2) + p.gamma2 * np.kron(IDENTITY_2, SIGMA_X)) / delta
    return Operator(g, hermitian=True, space_dims=(2, 2))


def gamma_eigenvalues(p: RabiParams) -> np.ndarray:
    """Eigenvalues of gamma on ``ROTATED_BASIS``: (g+, g-, -g-, -g+)."""
    delta = _require_delta(p)
    gp = (p.gamma1 + p.gamma2) / delta
    gm = (p.gamma1 - p.gamma2) / delta
    return np.array([gp, gm, -gm, -gp])


def check_coupling_condition(p: RabiParams, n: int, m: int):
    """Test ``Gamma1 Gamma2 = (2m + 1) Delta^2 / (16 n)``.

    Returns ``(satisfied, residual)`` with the residual measured in units
    of ``Delta^2``.
    """
    if n < 1 or m < 0:
        raise InvalidArgumentError("need n >= 1 and m >= 0")
    delta = _require_delta(p)
    residual = abs(p.gamma1 * p.gamma2 - (2 * m + 1) * delta**2 / (16 * n)) / delta**2
    return residual <= COUPLING_TOL, residual


def solve_gamma2(gamma1: float, delta: float, n: int, m: int) -> float:
    if gamma1 <= 0:
        raise InvalidArgumentError("gamma1 must be > 0 to solve for gamma2")
    if delta <= 0:
        raise InvalidArgumentError("delta must be > 0")
    if n < 1 or m < 0:
        raise InvalidArgumentError("need n >= 1 and m >= 0")
    return (2 * m + 1) * delta**2 / (16 * n * gamma1)
