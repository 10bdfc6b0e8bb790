"""Two-qubit quantum Rabi model at ultra/deep-strong coupling.

Closed-form slow-qubit dynamics (Bell-state generation and analysis) and
exact dense propagation of the full Hamiltonian on a truncated Fock space.
"""

from rabibell.errors import (
    ConfigError,
    ConvergenceError,
    DegenerateInputError,
    DimensionMismatchError,
    InvalidArgumentError,
    VerificationError,
)
from rabibell.hilbert import DensityMatrix, Operator, StateVector
from rabibell.model import FockCutoff, GateDesign, RabiParams

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DegenerateInputError",
    "DensityMatrix",
    "DimensionMismatchError",
    "FockCutoff",
    "GateDesign",
    "InvalidArgumentError",
    "Operator",
    "RabiParams",
    "StateVector",
    "VerificationError",
]
