"""Exception hierarchy shared by all modules."""


class RabiError(Exception):
    """Base class for package errors."""


class InvalidArgumentError(RabiError, ValueError):
    pass


class DimensionMismatchError(InvalidArgumentError):
    pass


class DegenerateInputError(RabiError, ValueError):
    """Input has no meaningful normalization (e.g. a zero vector)."""


class ConvergenceError(RabiError, RuntimeError):
    """Fock cutoff too small for the requested dynamics.

    ``recommended`` carries a cutoff that should pass, when known.
    """

    def __init__(self, message, recommended=None):
        super().__init__(message)
        self.recommended = recommended


class ConfigError(RabiError, ValueError):
    pass


class VerificationError(RabiError, RuntimeError):
    pass
