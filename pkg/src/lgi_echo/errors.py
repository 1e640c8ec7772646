"""Exception taxonomy shared by every module in the package."""


class LgiEchoError(Exception):
    """Base class for all errors raised by lgi_echo."""


class InvariantViolation(LgiEchoError, ValueError):
    """A constructed object breaks one of its documented invariants
    (non-normalized state, non-hermitian density matrix, ...)."""


class DomainError(LgiEchoError, ValueError):
    """An argument is outside the mathematical domain of the operation
    (negative duration, reversed time ordering, zero detuning, ...)."""


class ConfigurationError(LgiEchoError, ValueError):
    """A configuration tree or parameter block failed validation.
    The message names the offending field."""


class UndefinedEstimateError(LgiEchoError, RuntimeError):
    """An estimator has no defined value at the observed counts
    (for example zero coincidences in the accidental window)."""
