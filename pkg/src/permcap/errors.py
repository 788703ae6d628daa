"""Exception types raised by permcap."""


class PermcapError(Exception):
    """Base class for all library errors."""


class DomainError(PermcapError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class QuadratureError(PermcapError, ArithmeticError):
    """Adaptive quadrature did not reach its tolerance within the subdivision limit.

    ``where`` carries caller context (e.g. the offending swap triple) so that
    failures deep inside a moment computation can be traced back.
    """

    def __init__(self, message, where=None):
        super().__init__(message if where is None else f"{message} [{where}]")
        self.where = where


class OrbitTooLargeError(PermcapError):
    """Exact enumeration was requested for an orbit above the configured limit."""


class DegenerateInputError(PermcapError, ValueError):
    """Input data has zero variance or otherwise cannot be standardized."""


class IngestionError(PermcapError):
    """An input file could not be parsed or reconciled."""
