"""Exception types shared across the package."""


class QSpectralError(Exception):
    """Base class for all package errors."""


class DimensionError(QSpectralError, ValueError):
    """Operands have incompatible dimensions or subsystem shapes."""


class ValidationError(QSpectralError, ValueError):
    """An operator fails a structural invariant (Hermiticity, positivity, trace)."""


class CapacityError(QSpectralError):
    """A computation would exceed a configured size cap."""


class EigenSolverError(QSpectralError, ArithmeticError):
    """The Hermitian eigensolver failed to converge."""


class BracketError(QSpectralError, ValueError):
    """A threshold level cannot be bracketed by the tail functional."""
