"""Exception types shared across the package."""


class GasSenseError(Exception):
    """Base class for all package errors."""


class ConfigurationError(GasSenseError, ValueError):
    """Invalid or inconsistent input data (db files, configs, specs)."""


class DomainError(GasSenseError, ValueError):
    """Argument outside the domain of a physical function."""


class SingularityError(GasSenseError, ArithmeticError):
    """A formula hit its pole (e.g. Clausius-Mossotti denominator)."""


class AccuracyError(GasSenseError, ArithmeticError):
    """Quadrature or series failed to reach the requested tolerance."""


class InstabilityError(GasSenseError, ArithmeticError):
    """Negative trap curvature: the particle is not held by the trap."""


class NumericError(GasSenseError, ArithmeticError):
    """Non-finite values during training or inference."""


class FormatError(GasSenseError, IOError):
    """Corrupt, truncated or incompatible binary file."""
