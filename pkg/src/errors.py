# src/errors.py
"""
Exception hierarchy.

ValidationError covers bad input or parameters (CLI exit code 2),
NumericalError covers numerical failure (CLI exit code 3).
"""


class NbtError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(NbtError, ValueError):
    pass


class NumericalError(NbtError, ArithmeticError):
    pass


# ---------- Validation ----------

class DimensionError(ValidationError):
    pass


class GraphFormatError(ValidationError):
    def __init__(self, message, record=None):
        if record is not None:
            message = f"record {record}: {message}"
        super().__init__(message)
        self.record = record


class AttenuationRangeError(ValidationError):
    """t lies outside the half-open interval [0, upper)."""

    def __init__(self, t, upper, what="t"):
        super().__init__(
            f"{what}={t!r} is outside the permitted range [0, {format_upper(upper)})"
        )
        self.t = t
        self.upper = upper


class OracleLimitError(ValidationError):
    def __init__(self, estimate, limit):
        super().__init__(
            f"walk enumeration would visit about {estimate:.3g} walks (limit {limit:.3g})"
        )
        self.estimate = estimate
        self.limit = limit


# ---------- Numerical ----------

class ElementwisePoleError(NumericalError):
    def __init__(self, message, entry=None):
        super().__init__(message)
        self.entry = entry


class SolverError(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SpectralRadiusError(NumericalError):
    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class TruncationError(NumericalError):
    pass


class IdentityCheckError(NumericalError):
    def __init__(self, failed):
        super().__init__("identity check failed: " + ", ".join(failed))
        self.failed = list(failed)


class RadiusUncheckedWarning(UserWarning):
    """t was only checked against the elementwise pole condition."""


def format_upper(upper):
    return "inf" if upper == float("inf") else f"{upper:.12g}"
