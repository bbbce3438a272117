"""Exception hierarchy shared across the package."""


class PECurvesError(Exception):
    """Base class for all errors raised by pecurves."""


class SignatureError(PECurvesError):
    """Invalid (n, p) signature or field combination."""


class DimensionMismatchError(PECurvesError):
    """Vector/matrix sizes disagree with the ambient dimension."""


class PathParseError(PECurvesError):
    """Syntax or structural error in a path definition document.

    Carries the 1-based line and column of the offending token when known.
    """

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", col {col})" if col is not None else ")")
        super().__init__(message + where)


class EvalDomainError(PECurvesError):
    """Expression evaluation hit a singularity (log at 0, sqrt of a
    negative real, division by zero, overflow)."""


class JetOrderError(PECurvesError):
    """A jet of insufficient derivative order was supplied."""


class StrongRegularityError(PECurvesError):
    """The frame matrix M(x)(t) is numerically singular at some t."""

    def __init__(self, message, t=None, abs_det=None):
        self.t = t
        self.abs_det = abs_det
        super().__init__(message)


class DegeneratePathError(PECurvesError):
    """[x'(t), x'(t)] vanishes (or nearly so) where it must not."""


class IntervalMismatchError(PECurvesError):
    """Two paths that must share a parameter interval do not."""


class QuadratureError(PECurvesError):
    """Adaptive quadrature failed to converge within its budget."""


class IndeterminateTailError(PECurvesError):
    """A tail arc-length integral could not be classified as finite or
    infinite within the probe budget."""


class InversionError(PECurvesError):
    """Arc-length inversion failed (target outside range or bracket
    search exhausted)."""
