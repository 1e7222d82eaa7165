"""Exception hierarchy shared by every polyvar module."""


class PolyvarError(ValueError):
    """Base class for invalid inputs and failed preconditions."""


class ZeroVectorError(PolyvarError):
    """A direction vector has (numerically) zero Euclidean norm."""


class DimensionTooSmallError(PolyvarError):
    """The ambient dimension is below the supported minimum."""


class DimensionMismatchError(PolyvarError):
    """Two operands disagree on their dimension."""


class DimensionTooLargeError(PolyvarError):
    """An exact (enumeration or hull) path was asked for a dimension it cannot handle."""

    def __init__(self, n: int, limit: int, hint: str = ""):
        """Record the offending dimension and the supported limit."""
        self.n = n
        self.limit = limit
        message = f"dimension {n} exceeds the exact-path limit {limit}"
        if hint:
            message += f"; {hint}"
        super().__init__(message)


class SingularMatrixError(PolyvarError):
    """A linear map is not (numerically) invertible."""


class NotFiniteError(PolyvarError):
    """A matrix or report contains NaN or infinite values."""


class IndexOutOfRangeError(PolyvarError):
    """A coordinate or facet index is outside ``1..n``."""


class NotOrthogonalError(PolyvarError):
    """A direction that must lie in the hyperplane is not orthogonal to theta."""


class NotUnitError(PolyvarError):
    """A direction that must be a unit vector is not."""


class NotOrthonormalTripleError(PolyvarError):
    """``(theta, eta1, eta2)`` is not an orthonormal triple."""


class MomentOverflowError(PolyvarError):
    """Factorial arguments exceed what the rational backend is allowed to build."""


class InsufficientDataError(PolyvarError):
    """Too few samples (or zero total weight) to finalize statistics."""


class NoBasisError(PolyvarError):
    """A basis-dependent statistic was requested from an accumulator without a basis."""


class DegenerateMarginalError(PolyvarError):
    """A marginal second moment is zero, so its Borell ratio is undefined."""


class NotIsotropicError(PolyvarError):
    """The base sampler of a rotation experiment is not isotropic."""


class DegenerateInputError(PolyvarError):
    """Hull input does not affinely span the requested dimension."""


class UnsupportedDegreeError(PolyvarError):
    """A monomial degree above the oracle's cap was requested."""


class ReportIoError(OSError):
    """A report could not be written to its destination."""


class AssertionFailedError(RuntimeError):
    """Raised when one or more mathematical checks of a run fail.

    The CLI maps this error, and only this error, to exit code 2.
    """

    def __init__(self, failures: list[str]):
        """Store the failed checks and build a concise message."""
        self.failures = list(failures)
        shown = "; ".join(self.failures[:5])
        suffix = " ..." if len(self.failures) > 5 else ""
        super().__init__(f"{len(self.failures)} check(s) failed: {shown}{suffix}")
