"""Exception types raised across the package."""


class MetapcaError(Exception):
    """Base class for all package errors."""


class InvalidMatrix(MetapcaError):
    """Matrix input is non-square, non-finite, or materially asymmetric."""


class InvalidSpec(MetapcaError):
    """Model or solver specification violates its invariants."""


class InvalidData(MetapcaError):
    """Task data is empty or dimensionally inconsistent."""


class InvalidIndex(MetapcaError):
    """An index set refers outside the matrix dimensions."""


class InvalidCovariance(MetapcaError):
    """A covariance matrix is not positive semi-definite beyond tolerance."""


class SolverDiverged(MetapcaError):
    """An iterate became non-finite during operator splitting."""


class AssumptionViolated(MetapcaError):
    """A model quantity required by the theory diagnostics is degenerate."""
