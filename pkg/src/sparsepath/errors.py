"""Exception types raised across the library."""


class SparsePathError(Exception):
    """Base class for all library-specific errors."""


class RankDeficient(SparsePathError):
    """The restricted design matrix is numerically rank deficient."""


class DegenerateColumn(SparsePathError):
    """A candidate column lies numerically in the span of the current support."""


class NoCandidates(SparsePathError):
    """Every column outside the support is numerically in its span."""


class Infeasible(SparsePathError):
    """The regressor cannot produce a support of the requested size."""


class NonConverged(SparsePathError):
    """An iterative solver hit its iteration cap before reaching tolerance."""


class ZeroResidual(SparsePathError):
    """The noise-scale estimate underflowed; the fit interpolates the data."""


class ZeroColumn(SparsePathError):
    """A design-matrix column has (numerically) zero norm."""


class InvalidConfig(SparsePathError):
    """A configuration value violates its documented precondition."""


class TooLarge(SparsePathError):
    """A combinatorial diagnostic was requested beyond its enumeration guard."""


class EpsilonInfeasible(SparsePathError):
    """No margin parameter below one exists for the given (n, k)."""
