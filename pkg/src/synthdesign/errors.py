"""Exception types shared across the package."""


class SynthDesignError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(SynthDesignError):
    """Input array has the wrong shape for the requested operation."""


class NonFiniteError(SynthDesignError):
    """Input contains NaN or infinite entries."""


class NotPositiveDefiniteError(SynthDesignError):
    """A Cholesky pivot fell below the positive-definiteness floor."""


class NoConvergenceError(SynthDesignError):
    """Iteration cap reached before the stopping criterion was met.

    Solvers that can return a usable partial answer attach it via the
    ``result`` and ``stats`` attributes.
    """

    def __init__(self, message, result=None, stats=None):
        super().__init__(message)
        self.result = result
        self.stats = stats


class DegenerateDiagonalError(SynthDesignError):
    """Normalizing diagonal has an entry too small to divide by."""


class DegenerateWeightsError(SynthDesignError):
    """Weight vector underflowed and cannot be normalized."""


class EmptyGroupError(SynthDesignError):
    """An assignment left the treated or control group empty."""


class TooLargeError(SynthDesignError):
    """Problem size exceeds the exhaustive-enumeration cap."""


class InfeasibleEpsilonError(SynthDesignError):
    """Rejection sampling could not satisfy the weight-magnitude bounds."""


class DualityGapError(SynthDesignError):
    """The enumeration-based norm identity failed its tolerance."""


class MissingColumnError(SynthDesignError):
    """A required column is absent from the input CSV."""


class DuplicateCellError(SynthDesignError):
    """The same (unit, time) pair appears more than once in the input CSV."""


class IncompleteGridError(SynthDesignError):
    """The unit-by-time grid has missing cells.

    ``missing`` lists the absent (unit, time) pairs.
    """

    def __init__(self, message, missing=None):
        super().__init__(message)
        self.missing = missing or []


class NonNumericOutcomeError(SynthDesignError):
    """Outcome column contains values that cannot be parsed as numbers."""


class NormalizationMismatchError(SynthDesignError):
    """Weight vector does not satisfy its declared normalization."""


class EmptySequenceError(SynthDesignError):
    """An aggregate was requested over an empty sequence."""
