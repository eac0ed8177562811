"""Exception and warning classes raised across the package."""


class MSFuzzyError(Exception):
    """Base class for all package errors."""


class ValidationError(MSFuzzyError, ValueError):
    """A domain object was constructed with values violating its invariants."""


class NonErgodicChain(MSFuzzyError):
    pass


class AbsorbingState(MSFuzzyError):
    pass


class UnsupportedOrder(MSFuzzyError):
    """Requested autoregressive order is not implemented (only p in {0, 1})."""


class DegenerateLikelihood(MSFuzzyError):
    """A filter step's normalizing constant underflowed to zero."""


class DivisionByZeroProbability(MSFuzzyError):
    pass


class InsufficientData(MSFuzzyError):
    pass


class NoConvergence(MSFuzzyError):
    pass


class SingularHessian(MSFuzzyError):
    pass


class UndefinedForSingleCluster(MSFuzzyError):
    pass


class SingleClusterPartition(MSFuzzyError):
    pass


class AllWeightsZero(MSFuzzyError):
    pass


class CoincidentCentroids(MSFuzzyError):
    pass


class LengthMismatch(MSFuzzyError, ValueError):
    pass


class WindowTooLarge(MSFuzzyError, ValueError):
    pass


class ParseError(MSFuzzyError):
    """Input file could not be parsed; the message names the offending row/column."""


class EmptySeries(MSFuzzyError):
    pass


class UnknownLabel(MSFuzzyError, KeyError):
    pass


class DegenerateDataWarning(UserWarning):
    """All observations are identical, so a k > 1 clustering is not identified."""


class ConvergenceWarning(UserWarning):
    pass
