"""Exception hierarchy shared by all modules."""


class SchurHornError(Exception):
    """Base class for every error raised by this package."""


class ResolutionMismatch(SchurHornError, ValueError):
    pass


class NotHermitianError(SchurHornError, ValueError):
    pass


class NegativeSpectrumError(SchurHornError, ValueError):
    pass


class EigensolverError(SchurHornError, RuntimeError):
    pass


class DominationError(SchurHornError, ValueError):
    """Block spectra are not ordered as the averaging construction requires."""


class HypothesisError(SchurHornError, ValueError):
    """One or more hypotheses of a block-replacement check failed.

    ``violations`` lists every failed hypothesis by name.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NotMajorizedError(SchurHornError, ValueError):
    pass


class NoCrossingError(SchurHornError, ValueError):
    """The pair is equimeasurable, so there is nothing to move."""


class CoarseGridError(SchurHornError, ValueError):
    """The construction needs a finer grid than resolution ``n`` provides."""


class StrictnessError(SchurHornError, ValueError):
    pass


class RankMismatchError(SchurHornError, ValueError):
    pass


class InfeasibleSplitError(SchurHornError, ValueError):
    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


class RefinementError(SchurHornError, ValueError):
    pass


class IterationLimitError(SchurHornError, RuntimeError):
    """Raised when an iteration budget runs out.

    ``partial`` carries the best partial result reached so far.
    """

    def __init__(self, message, partial=None):
        self.partial = partial
        super().__init__(message)
