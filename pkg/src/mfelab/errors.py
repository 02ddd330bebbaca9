"""Exception hierarchy shared by every mfelab module."""


class MFEError(Exception):
    """Base class for all errors raised by mfelab."""


class NonZeroMean(MFEError):
    """A field that must integrate to zero does not."""


class Inadmissible(MFEError):
    """A state lies outside the admissible set (a weighted integral is not positive)."""


class InadmissibleInit(Inadmissible):
    pass


class LineSearchStall(MFEError):
    """Backtracking shrank the step below the stall threshold.

    The best state reached so far is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NotConverged(UserWarning):
    """Issued (not raised) when a solver exhausts its iteration budget."""


class TooFewSamples(MFEError):
    pass


class PoleCoincidence(MFEError):
    pass


class InsufficientResolution(MFEError):
    pass


class NonConvergence(MFEError):
    pass


class AdmissibilityLoss(MFEError):
    pass


class IllConditionedFit(MFEError):
    pass


class GluingMismatch(MFEError):
    pass


class EmptyPositiveSet(MFEError):
    pass


class BadRadii(MFEError):
    pass


class ConfigError(MFEError):
    pass
