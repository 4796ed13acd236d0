"""Exception hierarchy shared by every module."""


class MetamorphError(Exception):
    """Base class for all errors raised by the harness."""


class MalformedCsv(MetamorphError, ValueError):
    pass


class DuplicateTimestamp(MetamorphError, ValueError):
    pass


class UnknownColumn(MetamorphError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown column"


class InsufficientData(MetamorphError, ValueError):
    """Series too short to form a single (window, target) pair."""


class ZeroRange(MetamorphError, ValueError):
    """Min-max normalizer fitted on data whose max equals its min."""


class LengthMismatch(MetamorphError, ValueError):
    pass


class TooFewPairs(MetamorphError, ValueError):
    pass


class TargetConstant(MetamorphError, ValueError):
    pass


class ShapeMismatch(MetamorphError, ValueError):
    pass


class TooFewRuns(MetamorphError, ValueError):
    pass


class SeriesTooShort(MetamorphError, ValueError):
    pass


class NonPositiveWindow(MetamorphError, ValueError):
    pass


class CleanBuildFails(MetamorphError, RuntimeError):
    """The unmutated pipeline already fails an MR, so a kill matrix is meaningless."""
