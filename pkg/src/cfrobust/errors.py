"""Exception types raised across the package."""


class CFRobustError(Exception):
    """Base class for all package errors."""


class AbsoluteContinuityViolation(CFRobustError, ValueError):
    pass


class WeightSumViolation(CFRobustError, ValueError):
    pass


class ScaleMismatch(CFRobustError, ValueError):
    pass


class EmptyTrainingSet(CFRobustError, ValueError):
    pass


class NonBinaryScale(CFRobustError, ValueError):
    pass


class EnumerationTooLarge(CFRobustError, ValueError):
    pass


class TooLarge(CFRobustError, ValueError):
    pass


class OddN(CFRobustError, ValueError):
    pass


class ZeroEvidence(CFRobustError, ValueError):
    pass


class InsufficientHistory(CFRobustError, ValueError):
    pass


class InsufficientData(CFRobustError, ValueError):
    pass


class UnsupportedMeasure(CFRobustError, TypeError):
    """Raised when a KL or binary measure is requested from a scalar-only predictor."""


class ParseError(CFRobustError, ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownRatingValue(ParseError):
    pass


class FormatError(CFRobustError, ValueError):
    pass
