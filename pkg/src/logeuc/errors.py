"""Exception hierarchy shared by every module."""


class LogEucError(Exception):
    """Base class for all library errors."""


# spd
class NotConverged(LogEucError):
    pass


class NotPositiveDefinite(LogEucError):
    pass


class ZeroLogMatrix(LogEucError):
    pass


class DegenerateSeries(LogEucError):
    pass


# maps and kernels
class NormViolation(LogEucError):
    pass


class DegreeOverflow(LogEucError):
    pass


class SchemeMismatch(LogEucError):
    pass


class NotPowerOfTwo(LogEucError):
    pass


class LengthMismatch(LogEucError):
    pass


class ThetaOutOfRange(LogEucError):
    pass


# estimator lab
class InsufficientTrials(LogEucError):
    pass


# classification
class SingleClass(LogEucError):
    pass


class NonFinite(LogEucError):
    pass


class NotPsd(LogEucError):
    pass


class DimensionMismatch(LogEucError):
    pass


class TooFewSamplesPerClass(LogEucError):
    pass


# data
class InvalidRange(LogEucError):
    pass


class IndexOutOfRange(LogEucError):
    pass


class InconsistentJointCount(LogEucError):
    pass


class ParseError(LogEucError):
    """Malformed input file; ``location`` names the offending line or record."""

    def __init__(self, message, location=None):
        super().__init__(message if location is None else f"{location}: {message}")
        self.location = location
