"""Exception hierarchy shared across the toolkit.

Every domain failure derives from FilterDistillError and carries a short
machine-readable code (the class name) used by the CLI's error reporting.
"""


class FilterDistillError(Exception):
    """Base class for all domain errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


class BadMagic(FilterDistillError):
    pass


class UnsupportedVersion(FilterDistillError):
    pass


class TruncatedFile(FilterDistillError):
    pass


class DuplicateEntry(FilterDistillError):
    pass


class NonFiniteValue(FilterDistillError):
    pass


class IoFailure(FilterDistillError):
    pass


class ZeroVariance(FilterDistillError):
    pass


class KMismatch(FilterDistillError):
    pass


class EmptyCandidates(FilterDistillError):
    pass


class HashMismatch(FilterDistillError):
    pass


class IndexOutOfRange(FilterDistillError):
    pass


class EmptyTrainingSet(FilterDistillError):
    pass


class CodeOutOfRange(FilterDistillError):
    pass


class EvaluatorFailure(FilterDistillError):
    pass


class DegenerateDoG(FilterDistillError):
    pass


class EmptyBank(FilterDistillError):
    pass


class CoverageGap(FilterDistillError):
    pass


class DegenerateTraceWarning(UserWarning):
    """Raised as a warning when an objective curve is flat and no elbow exists."""
