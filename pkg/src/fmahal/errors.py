"""Exception hierarchy.

Every error raised by the package derives from :class:`FdaError`, which is a
``ValueError`` so that callers treating bad input generically keep working.
"""


class FdaError(ValueError):
    """Base class for all package errors."""


# basis
class InvalidConfigurationError(FdaError):
    pass


class InvalidDomainError(FdaError):
    pass


class RankDeficientFitError(FdaError):
    def __init__(self, message, effective_rank):
        super().__init__(f"{message} (effective rank {effective_rank})")
        self.effective_rank = effective_rank


class OutOfDomainError(FdaError):
    pass


class BasisMismatchError(FdaError):
    pass


class DerivativeOrderError(FdaError):
    pass


# fpca
class EmptySampleError(FdaError):
    pass


class InsufficientDataError(FdaError):
    pass


class BasisDegenerateError(FdaError):
    pass


class KOutOfRangeError(FdaError):
    pass


# distances / classifiers
class TwoClassOnlyError(FdaError):
    pass


class InvalidKError(FdaError):
    pass


class InvalidPriorsError(FdaError):
    pass


class DegenerateCovarianceError(FdaError):
    pass


# tuning
class FoldDegenerateError(FdaError):
    pass


# datasets
class DataFormatError(FdaError):
    pass


class DataParseError(FdaError):
    pass


class InvalidSplitError(FdaError):
    pass
