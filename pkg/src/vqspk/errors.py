"""Exception hierarchy shared by every module."""


class VqspkError(Exception):
    """Base class for all errors raised by vqspk."""


class ConfigError(VqspkError, ValueError):
    """A configuration value violates its invariants."""


class NotWavError(VqspkError):
    pass


class UnsupportedEncodingError(VqspkError):
    pass


class TruncatedError(VqspkError):
    pass


class IoFailure(VqspkError, OSError):
    pass


class EmptyInputError(VqspkError, ValueError):
    pass


class TooFewFramesError(VqspkError, ValueError):
    pass


class InvalidGeometryError(VqspkError, ValueError):
    pass


class DimensionMismatchError(VqspkError, ValueError):
    pass


class DuplicateIdError(VqspkError, ValueError):
    pass


class FormatError(VqspkError):
    """A speaker database file is malformed."""


class ConfigMismatchError(VqspkError):
    """A stored configuration disagrees with one forced by the caller."""
