"""Shared exception types."""


class DsubError(Exception):
    """Base class for all errors raised by this package."""


class InternalLimit(DsubError):
    """A recursion-depth safety valve fired.

    Reaching this limit on any well-formed input is a bug, never an
    expected outcome; callers should let it propagate.
    """
