"""Exception hierarchy.

Everything deriving from :class:`ValidationError` is detectable from the
inputs alone, before any heavy computation; the CLI maps it to exit code 2.
"""


class MRFCDError(Exception):
    pass


class ValidationError(MRFCDError, ValueError):
    """Bad arguments, violated preconditions or theorem gates."""


class EnumerationCapError(ValidationError):
    """A model or joint sample space is too large to enumerate."""


class NotPositiveDefiniteError(ValidationError):
    pass


class BoundNotApplicableError(ValidationError):
    """Parameters fall outside the region where a bound is proven."""
