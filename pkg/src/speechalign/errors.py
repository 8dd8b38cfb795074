"""Exception hierarchy shared across the toolkit.

The CLI maps ToolkitError (and subclasses) to exit code 2; anything else
is a bug and propagates.
"""


class ToolkitError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(ToolkitError):
    """A file is malformed: bad magic, truncated payload, unparseable text."""


class ValidationError(ToolkitError):
    """An input violates a documented invariant (shape, range, duplicate key)."""
