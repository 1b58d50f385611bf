class PsharpError(Exception):
    """Base class for all library errors."""


class InvalidArgument(PsharpError, ValueError):
    """Caller passed parameters that violate an operation's preconditions."""


class InvalidInput(PsharpError, ValueError):
    """Image data is numerically degenerate for the requested operation."""
