"""Exception types shared across the package.

ValidationError (and subclasses) map to CLI exit code 1,
ResourceGuardError to exit code 2.
"""


class ValidationError(ValueError):
    """Bad input data or arguments."""


class ParseError(ValidationError):
    """A cell or token could not be parsed as a finite number."""


class SchemaError(ValidationError):
    """Structurally invalid input (duplicate headers, shape mismatch, ...)."""


class InsufficientDataError(ValidationError):
    """Too few samples for the requested operation."""


class ResourceGuardError(RuntimeError):
    """A size estimate exceeded the configured cap; aborted before allocation."""
