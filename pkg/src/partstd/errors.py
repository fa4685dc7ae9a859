"""Exception types shared across the package."""


class PartstdError(Exception):
    """Base class for all errors raised by partstd."""


class ParseError(PartstdError):
    """Malformed schema or catalog file. Message names the offending line."""


class SchemaError(PartstdError):
    """A schema violates one of its invariants."""


class InsufficientData(PartstdError):
    pass


class SchemaMismatch(PartstdError):
    """Records or feature rows do not match the layout they are applied to."""


class DimensionMismatch(PartstdError):
    pass


class GroupAssignmentError(PartstdError):
    """Grouped evaluation with overlapping or incomplete column groups."""
