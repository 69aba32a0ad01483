"""Exception types shared across the package."""


class DpmargError(Exception):
    """Base class for package errors."""


class ValidationError(DpmargError):
    """Bad configuration or malformed input; CLI exits with code 2."""


class InvalidQueryError(ValidationError):
    """Query index out of range or structurally invalid."""


class IncompleteInputError(DpmargError):
    """A required estimate or field is missing."""


class SizeGuardError(DpmargError):
    """Requested brute-force enumeration exceeds the guarded size."""


class NotInSupportError(DpmargError):
    """Query outside the released support or synopsis catalogs."""
