"""Exception hierarchy shared by all capd modules."""


class CapdError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(CapdError):
    """Inputs violate a documented precondition or invariant."""


class FormatError(CapdError):
    """A file does not conform to its declared schema (e.g. ragged rows)."""


class ParseError(CapdError):
    """A cell or token could not be parsed into the expected type."""


class SolverError(CapdError):
    """A numerical routine failed (singular system, non-convergence)."""
