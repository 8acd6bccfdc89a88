"""Class-adaptive principal directions for zero-shot, generalized
zero-shot and few/one-shot classification."""

from .errors import CapdError, FormatError, ParseError, SolverError, ValidationError

__all__ = [
    "CapdError",
    "FormatError",
    "ParseError",
    "SolverError",
    "ValidationError",
]

__version__ = "0.1.0"
