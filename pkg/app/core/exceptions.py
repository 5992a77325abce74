"""Error hierarchy shared by the library, the CLI and the HTTP layer.

Every error carries the process exit code the CLI reports for it.
"""
from typing import Any, Dict, Optional


class LatticeLabError(Exception):
    exit_code = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class SpecParseError(LatticeLabError):
    """Spec or profile file is not valid JSON"""
    exit_code = 2


class UnknownEntryError(LatticeLabError, KeyError):
    exit_code = 2

    def __str__(self) -> str:
        return self.message


class SpecValidationError(LatticeLabError, ValueError):
    exit_code = 3


class DimensionMismatchError(SpecValidationError):
    pass


class DimensionTooLargeError(SpecValidationError):
    pass


class NotAbsorbingError(SpecValidationError):
    """Some ray from the origin never enters the body"""


class DegenerateNormError(LatticeLabError):
    exit_code = 4


class UnboundedDirectionError(DegenerateNormError):
    """Some ray from the origin stays inside the body up to the scale cap"""
