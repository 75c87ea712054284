from dataclasses import dataclass
from typing import Optional

from malalab.errors.malalaberror import MalaLabError


@dataclass(unsafe_hash=True)
class InvalidInputError(MalaLabError, ValueError):
    """Raised when an argument violates an operation's precondition."""

    parameter: Optional[str]

    def __init__(self, message: str, parameter: Optional[str] = None):
        object.__setattr__(self, "parameter", parameter)
        if parameter is not None:
            message = f"{parameter}: {message}"
        super().__init__(message)
