from dataclasses import dataclass

from malalab.errors.malalaberror import MalaLabError


@dataclass(unsafe_hash=True)
class NumericError(MalaLabError, ArithmeticError):
    """A gradient or energy evaluation produced a non-finite value."""

    def __init__(self, message: str):
        super().__init__(message)
