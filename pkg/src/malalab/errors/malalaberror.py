from dataclasses import dataclass


@dataclass(unsafe_hash=True)
class MalaLabError(Exception):
    """The base class for all errors raised by malalab."""

    message: str

    def __init__(self, message: str):
        object.__setattr__(self, "message", message)
        super().__init__(message)

    def __str__(self):
        return self.message
