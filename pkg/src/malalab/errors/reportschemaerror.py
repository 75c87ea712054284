from dataclasses import dataclass

from malalab.errors.malalaberror import MalaLabError


@dataclass(unsafe_hash=True)
class ReportSchemaError(MalaLabError):
    """A CSV file was not written by this tool or uses an unknown schema."""

    path: str

    def __init__(self, path: str, reason: str):
        object.__setattr__(self, "path", path)
        super().__init__(f"{path}: {reason}")
