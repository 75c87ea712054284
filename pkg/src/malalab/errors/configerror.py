from dataclasses import dataclass
from typing import Optional

from malalab.errors.malalaberror import MalaLabError


@dataclass(unsafe_hash=True)
class ConfigError(MalaLabError):
    """An experiment config could not be read or validated."""

    key: Optional[str]

    def __init__(self, message: str, key: Optional[str] = None):
        object.__setattr__(self, "key", key)
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)

    @property
    def cause(self):
        """Normally the pydantic ValidationError or a TOML decode error"""
        return self.__cause__
