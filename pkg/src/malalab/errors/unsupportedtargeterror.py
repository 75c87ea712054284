from dataclasses import dataclass

from malalab.errors.malalaberror import MalaLabError


@dataclass(unsafe_hash=True)
class UnsupportedTargetError(MalaLabError):
    """Raised when an estimator needs exact draws the target cannot supply."""

    target: str

    def __init__(self, target: str, need: str = "an exact sampler"):
        object.__setattr__(self, "target", target)
        super().__init__(f"target {target!r} does not provide {need}")
