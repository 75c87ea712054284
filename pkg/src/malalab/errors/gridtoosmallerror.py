from dataclasses import dataclass

from malalab.errors.malalaberror import MalaLabError


@dataclass(unsafe_hash=True)
class GridTooSmallError(MalaLabError):
    """The discretisation window misses too much target mass."""

    coverage: float

    def __init__(self, coverage: float, required: float):
        object.__setattr__(self, "coverage", float(coverage))
        super().__init__(
            f"grid covers mass {coverage:.12f}, need at least {required:.12f}"
        )
