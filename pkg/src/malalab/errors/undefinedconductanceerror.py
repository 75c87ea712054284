from dataclasses import dataclass

from malalab.errors.malalaberror import MalaLabError


@dataclass(unsafe_hash=True)
class UndefinedConductanceError(MalaLabError):
    """No subset S satisfies s < pi(S) < 1 - s."""

    s: float

    def __init__(self, s: float):
        object.__setattr__(self, "s", float(s))
        super().__init__(f"no subset has stationary mass in ({s:g}, {1 - s:g})")
