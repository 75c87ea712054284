from dataclasses import dataclass, field
from typing import Tuple

from malalab.errors.malalaberror import MalaLabError


@dataclass(unsafe_hash=True)
class ProfileInvalidError(MalaLabError):
    """A target's declared smoothness profile is violated at a probe point."""

    quantity: str
    point: Tuple[float, ...] = field(hash=False)
    margin: float

    def __init__(self, quantity: str, point, margin: float):
        object.__setattr__(self, "quantity", quantity)
        object.__setattr__(self, "point", tuple(float(x) for x in point))
        object.__setattr__(self, "margin", float(margin))
        shown = ", ".join(f"{x:.6g}" for x in self.point[:8])
        if len(self.point) > 8:
            shown += ", ..."
        super().__init__(
            f"{quantity} bound violated by {-margin:.3e} at q=({shown})"
        )
