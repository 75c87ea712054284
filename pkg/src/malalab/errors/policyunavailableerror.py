from dataclasses import dataclass

from malalab.errors.malalaberror import MalaLabError


@dataclass(unsafe_hash=True)
class PolicyUnavailableError(MalaLabError):
    """The step-size rule needs a quantity the target does not provide.

    Callers should fall back to a manual step size.
    """

    def __init__(self, message: str = "isoperimetric coefficient psi is unknown"):
        super().__init__(message)
