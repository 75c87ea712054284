# Experiment runners live here; each one backs a mala-lab subcommand.
from .base import ExperimentRegistry, ExperimentRunner, RunContext
from .chains import ConductanceRunner, LovaszRunner, MixingScanRunner
from .lemmas import (
    AcceptanceTailRunner,
    DecompositionRunner,
    ProposalOverlapRunner,
    VerifyMomentsRunner,
)
from .sampling import SampleRunner

EXPERIMENTS = ExperimentRegistry()
for _runner in (
    SampleRunner(),
    VerifyMomentsRunner(),
    AcceptanceTailRunner(),
    DecompositionRunner(),
    ProposalOverlapRunner(),
    MixingScanRunner(),
    ConductanceRunner(),
    LovaszRunner(),
):
    EXPERIMENTS.register(_runner)

__all__ = [
    "EXPERIMENTS",
    "ExperimentRegistry",
    "ExperimentRunner",
    "RunContext",
]
