"""Lazy MALA with a trace-aware step size, plus checks of its acceptance and mixing bounds."""

from ._version import __csv_schema_version__, __title__, __version__
from .kernel import (
    AcceptanceStats,
    BurnInTarget,
    ChainState,
    PhasePoint,
    StepSizePolicy,
    Trajectory,
    burn_in_target,
    energy_difference,
    kappa_policy,
    leapfrog,
    mala_step,
    manual_policy,
    run_chain,
    theorem1_policy,
)
from .targets import (
    CosinePerturbedTarget,
    QuadraticTarget,
    SmoothnessProfile,
    TargetDensity,
    build_target,
    make_anisotropic,
    make_cosine_perturbed,
    make_gaussian,
    make_quadratic,
)

VERSION: str = __version__

__all__ = [
    "AcceptanceStats",
    "BurnInTarget",
    "ChainState",
    "CosinePerturbedTarget",
    "PhasePoint",
    "QuadraticTarget",
    "SmoothnessProfile",
    "StepSizePolicy",
    "TargetDensity",
    "Trajectory",
    "VERSION",
    "build_target",
    "burn_in_target",
    "energy_difference",
    "kappa_policy",
    "leapfrog",
    "make_anisotropic",
    "make_cosine_perturbed",
    "make_gaussian",
    "make_quadratic",
    "mala_step",
    "manual_policy",
    "run_chain",
    "theorem1_policy",
]
