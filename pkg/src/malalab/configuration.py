"""Experiment configuration: TOML files validated by strict pydantic models.

A config names one experiment, the target and step-size policy it needs, and
the experiment's own table. Tables may come from a named preset, in which case
keys given in the file override the preset's.

    experiment = "verify-moments"
    preset = "smoke"

    [target]
    kind = "gaussian"
    dim = 1

    [moments]
    ells = [1, 2, 4, 8]
"""

import copy
import sys
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Mapping, Optional, Union

from pydantic import Field, ValidationError, model_validator

from malalab.errors import ConfigError
from malalab.kernel import (
    DEFAULT_BURN_IN,
    DEFAULT_C0,
    StepSizePolicy,
    burn_in_target,
    kappa_policy,
    manual_policy,
    theorem1_policy,
)
from malalab.targets import (
    TargetDensity,
    make_anisotropic,
    make_cosine_perturbed,
    make_gaussian,
    make_quadratic,
)
from malalab.types import StrictModel

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


ExperimentKind = Literal[
    "sample",
    "verify-moments",
    "acceptance-tail",
    "decomposition-check",
    "proposal-overlap",
    "mixing-scan",
    "conductance",
    "lovasz-check",
]

PositiveInt = Annotated[int, Field(ge=1)]
PositiveFloat = Annotated[float, Field(gt=0.0)]
UnitInterval = Annotated[float, Field(gt=0.0, lt=1.0)]


# --- Targets ------------------------------------------------------------------


class GaussianSpec(StrictModel):
    kind: Literal["gaussian"]
    dim: PositiveInt
    sigma: PositiveFloat = 1.0

    def build(self) -> TargetDensity:
        return make_gaussian(self.dim, self.sigma)


class QuadraticSpec(StrictModel):
    kind: Literal["quadratic"]
    eigenvalues: Annotated[List[PositiveFloat], Field(min_length=1)]

    def build(self) -> TargetDensity:
        return make_quadratic(self.eigenvalues)


class AnisotropicSpec(StrictModel):
    kind: Literal["anisotropic"]
    dim: PositiveInt
    L: PositiveFloat = 1.0

    def build(self) -> TargetDensity:
        return make_anisotropic(self.dim, self.L)


class BurnInSpec(StrictModel):
    """Approximate sampler for targets without an exact one: a lazy MALA run from N(0, I)."""

    eta: PositiveFloat
    steps: PositiveInt = DEFAULT_BURN_IN


class CosineSpec(StrictModel):
    kind: Literal["cosine"]
    dim: PositiveInt
    a: Annotated[float, Field(gt=-1.0, lt=1.0)]
    burn_in: Optional[BurnInSpec] = None

    def build(self) -> TargetDensity:
        target = make_cosine_perturbed(self.dim, self.a)
        if self.burn_in is None:
            return target
        return burn_in_target(target, self.burn_in.eta, self.burn_in.steps)


TargetSpec = Annotated[
    Union[GaussianSpec, QuadraticSpec, AnisotropicSpec, CosineSpec],
    Field(discriminator="kind"),
]


# --- Policies -----------------------------------------------------------------


class ManualPolicySpec(StrictModel):
    kind: Literal["manual"]
    eta: PositiveFloat

    def build(self, target: TargetDensity) -> StepSizePolicy:
        return manual_policy(self.eta)


class Theorem1PolicySpec(StrictModel):
    kind: Literal["theorem1"]
    M: Annotated[float, Field(ge=1.0)]
    eps: UnitInterval
    c0: PositiveFloat = DEFAULT_C0

    def build(self, target: TargetDensity) -> StepSizePolicy:
        return theorem1_policy(target.profile, self.M, self.eps, self.c0)


class KappaPolicySpec(StrictModel):
    kind: Literal["kappa"]
    M: Annotated[float, Field(ge=1.0)]
    eps: UnitInterval
    c0: PositiveFloat = DEFAULT_C0

    def build(self, target: TargetDensity) -> StepSizePolicy:
        return kappa_policy(target.profile, target.dim, self.M, self.eps, self.c0)


PolicySpec = Annotated[
    Union[ManualPolicySpec, Theorem1PolicySpec, KappaPolicySpec],
    Field(discriminator="kind"),
]


# --- Experiment tables ----------------------------------------------------------

MomentLemma = Literal[
    "grad_norm", "quadratic_form", "quadratic_form_at_qt", "grad_diff", "b_eta", "delta"
]
_ETA_LEMMAS = {"quadratic_form_at_qt", "grad_diff", "b_eta", "delta"}


class SampleSettings(StrictModel):
    n_steps: PositiveInt
    thinning: PositiveInt = 1
    lazy: bool = True
    init: Optional[List[float]] = None
    """Start position; the origin when omitted."""
    binary: bool = False
    """Also write the trajectory in the binary layout."""


class MomentSettings(StrictModel):
    ells: Annotated[List[PositiveInt], Field(min_length=1)]
    n_samples: Annotated[int, Field(ge=10_000)]
    lemmas: List[MomentLemma] = ["grad_norm", "quadratic_form", "quadratic_form_at_qt", "grad_diff"]
    etas: List[PositiveFloat] = []
    t_fraction: Annotated[float, Field(ge=0.0, le=1.0)] = 0.5
    """t = t_fraction * eta for the lemmas evaluated along the leapfrog path."""
    x: Optional[List[float]] = None
    """Hessian point for quadratic_form; the origin when omitted."""
    quadrature_order: Annotated[int, Field(ge=2)] = 32

    @model_validator(mode="after")
    def _etas_when_needed(self) -> "MomentSettings":
        needs = sorted(_ETA_LEMMAS.intersection(self.lemmas))
        if needs and not self.etas:
            raise ValueError(f"etas must be given for {', '.join(needs)}")
        return self


class TailSettings(StrictModel):
    deltas: Annotated[List[UnitInterval], Field(min_length=1)]
    n_samples: PositiveInt
    eta: Optional[PositiveFloat] = None
    """Override the largest step the lemma allows."""
    good_set: bool = False
    n_starts: PositiveInt = 1_000
    n_momenta: PositiveInt = 256


class DecompositionSettings(StrictModel):
    n_points: PositiveInt
    eta: Annotated[float, Field(gt=0.0, le=0.5)]
    quadrature_order: Annotated[int, Field(ge=2)] = 64
    tolerance: PositiveFloat = 1e-9


class OverlapSettings(StrictModel):
    points: Annotated[int, Field(ge=2)] = 20
    """Grid points per axis."""


class MixingSettings(StrictModel):
    dims: Annotated[List[Literal[2, 4, 8, 16, 32]], Field(min_length=1)]
    eps: UnitInterval
    M_target: Annotated[float, Field(ge=1.0)]
    n_replicas: Annotated[int, Field(ge=10_000)]
    n_max: PositiveInt
    L: PositiveFloat = 1.0
    grid_points: Annotated[int, Field(ge=2)] = 40
    max_slope: float = 1.35
    kappa_margin: float = 0.15
    """Required gap between the fitted slope and the naive 3/2 exponent."""


class ChainGridSettings(StrictModel):
    lo: float
    hi: float
    k: Annotated[int, Field(ge=2, le=20)]


class ConductanceSettings(ChainGridSettings):
    s_values: Annotated[List[Annotated[float, Field(ge=0.0, lt=0.5)]], Field(min_length=1)]


class LovaszSettings(ChainGridSettings):
    eps: UnitInterval
    n_max: PositiveInt
    start: Literal["gaussian", "point", "stationary"] = "gaussian"
    start_std: PositiveFloat = 2.0
    """Standard deviation of the binned Gaussian start."""


_SECTIONS: Dict[str, str] = {
    "sample": "sample",
    "verify-moments": "moments",
    "acceptance-tail": "tail",
    "decomposition-check": "decomposition",
    "proposal-overlap": "overlap",
    "mixing-scan": "mixing",
    "conductance": "conductance",
    "lovasz-check": "lovasz",
}
_NEEDS_POLICY = {"sample", "conductance", "lovasz-check"}


class ExperimentConfig(StrictModel):
    experiment: ExperimentKind
    seed: Annotated[int, Field(ge=0, le=2**64 - 1)]
    preset: Optional[Literal["desk", "smoke"]] = None
    target: Optional[TargetSpec] = None
    policy: Optional[PolicySpec] = None
    sample: Optional[SampleSettings] = None
    moments: Optional[MomentSettings] = None
    tail: Optional[TailSettings] = None
    decomposition: Optional[DecompositionSettings] = None
    overlap: Optional[OverlapSettings] = None
    mixing: Optional[MixingSettings] = None
    conductance: Optional[ConductanceSettings] = None
    lovasz: Optional[LovaszSettings] = None

    @model_validator(mode="before")
    @classmethod
    def _default_overlap(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("experiment") == "proposal-overlap":
            data = {**data, "overlap": data.get("overlap", {})}
        return data

    @model_validator(mode="after")
    def _required_tables(self) -> "ExperimentConfig":
        section = _SECTIONS[self.experiment]
        if getattr(self, section) is None:
            raise ValueError(f"experiment {self.experiment!r} needs a [{section}] table")
        if self.experiment != "mixing-scan" and self.target is None:
            raise ValueError(f"experiment {self.experiment!r} needs a [target] table")
        if self.experiment in _NEEDS_POLICY and self.policy is None:
            raise ValueError(f"experiment {self.experiment!r} needs a [policy] table")
        return self

    @property
    def settings(self) -> StrictModel:
        return getattr(self, _SECTIONS[self.experiment])

    def build_target(self) -> TargetDensity:
        if self.target is None:
            raise ConfigError("no [target] table", "target")
        return self.target.build()

    def build_policy(self, target: TargetDensity) -> StepSizePolicy:
        if self.policy is None:
            raise ConfigError("no [policy] table", "policy")
        return self.policy.build(target)

    def resolved(self) -> Dict[str, Any]:
        """JSON-ready dump echoed into every output header."""
        return self.model_dump(mode="json", exclude_none=True)


# Acceptance scale ("desk") and a fast pass for CI ("smoke").
PRESETS: Dict[str, Dict[str, Dict[str, Any]]] = {
    "desk": {
        "moments": {"ells": [1, 2, 4, 8], "n_samples": 200_000, "etas": [0.1, 0.2, 0.3]},
        "tail": {"deltas": [0.5, 0.1, 0.05], "n_samples": 100_000},
        "decomposition": {"n_points": 100, "eta": 0.5},
        "overlap": {"points": 20},
        "mixing": {
            "dims": [2, 4, 8, 16, 32],
            "eps": 0.2,
            "M_target": 7.38905609893065,
            "n_replicas": 20_000,
            "n_max": 200_000,
        },
        "conductance": {"lo": -6.0, "hi": 6.0, "k": 12, "s_values": [0.0, 0.01, 0.05, 0.1, 0.2]},
        "lovasz": {"lo": -6.0, "hi": 6.0, "k": 12, "eps": 0.1, "n_max": 10_000},
        "sample": {"n_steps": 10_000},
    },
    "smoke": {
        "moments": {"ells": [1, 2], "n_samples": 10_000, "etas": [0.2]},
        "tail": {"deltas": [0.5, 0.1], "n_samples": 10_000},
        "decomposition": {"n_points": 10, "eta": 0.3},
        "overlap": {"points": 5},
        "mixing": {
            "dims": [2, 4, 8],
            "eps": 0.2,
            "M_target": 7.38905609893065,
            "n_replicas": 10_000,
            "n_max": 20_000,
            "grid_points": 60,
        },
        "conductance": {"lo": -6.0, "hi": 6.0, "k": 8, "s_values": [0.0, 0.1]},
        "lovasz": {"lo": -6.0, "hi": 6.0, "k": 8, "eps": 0.1, "n_max": 500},
        "sample": {"n_steps": 100},
    },
}


def _merge_preset(raw: Mapping[str, Any]) -> Dict[str, Any]:
    data = copy.deepcopy(dict(raw))
    name = data.get("preset")
    if name is None:
        return data
    preset = PRESETS.get(name)
    if preset is None:
        raise ConfigError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}", "preset")
    experiment = data.get("experiment")
    section = _SECTIONS.get(experiment) if isinstance(experiment, str) else None
    if section is not None and section in preset:
        given = data.get(section)
        if given is not None and not isinstance(given, dict):
            raise ConfigError(f"[{section}] must be a table", section)
        data[section] = {**preset[section], **(given or {})}
    return data


def _error_key(exc: ValidationError) -> Optional[str]:
    for err in exc.errors():
        loc = [str(part) for part in err.get("loc", ()) if not isinstance(part, int)]
        if loc:
            return ".".join(loc)
    return None


def parse_config(
    raw: Mapping[str, Any], seed: Optional[int] = None, experiment: Optional[str] = None
) -> ExperimentConfig:
    """Validate a parsed mapping.

    ``seed`` overrides any seed in the mapping. ``experiment`` (the CLI
    subcommand) fills in a missing ``experiment`` key and must agree with a
    present one.
    """
    if experiment is not None:
        given = raw.get("experiment")
        if given is not None and given != experiment:
            raise ConfigError(
                f"config is for {given!r}, not {experiment!r}", "experiment"
            )
        raw = {**raw, "experiment": experiment}
    data = _merge_preset(raw)
    if seed is not None:
        data["seed"] = seed
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        key = _error_key(exc)
        first = exc.errors()[0]
        raise ConfigError(first["msg"], key) from exc


def load_config(
    path: Union[str, Path], seed: Optional[int] = None, experiment: Optional[str] = None
) -> ExperimentConfig:
    path = Path(path)
    try:
        with path.open("rb") as fp:
            raw = tomllib.load(fp)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(raw, seed, experiment)
