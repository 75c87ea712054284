from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from malalab.cli_tools.report import Report
from malalab.configuration import ExperimentConfig
from malalab.utils.logger import Logger, get_default_logger


@dataclass
class RunContext:
    """What a runner may use besides its config.

    ``workers`` only changes wall-clock time, never the report.
    """

    out_dir: Path
    workers: int = 1
    logger: Optional[Logger] = None

    def __post_init__(self) -> None:
        if self.logger is None:
            self.logger = get_default_logger()


class ExperimentRunner:
    """Base class for one ``mala-lab`` subcommand.

    Concrete runners:
    - set `primary_name` (the subcommand) and `aliases`
    - set `columns` to the CSV schema they emit
    - implement `run`
    """

    # Subcommand, e.g. "verify-moments"
    primary_name: str

    # Additional names that resolve to this runner, e.g. ["verify_moments", "moments"]
    aliases: List[str]

    columns: Sequence[str]

    def new_report(self, columns: Optional[Sequence[str]] = None) -> Report:
        return Report(experiment=self.primary_name, columns=columns or self.columns)

    def run(self, config: ExperimentConfig, ctx: RunContext) -> Report:
        """Execute the experiment and return its report.

        Subclasses must implement this.
        """

        raise NotImplementedError


class ExperimentRegistry:
    def __init__(self) -> None:
        self._registry: Dict[str, ExperimentRunner] = {}

    def register(self, runner: ExperimentRunner) -> None:
        for name in {runner.primary_name, *runner.aliases}:
            self._registry[name] = runner

    def get(self, name: str) -> Optional[ExperimentRunner]:
        return self._registry.get(name)

    def primary_names(self) -> List[str]:
        return sorted({runner.primary_name for runner in self._registry.values()})

    def resolve(self, name: str) -> Optional[ExperimentRunner]:
        if name in self._registry:
            return self._registry[name]
        normalized = name.lower().replace("_", "-")
        return self._registry.get(normalized)
