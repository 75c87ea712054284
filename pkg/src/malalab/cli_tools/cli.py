import argparse
import sys
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from malalab.cli_tools.experiments import EXPERIMENTS, RunContext
from malalab.cli_tools.report import (
    Report,
    provenance,
    report_summary,
    write_report,
    write_sidecar,
)
from malalab.cli_tools.terminal import error, header, info, success, verdict, warning
from malalab.configuration import ExperimentConfig, load_config
from malalab.errors import ConfigError, MalaLabError, NumericError, ReportSchemaError
from malalab.utils.logger import get_default_logger
from malalab.utils.streams import SEED_MAX

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


@dataclass
class RunOutcome:
    report: Report
    csv_path: Path
    summary_path: Path

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.report.ok else EXIT_ASSERTION


def run(config: ExperimentConfig, out_dir: Path, workers: int = 1) -> RunOutcome:
    """Dispatch ``config`` to its experiment and write ``<experiment>.csv`` and ``.md``."""
    runner = EXPERIMENTS.resolve(config.experiment)
    if runner is None:
        raise ConfigError(f"unsupported experiment {config.experiment!r}", "experiment")
    out_dir.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(out_dir=out_dir, workers=workers, logger=get_default_logger())

    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    clock = time.perf_counter()
    report = runner.run(config, ctx)
    elapsed = time.perf_counter() - clock

    csv_path = write_report(
        out_dir / f"{config.experiment}.csv",
        report,
        seed=config.seed,
        config=config.resolved(),
        started=started,
        wall_clock_s=elapsed,
    )
    fields = provenance(config.experiment, config.seed, config.resolved(), started, elapsed)
    report.artifacts.extend([write_sidecar(path, fields) for path in list(report.artifacts)])
    summary_path = out_dir / f"{config.experiment}.md"
    summary_path.write_text(report_summary([csv_path]), encoding="utf-8")
    return RunOutcome(report=report, csv_path=csv_path, summary_path=summary_path)


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if not 0 <= value <= SEED_MAX:
        raise argparse.ArgumentTypeError(f"seed must be a u64, got {value}")
    return value


def _workers(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"workers must be >= 1, got {value}")
    return value


def handle_experiment(args: argparse.Namespace) -> int:
    config = load_config(args.config, seed=args.seed, experiment=args.command)
    header(f"{config.experiment} (seed {config.seed})")
    outcome = run(config, Path(args.out), workers=args.workers)
    for path in (outcome.csv_path, outcome.summary_path, *outcome.report.artifacts):
        info(f"wrote {path}")
    report = outcome.report
    print(f"{report.n_pass} passed, {report.n_fail} failed: {verdict(report.ok)}")
    return outcome.exit_code


def handle_summary(args: argparse.Namespace) -> int:
    text = report_summary(args.reports)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        success(f"Summary written to: {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mala-lab",
        description="mala-lab: seeded MALA experiments with CSV reports.",
    )
    subparsers = parser.add_subparsers(dest="command")

    for name in EXPERIMENTS.primary_names():
        sub = subparsers.add_parser(name, help=f"Run the {name} experiment")
        sub.add_argument("--config", required=True, help="TOML experiment config")
        sub.add_argument("--seed", required=True, type=_seed, help="u64 master seed")
        sub.add_argument("--out", default=".", help="Output directory (default: .)")
        sub.add_argument(
            "--workers",
            default=1,
            type=_workers,
            help="Worker processes; results do not depend on it (default: 1)",
        )
        sub.set_defaults(func=handle_experiment)

    summary = subparsers.add_parser("summary", help="Summarise mala-lab CSV reports as markdown")
    summary.add_argument("reports", nargs="*", help="CSV files written by mala-lab")
    summary.add_argument("--out", help="Write the summary here instead of stdout")
    summary.set_defaults(func=handle_summary)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "command", None):
        header("mala-lab")
        info("Lazy MALA experiments with seeded, reproducible CSV reports.")
        print()
        info("Common usage examples:")
        print("  mala-lab verify-moments --config moments.toml --seed 42")
        print("  mala-lab mixing-scan --config scaling.toml --seed 7 --workers 8 --out runs/")
        print("  mala-lab summary runs/*.csv")
        print()
        info("Run 'mala-lab -h' to see all options.")
        return EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        error(f"config error: {exc}")
        return EXIT_CONFIG
    except (NumericError, FloatingPointError) as exc:
        error(f"numeric error: {exc}")
        return EXIT_NUMERIC
    except ReportSchemaError as exc:
        error(str(exc))
        return EXIT_CONFIG
    except MalaLabError as exc:
        error(f"invalid experiment: {exc}")
        return EXIT_CONFIG
    except KeyboardInterrupt:
        print()
        warning("Goodbye. (Interrupted by Ctrl+C)")
        return 130


if __name__ == "__main__":
    sys.exit(main())
