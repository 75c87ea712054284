import numpy as np

from malalab.cli_tools.report import Report
from malalab.configuration import ExperimentConfig, SampleSettings
from malalab.errors import NumericError
from malalab.kernel import run_chain
from malalab.utils.trajectory_io import csv_columns, trajectory_rows, write_binary

from .base import ExperimentRunner, RunContext


class SampleRunner(ExperimentRunner):
    primary_name = "sample"
    aliases = ["sample", "run-chain"]
    columns = ()  # step, q_1..q_d, accepted; d comes from the target

    def run(self, config: ExperimentConfig, ctx: RunContext) -> Report:
        settings: SampleSettings = config.settings
        target = config.build_target()
        policy = config.build_policy(target)
        init = np.zeros(target.dim) if settings.init is None else np.asarray(settings.init)
        traj = run_chain(
            target,
            init,
            policy,
            settings.n_steps,
            config.seed,
            thinning=settings.thinning,
            lazy=settings.lazy,
            logger=ctx.logger,
        )
        if not np.all(np.isfinite(traj.positions)):
            raise NumericError(f"chain on {target.name} left the finite reals")

        report = self.new_report(csv_columns(target.dim))
        chain = traj.chain(0)
        for row in trajectory_rows(traj.steps, chain, traj.moved[:, 0]):
            report.add_row(row)
        report.count(True)
        report.add_footer("eta", policy.eta)
        report.add_footer("policy", policy.provenance)
        report.add_footer("acceptance_rate", traj.stats.acceptance_rate)
        report.add_footer("held_fraction", traj.stats.held_fraction)
        if settings.binary:
            path = ctx.out_dir / "sample.bin"
            write_binary(path, chain)
            report.artifacts.append(path)
        return report
