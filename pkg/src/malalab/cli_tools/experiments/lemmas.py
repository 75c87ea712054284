import math

import numpy as np

from malalab.cli_tools.report import SCHEMAS, Report
from malalab.configuration import (
    DecompositionSettings,
    ExperimentConfig,
    MomentSettings,
    OverlapSettings,
    TailSettings,
)
from malalab.kernel import PhasePoint
from malalab.targets import TargetDensity
from malalab.theory import (
    MomentReport,
    acceptance_tail,
    decomposition_check,
    good_set_fraction,
    moment_B_eta,
    moment_delta,
    moment_grad_diff,
    moment_grad_norm,
    moment_quadratic_form,
    moment_quadratic_form_at_qt,
    proposal_overlap_grid,
)
from malalab.utils.streams import stream

from .base import ExperimentRunner, RunContext


def _sampler_footer(report: Report, target: TargetDensity) -> None:
    if target.approximate:
        report.add_footer("sampler", f"approximate ({target.name})")


def _lemma_row(report: Report, row: MomentReport) -> None:
    ell = int(row.ell_or_delta)
    report.add_row(
        [row.lemma, row.target, ell, row.estimate, row.ci_lo, row.ci_hi, row.bound, row.passed],
        passed=row.passed,
    )


class VerifyMomentsRunner(ExperimentRunner):
    primary_name = "verify-moments"
    aliases = ["verify-moments", "moments"]
    columns = SCHEMAS["lemma"]

    def run(self, config: ExperimentConfig, ctx: RunContext) -> Report:
        settings: MomentSettings = config.settings
        target = config.build_target()
        seed, n, workers = config.seed, settings.n_samples, ctx.workers
        x = np.zeros(target.dim) if settings.x is None else np.asarray(settings.x)
        report = self.new_report()
        skipped_odd = False

        for lemma in settings.lemmas:
            for ell in settings.ells:
                ctx.logger.debug("lemma %s, ell=%d on %s", lemma, ell, target.name)
                if lemma == "grad_norm":
                    _lemma_row(report, moment_grad_norm(target, ell, n, seed, workers))
                elif lemma == "quadratic_form":
                    _lemma_row(report, moment_quadratic_form(target, x, ell, n, seed, workers))
                elif lemma in ("b_eta", "delta") and ell % 2:
                    skipped_odd = True
                else:
                    for eta in settings.etas:
                        t = settings.t_fraction * eta
                        if lemma == "quadratic_form_at_qt":
                            rows = [moment_quadratic_form_at_qt(target, t, ell, n, seed, workers)]
                        elif lemma == "grad_diff":
                            pair = moment_grad_diff(target, t, eta, ell, n, seed, workers)
                            rows = [pair.vs_start, pair.vs_end]
                        elif lemma == "b_eta":
                            rows = [
                                moment_B_eta(
                                    target, eta, ell, n, seed, settings.quadrature_order, workers
                                )
                            ]
                        else:
                            rows = [moment_delta(target, eta, ell, n, seed, workers)]
                        for row in rows:
                            _lemma_row(report, row)
                            if "mean_delta" in row.diagnostics:
                                report.add_footer(
                                    f"mean_delta[eta:{eta:g},ell:{ell}]",
                                    row.diagnostics["mean_delta"],
                                )
        if skipped_odd:
            report.add_footer("note", "b_eta and delta are only checked at even ell")
        _sampler_footer(report, target)
        return report


class AcceptanceTailRunner(ExperimentRunner):
    primary_name = "acceptance-tail"
    aliases = ["acceptance-tail", "tail"]
    columns = SCHEMAS["lemma"]

    def run(self, config: ExperimentConfig, ctx: RunContext) -> Report:
        settings: TailSettings = config.settings
        target = config.build_target()
        report = self.new_report()
        for delta in settings.deltas:
            tail = acceptance_tail(
                target, delta, settings.n_samples, config.seed, settings.eta, ctx.workers
            )
            report.add_row(
                [
                    "acceptance_tail",
                    tail.target,
                    delta,
                    tail.exceedance,
                    tail.ci_lo,
                    tail.ci_hi,
                    tail.threshold,
                    tail.passed,
                ],
                passed=tail.passed,
            )
            report.add_footer(f"eta[delta:{delta:g}]", tail.eta)
            if settings.good_set:
                good = good_set_fraction(
                    target,
                    delta,
                    settings.n_starts,
                    settings.n_momenta,
                    config.seed,
                    settings.eta,
                )
                report.count(good.passed)
                report.add_footer(
                    f"good_set[delta:{delta:g}]",
                    f"mass={good.good_mass!r} required={good.required_mass!r} "
                    f"min_acceptance={good.min_good_acceptance!r} "
                    f"floor={good.acceptance_floor!r} pass={good.passed}",
                )
        _sampler_footer(report, target)
        return report


class DecompositionRunner(ExperimentRunner):
    primary_name = "decomposition-check"
    aliases = ["decomposition-check", "decomposition"]
    columns = SCHEMAS["decomposition"]

    def run(self, config: ExperimentConfig, ctx: RunContext) -> Report:
        settings: DecompositionSettings = config.settings
        target = config.build_target()
        rng = stream(config.seed, "decomposition")
        if target.has_sampler:
            q = target.sample(rng, settings.n_points)
        else:
            q = rng.standard_normal((settings.n_points, target.dim))
        p = rng.standard_normal((settings.n_points, target.dim))

        report = self.new_report()
        for i in range(settings.n_points):
            parts = decomposition_check(
                target, PhasePoint(q[i], p[i]), settings.eta, settings.quadrature_order
            )
            ok = parts.residual <= settings.tolerance
            report.add_row(
                [i, parts.delta, parts.b_eta, parts.grad_diff_term, parts.residual, ok],
                passed=ok,
            )
        report.add_footer("eta", settings.eta)
        report.add_footer("quadrature_order", str(settings.quadrature_order))
        return report


class ProposalOverlapRunner(ExperimentRunner):
    primary_name = "proposal-overlap"
    aliases = ["proposal-overlap", "overlap"]
    columns = SCHEMAS["overlap"]

    def run(self, config: ExperimentConfig, ctx: RunContext) -> Report:
        settings: OverlapSettings = config.settings
        target = config.build_target()
        ratios = np.geomspace(1e-3, 4.0, settings.points)
        etas = np.linspace(0.05, 1.0, settings.points) / math.sqrt(target.profile.L)
        report = self.new_report()
        for row in proposal_overlap_grid(target, ratios, etas):
            report.add_row(
                [row.distance, row.eta, row.tv_exact, row.tv_bound, row.passed],
                passed=row.passed,
            )
        return report
