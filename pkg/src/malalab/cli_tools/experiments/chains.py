import numpy as np
from scipy import special

from malalab.cli_tools.report import SCHEMAS, Report
from malalab.configuration import (
    ConductanceSettings,
    ExperimentConfig,
    LovaszSettings,
    MixingSettings,
)
from malalab.errors import UndefinedConductanceError
from malalab.mixing import (
    FiniteChain,
    discretize_1d,
    lovasz_bound_check,
    lovasz_iteration_bound,
    s_conductance_exact,
    s_conductance_reference,
    scaling_experiment,
    warmness,
)

from .base import ExperimentRunner, RunContext

# Exact and reference conductance agree to rounding.
_CROSS_CHECK_RTOL = 1e-12


def _chain(config: ExperimentConfig) -> FiniteChain:
    settings = config.settings
    target = config.build_target()
    policy = config.build_policy(target)
    return discretize_1d(target, settings.lo, settings.hi, settings.k, policy)


class MixingScanRunner(ExperimentRunner):
    primary_name = "mixing-scan"
    aliases = ["mixing-scan", "scaling"]
    columns = SCHEMAS["mixing"]

    def run(self, config: ExperimentConfig, ctx: RunContext) -> Report:
        settings: MixingSettings = config.settings
        result = scaling_experiment(
            settings.dims,
            settings.eps,
            settings.M_target,
            settings.n_replicas,
            config.seed,
            n_max=settings.n_max,
            L=settings.L,
            grid_points=settings.grid_points,
            workers=ctx.workers,
            logger=ctx.logger,
        )
        report = self.new_report()
        for row in result.rows:
            report.add_row(
                [row.dim, row.eta, row.tau_hat, row.predicted_n, row.predicted_n_kappa],
                passed=row.tau_hat is not None and row.tau_hat > 0,
            )
        lo, hi = result.slope_ci
        report.add_footer("slope", result.slope)
        report.add_footer("slope_stderr", result.slope_stderr)
        report.add_footer("slope_ci", f"[{lo!r}, {hi!r}]")
        report.add_footer("predicted_exponent", result.predicted_exponent)
        report.add_footer("predicted_exponent_kappa", result.predicted_exponent_kappa)
        report.add_footer("tv", f"marginal TV of the widest coordinate (index {result.coordinate})")
        report.add_footer("resolved_dims", " ".join(str(d) for d in result.resolved_dims))
        # Both slope checks fail unless enough dims resolved a mixing time.
        supported = result.slope_supported
        report.count(supported and result.slope <= settings.max_slope)
        report.count(supported and 1.5 - result.slope >= settings.kappa_margin)
        return report


class ConductanceRunner(ExperimentRunner):
    primary_name = "conductance"
    aliases = ["conductance", "s-conductance"]
    columns = SCHEMAS["conductance"]

    def run(self, config: ExperimentConfig, ctx: RunContext) -> Report:
        settings: ConductanceSettings = config.settings
        chain = _chain(config)
        report = self.new_report()
        previous = 0.0
        for s in sorted(settings.s_values):
            try:
                phi = s_conductance_exact(chain, s)
            except UndefinedConductanceError:
                report.add_row([s, None, "undefined"])
                continue
            ref = s_conductance_reference(chain, s)
            ok = abs(phi - ref) <= _CROSS_CHECK_RTOL * max(1.0, phi) and phi >= previous
            previous = phi
            report.add_row([s, phi, ok], passed=ok)
        report.add_footer("k", str(chain.k))
        report.add_footer(
            "reversibility_residual", FiniteChain.reversibility_residual(chain.P, chain.pi)
        )
        return report


class LovaszRunner(ExperimentRunner):
    primary_name = "lovasz-check"
    aliases = ["lovasz-check", "lovasz"]
    columns = SCHEMAS["lovasz"]

    def run(self, config: ExperimentConfig, ctx: RunContext) -> Report:
        settings: LovaszSettings = config.settings
        chain = _chain(config)
        if settings.start == "stationary":
            mu0 = chain.pi.copy()
        elif settings.start == "point":
            mu0 = np.zeros(chain.k)
            mu0[int(np.argmax(chain.pi))] = 1.0
        else:
            edges = np.linspace(settings.lo, settings.hi, settings.k + 1)
            mass = np.diff(special.ndtr(edges / settings.start_std))
            mu0 = mass / mass.sum()
        M = warmness(chain, mu0)
        s = settings.eps / (2.0 * M)
        check = lovasz_bound_check(chain, mu0, s, settings.n_max, M)

        report = self.new_report()
        for n, tv, bound, slack, ok in zip(
            check.n, check.tv, check.bound, check.slack, check.passed
        ):
            report.add_row([int(n), tv, bound, slack, bool(ok)], passed=bool(ok))

        tau = check.tau(settings.eps)
        n_bound = lovasz_iteration_bound(check.phi_s, M, settings.eps)
        report.add_footer("phi_s", check.phi_s)
        report.add_footer("M", M)
        report.add_footer("s", s)
        report.add_footer("tau_exact", "not reached" if tau is None else str(tau))
        report.add_footer("iteration_bound", str(n_bound))
        if tau is not None:
            report.count(tau <= n_bound)
        else:
            report.count(n_bound > settings.n_max)
        return report
