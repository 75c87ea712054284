"""Numerical checks of the acceptance-rate analysis.

Every estimator draws ``(q0, p0) ~ mu x N(0, I)`` (or ``p ~ N(0, I)`` at a fixed
point) in fixed-size batches. Each batch has its own stream, and the
``[E X^ell]^(1/ell)`` estimate is compared with the lemma's bound through a
one-sided test: the check passes when the lower end of the 99% percentile
bootstrap interval does not exceed the bound.

Throughout, ``q_t = q0 + t p0 - (t^2 / 2) grad f(q0)`` is the position along the
single leapfrog step and ``Upsilon_ell = Upsilon + 2 (ell - 1) L``.
"""

import functools
import math
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import special

from malalab.errors import InvalidInputError, UnsupportedTargetError
from malalab.kernel import PhasePoint, energy_difference, hamiltonian, leapfrog, proposal_mean
from malalab.parallel import batch_sizes, map_batches
from malalab.targets import SmoothnessProfile, TargetDensity
from malalab.types import BaseModel
from malalab.utils.logger import get_default_logger
from malalab.utils.moments import estimate_power_mean
from malalab.utils.streams import stream

MIN_MOMENT_SAMPLES = 10_000
DEFAULT_QUADRATURE_ORDER = 32
TAIL_THRESHOLD = 0.25
TAIL_STDERRS = 3.0
# Bounds that hold with equality (constant Hessians at ell = 1) need float slack.
_BOUND_RTOL = 1e-12


class UpsilonEll(BaseModel):
    upsilon: float
    L: float
    ell: int
    value: float


def upsilon_ell(profile: SmoothnessProfile, ell: int) -> UpsilonEll:
    if ell < 1:
        raise InvalidInputError(f"ell must be >= 1, got {ell}", "ell")
    return UpsilonEll(
        upsilon=profile.upsilon,
        L=profile.L,
        ell=ell,
        value=profile.upsilon + 2.0 * (ell - 1) * profile.L,
    )


class MomentReport(BaseModel):
    lemma: str
    target: str
    ell_or_delta: float
    estimate: float
    ci_lo: float
    ci_hi: float
    bound: float
    passed: bool
    n_samples: int
    diagnostics: Dict[str, float] = {}
    approximate: bool = False
    """Drawn from an approximate stationary sampler rather than exactly."""

    @property
    def margin(self) -> float:
        """bound - ci_lo; negative means the check failed."""
        return self.bound - self.ci_lo


def _report(
    lemma: str,
    target: TargetDensity,
    ell: int,
    values: np.ndarray,
    bound: float,
    seed: int,
    diagnostics: Optional[Dict[str, float]] = None,
) -> MomentReport:
    est = estimate_power_mean(values, ell, stream(seed, "bootstrap", lemma, ell))
    get_default_logger().debug(
        "%s ell=%d on %s: estimate=%.6g ci_lo=%.6g bound=%.6g",
        lemma,
        ell,
        target.name,
        est.estimate,
        est.ci_lo,
        bound,
    )
    return MomentReport(
        lemma=lemma,
        target=target.name,
        ell_or_delta=float(ell),
        estimate=est.estimate,
        ci_lo=est.ci_lo,
        ci_hi=est.ci_hi,
        bound=bound,
        passed=est.ci_lo <= bound * (1.0 + _BOUND_RTOL),
        n_samples=est.n_samples,
        diagnostics=diagnostics or {},
        approximate=target.approximate,
    )


def _require_sampler(target: TargetDensity) -> None:
    if not target.has_sampler:
        raise UnsupportedTargetError(target.name)


def _check_samples(n_samples: int) -> None:
    if n_samples < MIN_MOMENT_SAMPLES:
        raise InvalidInputError(
            f"need at least {MIN_MOMENT_SAMPLES} samples, got {n_samples}", "n_samples"
        )


def _check_even(ell: int) -> None:
    if ell < 2 or ell % 2:
        raise InvalidInputError(f"ell must be an even integer >= 2, got {ell}", "ell")


def _stationary_phase(target: TargetDensity, rng: np.random.Generator, n: int):
    q0 = target.sample(rng, n)
    p0 = rng.standard_normal((n, target.dim))
    return q0, p0


def _path(target: TargetDensity, q0: np.ndarray, p0: np.ndarray, grad0: np.ndarray, t: float):
    return q0 + t * p0 - 0.5 * t * t * grad0


def _gather(fn, n_samples: int, workers: int) -> np.ndarray:
    return np.concatenate(map_batches(fn, batch_sizes(n_samples), workers))


# --- Energy decomposition -------------------------------------------------------


class EnergyDecomposition(BaseModel):
    delta: float
    b_eta: float
    grad_diff_term: float
    quadrature_order: int

    @property
    def residual(self) -> float:
        return abs(self.delta - self.b_eta - self.grad_diff_term)


def _b_eta(
    target: TargetDensity, q0: np.ndarray, p0: np.ndarray, eta: float, order: int
) -> np.ndarray:
    """B_eta = v_eta' [grad f(q0); p0] with v_eta integrated by Gauss-Legendre on [0, eta]."""
    nodes, weights = special.roots_legendre(order)
    t_nodes = 0.5 * eta * (nodes + 1.0)
    w_nodes = 0.5 * eta * weights

    grad0 = target.gradient(q0)
    grad_eta = target.gradient(_path(target, q0, p0, grad0, eta))
    v_q = np.zeros_like(q0)
    v_p = np.zeros_like(q0)
    for t, w in zip(t_nodes, w_nodes):
        grad_t = target.gradient(_path(target, q0, p0, grad0, t))
        v_q -= w * t * (grad_t - grad_eta)
        v_p += w * (grad_t - 0.5 * grad0 - 0.5 * grad_eta)
    return np.sum(grad0 * v_q, axis=-1) + np.sum(p0 * v_p, axis=-1)


def _grad_diff_term(target: TargetDensity, q0: np.ndarray, p0: np.ndarray, eta: float) -> np.ndarray:
    grad0 = target.gradient(q0)
    diff = target.gradient(_path(target, q0, p0, grad0, eta)) - grad0
    return eta * eta / 8.0 * np.sum(diff * diff, axis=-1)


def decomposition_check(
    target: TargetDensity,
    phase: PhasePoint,
    eta: float,
    quadrature_order: int = DEFAULT_QUADRATURE_ORDER,
) -> EnergyDecomposition:
    """Evaluate Delta_eta directly and as B_eta + (eta^2/8) |grad f(q_eta) - grad f(q0)|^2."""
    if quadrature_order < 2:
        raise InvalidInputError(
            f"quadrature order must be >= 2, got {quadrature_order}", "quadrature_order"
        )
    if eta * eta * target.profile.L > 1.0:
        raise InvalidInputError(f"need eta^2 L <= 1, got {eta * eta * target.profile.L:g}", "eta")
    return EnergyDecomposition(
        delta=float(energy_difference(target, phase, eta)),
        b_eta=float(_b_eta(target, phase.q, phase.p, eta, quadrature_order)),
        grad_diff_term=float(_grad_diff_term(target, phase.q, phase.p, eta)),
        quadrature_order=quadrature_order,
    )


# --- Moment lemmas ------------------------------------------------------------


def _grad_norm_batch(target, seed, index, size):
    q = target.sample(stream(seed, "grad_norm", index), size)
    g = target.gradient(q)
    return np.sum(g * g, axis=-1)


def moment_grad_norm(
    target: TargetDensity, ell: int, n_samples: int, seed: int, workers: int = 1
) -> MomentReport:
    """[E_{q ~ mu} |grad f(q)|^(2 ell)]^(1/ell) <= Upsilon_ell."""
    _require_sampler(target)
    _check_samples(n_samples)
    bound = upsilon_ell(target.profile, ell).value
    values = _gather(functools.partial(_grad_norm_batch, target, seed), n_samples, workers)
    return _report("grad_norm", target, ell, values, bound, seed)


def _quadratic_form_batch(target, x, seed, index, size):
    p = stream(seed, "quadratic_form", index).standard_normal((size, target.dim))
    return np.sum(p * target.hvp(np.broadcast_to(x, p.shape), p), axis=-1)


def moment_quadratic_form(
    target: TargetDensity,
    x: np.ndarray,
    ell: int,
    n_samples: int,
    seed: int,
    workers: int = 1,
) -> MomentReport:
    """[E_{p ~ N(0, I)} (p' Hess f(x) p)^ell]^(1/ell) <= Upsilon_ell."""
    bound = upsilon_ell(target.profile, ell).value
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (target.dim,):
        raise InvalidInputError(f"x must have shape {(target.dim,)}, got {x.shape}", "x")
    values = _gather(
        functools.partial(_quadratic_form_batch, target, x, seed), n_samples, workers
    )
    return _report("quadratic_form", target, ell, values, bound, seed)


def _quadratic_form_at_qt_batch(target, t, seed, index, size):
    q0, p0 = _stationary_phase(target, stream(seed, "quadratic_form_at_qt", index), size)
    q_t = _path(target, q0, p0, target.gradient(q0), t)
    return np.sum(p0 * target.hvp(q_t, p0), axis=-1)


def moment_quadratic_form_at_qt(
    target: TargetDensity, t: float, ell: int, n_samples: int, seed: int, workers: int = 1
) -> MomentReport:
    """[E (p0' Hess f(q_t) p0)^ell]^(1/ell) <= 2 Upsilon_ell for t^2 L <= 1."""
    _require_sampler(target)
    if t < 0.0 or t * t * target.profile.L > 1.0:
        raise InvalidInputError(f"need t >= 0 and t^2 L <= 1, got t={t:g}", "t")
    bound = 2.0 * upsilon_ell(target.profile, ell).value
    values = _gather(
        functools.partial(_quadratic_form_at_qt_batch, target, t, seed), n_samples, workers
    )
    return _report("quadratic_form_at_qt", target, ell, values, bound, seed, {"t": t})


class GradDiffReport(BaseModel):
    t: float
    eta: float
    vs_start: MomentReport
    """|grad f(q_t) - grad f(q0)|, bound 4 t^2 L Upsilon_ell."""
    vs_end: MomentReport
    """|grad f(q_t) - grad f(q_eta)|, bound 4 (eta - t)^2 L Upsilon_ell."""

    @property
    def passed(self) -> bool:
        return self.vs_start.passed and self.vs_end.passed


def _grad_diff_batch(target, t, eta, seed, index, size):
    q0, p0 = _stationary_phase(target, stream(seed, "grad_diff", index), size)
    grad0 = target.gradient(q0)
    grad_t = target.gradient(_path(target, q0, p0, grad0, t))
    grad_eta = target.gradient(_path(target, q0, p0, grad0, eta))
    start = grad_t - grad0
    end = grad_t - grad_eta
    return np.stack([np.sum(start * start, axis=-1), np.sum(end * end, axis=-1)], axis=-1)


def moment_grad_diff(
    target: TargetDensity,
    t: float,
    eta: float,
    ell: int,
    n_samples: int,
    seed: int,
    workers: int = 1,
) -> GradDiffReport:
    _require_sampler(target)
    L = target.profile.L
    if not 0.0 <= t <= eta:
        raise InvalidInputError(f"need 0 <= t <= eta, got t={t:g}, eta={eta:g}", "t")
    if eta * eta * L > 1.0:
        raise InvalidInputError(f"need eta^2 L <= 1, got {eta * eta * L:g}", "eta")
    ups = upsilon_ell(target.profile, ell).value
    values = _gather(
        functools.partial(_grad_diff_batch, target, t, eta, seed), n_samples, workers
    )
    diag = {"t": t, "eta": eta}
    return GradDiffReport(
        t=t,
        eta=eta,
        vs_start=_report(
            "grad_diff_start", target, ell, values[:, 0], 4.0 * t * t * L * ups, seed, diag
        ),
        vs_end=_report(
            "grad_diff_end", target, ell, values[:, 1], 4.0 * (eta - t) ** 2 * L * ups, seed, diag
        ),
    )


def b_eta_bound(profile: SmoothnessProfile, eta: float, ell: int) -> float:
    """eta^4 L Upsilon + (11 eta^4 L Upsilon_{ell/2})^(1/2)."""
    e4l = eta**4 * profile.L
    return e4l * profile.upsilon + math.sqrt(11.0 * e4l * upsilon_ell(profile, ell // 2).value)


def delta_bound(profile: SmoothnessProfile, eta: float, ell: int) -> float:
    """3 eta^4 L Upsilon_ell + 4 (eta^4 L Upsilon_{ell/2})^(1/2)."""
    e4l = eta**4 * profile.L
    return 3.0 * e4l * upsilon_ell(profile, ell).value + 4.0 * math.sqrt(
        e4l * upsilon_ell(profile, ell // 2).value
    )


def _check_half_step(target: TargetDensity, eta: float) -> None:
    if not eta > 0.0 or eta * eta * target.profile.L > 0.5:
        raise InvalidInputError(
            f"need eta > 0 and eta^2 L <= 1/2, got eta={eta:g}", "eta"
        )


def _b_eta_batch(target, eta, order, seed, index, size):
    q0, p0 = _stationary_phase(target, stream(seed, "b_eta", index), size)
    return _b_eta(target, q0, p0, eta, order)


def moment_B_eta(
    target: TargetDensity,
    eta: float,
    ell: int,
    n_samples: int,
    seed: int,
    quadrature_order: int = DEFAULT_QUADRATURE_ORDER,
    workers: int = 1,
) -> MomentReport:
    _require_sampler(target)
    _check_even(ell)
    _check_half_step(target, eta)
    values = _gather(
        functools.partial(_b_eta_batch, target, eta, quadrature_order, seed), n_samples, workers
    )
    bound = b_eta_bound(target.profile, eta, ell)
    return _report("b_eta", target, ell, values, bound, seed, {"eta": eta})


def _delta_batch(target, eta, seed, index, size):
    q0, p0 = _stationary_phase(target, stream(seed, "delta", index), size)
    return energy_difference(target, PhasePoint(q0, p0), eta)


def moment_delta(
    target: TargetDensity, eta: float, ell: int, n_samples: int, seed: int, workers: int = 1
) -> MomentReport:
    """Moment of Delta_eta; ``diagnostics`` carries the sample mean of Delta_eta."""
    _require_sampler(target)
    _check_even(ell)
    _check_half_step(target, eta)
    values = _gather(functools.partial(_delta_batch, target, eta, seed), n_samples, workers)
    bound = delta_bound(target.profile, eta, ell)
    diag = {"eta": eta, "mean_delta": float(np.mean(values))}
    return _report("delta", target, ell, values, bound, seed, diag)


# --- Acceptance tail ------------------------------------------------------------


def tail_max_eta(profile: SmoothnessProfile, delta: float) -> float:
    """Largest eta with eta^4 <= 1 / (4096 max{L^2 log(1/delta), L Upsilon})."""
    if not 0.0 < delta < 1.0:
        raise InvalidInputError(f"delta must lie in (0, 1), got {delta}", "delta")
    L = profile.L
    denom = 4096.0 * max(L * L * math.log(1.0 / delta), L * profile.upsilon)
    return denom**-0.25


class TailReport(BaseModel):
    target: str
    delta: float
    eta: float
    n_samples: int
    exceedance: float
    """Fraction of stationary (q0, p0) with Delta_eta > 1/4."""
    stderr: float
    """sqrt(delta (1 - delta) / n)."""
    ci_lo: float
    ci_hi: float
    approximate: bool = False

    @property
    def threshold(self) -> float:
        return self.delta + TAIL_STDERRS * self.stderr

    @property
    def passed(self) -> bool:
        return self.exceedance <= self.threshold


def acceptance_tail(
    target: TargetDensity,
    delta: float,
    n_samples: int,
    seed: int,
    eta: Optional[float] = None,
    workers: int = 1,
) -> TailReport:
    """Estimate P(Delta_eta > 1/4) at the largest step size the lemma allows.

    ``eta`` overrides the step size, e.g. to test a step beyond the lemma.
    """
    _require_sampler(target)
    if n_samples < 1:
        raise InvalidInputError(f"need at least one sample, got {n_samples}", "n_samples")
    step = tail_max_eta(target.profile, delta) if eta is None else eta
    values = _gather(functools.partial(_delta_batch, target, step, seed), n_samples, workers)
    exceed = float(np.mean(values > TAIL_THRESHOLD))
    half_width = 2.576 * math.sqrt(exceed * (1.0 - exceed) / n_samples)
    return TailReport(
        target=target.name,
        delta=delta,
        eta=step,
        n_samples=n_samples,
        exceedance=exceed,
        stderr=math.sqrt(delta * (1.0 - delta) / n_samples),
        ci_lo=max(0.0, exceed - half_width),
        ci_hi=min(1.0, exceed + half_width),
        approximate=target.approximate,
    )


class GoodSetReport(BaseModel):
    target: str
    delta: float
    eta: float
    good_mass: float
    """Estimated mu-mass of {q0 : P_p(Delta_eta <= 1/4) >= 15/16}."""
    required_mass: float
    """1 - 16 delta."""
    mean_acceptance: float
    """E min{1, exp(-Delta_eta)} over stationary (q0, p0)."""
    min_good_acceptance: float
    """Smallest per-q0 mean acceptance among good starts."""
    acceptance_floor: float = 15.0 / 16.0 * math.exp(-0.25)
    approximate: bool = False

    @property
    def passed(self) -> bool:
        return (
            self.good_mass >= self.required_mass
            and self.min_good_acceptance >= self.acceptance_floor
        )


def good_set_fraction(
    target: TargetDensity,
    delta: float,
    n_starts: int,
    n_momenta: int,
    seed: int,
    eta: Optional[float] = None,
) -> GoodSetReport:
    """Mass of starts whose momentum draws stay in the acceptance set w.p. >= 15/16.

    On such starts the mean acceptance is at least (15/16) exp(-1/4), so the
    proposal and the transition kernel differ by at most 1/3 in TV.
    """
    _require_sampler(target)
    step = tail_max_eta(target.profile, delta) if eta is None else eta
    rng = stream(seed, "good_set")
    q0 = target.sample(rng, n_starts)
    q = np.repeat(q0, n_momenta, axis=0)
    p = rng.standard_normal(q.shape)
    end = leapfrog(target, PhasePoint(q, p), step)
    dlt = (hamiltonian(target, end.q, end.p) - hamiltonian(target, q, p)).reshape(
        n_starts, n_momenta
    )
    with np.errstate(over="ignore"):
        accept = np.minimum(1.0, np.exp(-dlt))
    inside = np.mean(dlt <= TAIL_THRESHOLD, axis=1)
    good = inside >= 15.0 / 16.0
    per_start = np.mean(accept, axis=1)
    return GoodSetReport(
        target=target.name,
        delta=delta,
        eta=step,
        good_mass=float(np.mean(good)),
        required_mass=1.0 - 16.0 * delta,
        mean_acceptance=float(np.mean(accept)),
        min_good_acceptance=float(per_start[good].min()) if np.any(good) else float("nan"),
        approximate=target.approximate,
    )


# --- Proposal overlap -----------------------------------------------------------


class OverlapReport(BaseModel):
    distance: float
    eta: float
    tv_exact: float
    bound_raw: float
    """(2 / eta) |x - y|."""
    tv_bound: float
    """min{1, (2 / eta) |x - y|}."""

    @property
    def passed(self) -> bool:
        return self.tv_exact <= self.tv_bound


def proposal_overlap_exact(
    x: np.ndarray, y: np.ndarray, eta: float, target: TargetDensity
) -> OverlapReport:
    """TV between the equal-covariance Gaussians N(m_x, 2h I) and N(m_y, 2h I).

    The closed form is 2 Phi(|m_x - m_y| / (2 sqrt(2h))) - 1 with
    m_z = z - h grad f(z).
    """
    if not eta > 0.0 or eta * eta * target.profile.L > 1.0:
        raise InvalidInputError(f"need eta > 0 and eta^2 L <= 1, got eta={eta:g}", "eta")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    sep = float(np.linalg.norm(proposal_mean(target, x, eta) - proposal_mean(target, y, eta)))
    # sqrt(2h) == eta
    tv = float(2.0 * special.ndtr(sep / (2.0 * eta)) - 1.0)
    dist = float(np.linalg.norm(x - y))
    raw = 2.0 * dist / eta
    return OverlapReport(distance=dist, eta=eta, tv_exact=tv, bound_raw=raw, tv_bound=min(1.0, raw))


def proposal_overlap_grid(
    target: TargetDensity,
    ratios: Optional[Sequence[float]] = None,
    etas: Optional[Sequence[float]] = None,
) -> List[OverlapReport]:
    """Evaluate the overlap inequality on a deterministic (|x - y| / eta, eta) grid.

    Defaults to 20 log-spaced ratios in [1e-3, 4] and 20 step sizes up to
    1 / sqrt(L). The base point is 0.5 * ones and y moves along the diagonal.
    """
    if ratios is None:
        ratios = np.geomspace(1e-3, 4.0, 20)
    if etas is None:
        etas = np.linspace(0.05, 1.0, 20) / math.sqrt(target.profile.L)
    x = np.full(target.dim, 0.5)
    direction = np.ones(target.dim) / math.sqrt(target.dim)
    return [
        proposal_overlap_exact(x, x + r * eta * direction, float(eta), target)
        for eta in etas
        for r in ratios
    ]
