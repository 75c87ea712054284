import math

import numpy as np
import pytest
from scipy import integrate, special

from malalab.errors import InvalidInputError, UnsupportedTargetError
from malalab.kernel import PhasePoint, burn_in_target
from malalab.targets import (
    SmoothnessProfile,
    make_anisotropic,
    make_cosine_perturbed,
    make_gaussian,
    make_quadratic,
)
from malalab.theory import (
    acceptance_tail,
    b_eta_bound,
    decomposition_check,
    delta_bound,
    good_set_fraction,
    tail_max_eta,
    moment_B_eta,
    moment_delta,
    moment_grad_diff,
    moment_grad_norm,
    moment_quadratic_form,
    moment_quadratic_form_at_qt,
    proposal_overlap_exact,
    proposal_overlap_grid,
    upsilon_ell,
)
from malalab.utils.streams import stream

N = 20_000


def test_upsilon_ell_values():
    assert upsilon_ell(SmoothnessProfile(L=2.0, upsilon=10.0), 3).value == 18.0
    assert upsilon_ell(SmoothnessProfile(L=1.0, upsilon=1.0), 2).value == 3.0
    assert upsilon_ell(SmoothnessProfile(L=1.0, upsilon=5.0), 1).value == 5.0
    with pytest.raises(InvalidInputError):
        upsilon_ell(SmoothnessProfile(L=1.0, upsilon=1.0), 0)


# --- Energy decomposition -------------------------------------------------------


def test_decomposition_hand_example(gaussian1):
    result = decomposition_check(gaussian1, PhasePoint(np.array([1.0]), np.array([0.5])), 0.1)
    assert result.delta == pytest.approx(0.00011503125, abs=1e-15)
    assert result.grad_diff_term == pytest.approx(0.01 / 8 * 0.045**2, abs=1e-16)
    assert result.residual <= 1e-12


def test_decomposition_flat(flat):
    result = decomposition_check(flat, PhasePoint(np.ones(2), np.ones(2)), 0.5)
    assert (result.delta, result.b_eta, result.grad_diff_term) == (0.0, 0.0, 0.0)


def test_decomposition_cosine():
    target = make_cosine_perturbed(2, 0.5)
    rng = stream(8, "decomposition")
    for _ in range(20):
        phase = PhasePoint(2.0 * rng.standard_normal(2), rng.standard_normal(2))
        assert decomposition_check(target, phase, 0.5, quadrature_order=64).residual <= 1e-9


def test_decomposition_is_exact_on_quadratics():
    target = make_quadratic([1.0, 0.8, 0.6, 0.5])
    rng = stream(14, "decomposition")
    q = target.sample(rng, 100)
    p = rng.standard_normal((100, 4))
    for i in range(100):
        assert decomposition_check(target, PhasePoint(q[i], p[i]), 0.5).residual <= 1e-12


def test_decomposition_rejects_bad_inputs(gaussian1):
    phase = PhasePoint(np.zeros(1), np.ones(1))
    with pytest.raises(InvalidInputError):
        decomposition_check(gaussian1, phase, 0.1, quadrature_order=1)
    with pytest.raises(InvalidInputError):
        decomposition_check(gaussian1, phase, 1.5)


# --- Moment lemmas ------------------------------------------------------------


def test_grad_norm_one_dimensional(gaussian1):
    tight = moment_grad_norm(gaussian1, 1, N, seed=1)
    assert tight.estimate == pytest.approx(1.0, abs=0.05)
    assert tight.ci_lo <= tight.estimate <= tight.ci_hi
    assert tight.bound == 1.0

    loose = moment_grad_norm(gaussian1, 2, N, seed=1)
    assert loose.estimate == pytest.approx(math.sqrt(3.0), abs=0.1)
    assert loose.bound == 3.0
    assert loose.passed
    assert loose.margin > 0


def test_grad_norm_needs_enough_samples(gaussian1):
    with pytest.raises(InvalidInputError):
        moment_grad_norm(gaussian1, 1, 100, seed=1)


def test_grad_norm_needs_sampler():
    with pytest.raises(UnsupportedTargetError):
        moment_grad_norm(make_cosine_perturbed(2, 0.3), 1, N, seed=1)


def test_grad_norm_is_deterministic():
    target = make_anisotropic(4)
    a = moment_grad_norm(target, 2, N, seed=5)
    b = moment_grad_norm(target, 2, N, seed=5)
    assert (a.estimate, a.ci_lo, a.ci_hi) == (b.estimate, b.ci_lo, b.ci_hi)


def test_quadratic_form_isotropic():
    target = make_gaussian(3)
    report = moment_quadratic_form(target, np.zeros(3), 2, N, seed=2)
    assert report.estimate == pytest.approx(math.sqrt(15.0), abs=0.1)
    assert report.bound == 3.0 + 2.0
    assert report.passed

    first = moment_quadratic_form(target, np.zeros(3), 1, N, seed=2)
    assert first.estimate == pytest.approx(3.0, abs=0.1)


def test_quadratic_form_on_cosine_target():
    target = make_cosine_perturbed(2, 0.5)
    report = moment_quadratic_form(target, np.zeros(2), 1, N, seed=3)
    assert report.estimate == pytest.approx(1.0, abs=0.05)
    assert report.passed
    with pytest.raises(InvalidInputError):
        moment_quadratic_form(target, np.zeros(3), 1, N, seed=3)


def test_quadratic_form_at_qt():
    target = make_gaussian(2)
    report = moment_quadratic_form_at_qt(target, 0.5, 1, N, seed=4)
    assert report.estimate == pytest.approx(2.0, abs=0.1)
    assert report.bound == 4.0
    assert report.passed
    with pytest.raises(InvalidInputError):
        moment_quadratic_form_at_qt(target, 1.5, 1, N, seed=4)
    with pytest.raises(InvalidInputError):
        moment_quadratic_form_at_qt(target, -0.1, 1, N, seed=4)


def test_grad_diff_one_dimensional(gaussian1):
    report = moment_grad_diff(gaussian1, 0.25, 0.5, 1, N, seed=6)
    assert report.vs_start.estimate == pytest.approx(0.25**2 + 0.25**4 / 4, abs=0.005)
    assert report.vs_start.bound == pytest.approx(4 * 0.0625)
    assert report.passed


def test_grad_diff_endpoints(gaussian1):
    at_start = moment_grad_diff(gaussian1, 0.0, 0.5, 1, N, seed=6)
    assert at_start.vs_start.estimate == 0.0
    assert at_start.vs_start.passed

    at_end = moment_grad_diff(gaussian1, 0.5, 0.5, 1, N, seed=6)
    assert at_end.vs_end.estimate == 0.0
    assert at_end.passed

    with pytest.raises(InvalidInputError):
        moment_grad_diff(gaussian1, 0.6, 0.5, 1, N, seed=6)


@pytest.mark.parametrize("ell", [1, 2])
def test_grad_diff_grows_with_t(ell):
    target = make_quadratic([1.0, 0.8, 0.6, 0.5])
    estimates = [
        moment_grad_diff(target, t, 0.5, ell, N, seed=15).vs_start.estimate
        for t in np.linspace(0.0, 0.5, 5)
    ]
    assert estimates[0] == 0.0
    assert all(b >= a for a, b in zip(estimates, estimates[1:]))


def test_b_eta_bound_value():
    profile = SmoothnessProfile(L=1.0, upsilon=1.0, psi=1.0)
    assert b_eta_bound(profile, 0.2, 2) == pytest.approx(0.0016 + math.sqrt(11 * 0.0016))
    four = make_quadratic([1.0] * 4).profile
    assert b_eta_bound(four, 0.2, 4) == pytest.approx(0.0016 * 4 + math.sqrt(11 * 0.0016 * 6))


def test_delta_bound_small_step():
    profile = SmoothnessProfile(L=1.0, upsilon=1.0, psi=1.0)
    assert delta_bound(profile, 1e-3, 2) == pytest.approx(4e-6 + 9e-12, rel=1e-9)


def test_moment_b_eta(gaussian1):
    report = moment_B_eta(gaussian1, 0.2, 2, N, seed=7)
    assert report.passed
    assert report.diagnostics["eta"] == 0.2
    with pytest.raises(InvalidInputError):
        moment_B_eta(gaussian1, 0.2, 3, N, seed=7)
    with pytest.raises(InvalidInputError):
        moment_B_eta(gaussian1, 0.8, 2, N, seed=7)


def test_moment_delta(gaussian1):
    report = moment_delta(gaussian1, 0.3, 2, N, seed=8)
    assert report.passed
    assert "mean_delta" in report.diagnostics
    assert abs(report.diagnostics["mean_delta"]) < report.bound


def _burn_in_cosine():
    return burn_in_target(make_cosine_perturbed(2, 0.5), 0.5, n_steps=300)


def test_grad_norm_on_burn_in_cosine():
    target = _burn_in_cosine()
    report = moment_grad_norm(target, 1, N, seed=11)
    assert report.approximate
    assert report.passed
    # E f'(x)^2 = E f''(x) per coordinate, by integration by parts.
    def density(x):
        return math.exp(-0.5 * x * x - 0.5 * math.cos(x))

    z = integrate.quad(density, -math.inf, math.inf)[0]
    mean_cos = integrate.quad(lambda x: math.cos(x) * density(x), -math.inf, math.inf)[0] / z
    assert report.estimate == pytest.approx(2.0 * (1.0 - 0.5 * mean_cos), abs=0.06)


def test_stationary_lemmas_on_burn_in_cosine():
    target = _burn_in_cosine()
    for report in (
        moment_quadratic_form_at_qt(target, 0.25, 2, N, seed=12),
        moment_B_eta(target, 0.3, 2, N, seed=12),
        moment_delta(target, 0.3, 2, N, seed=12),
    ):
        assert report.approximate
        assert report.passed
    assert moment_grad_diff(target, 0.25, 0.5, 2, N, seed=12).passed


@pytest.mark.parametrize("eta", [0.1, 0.2, 0.3])
@pytest.mark.parametrize("ell", [2, 4])
def test_b_eta_and_delta_on_four_dimensional_quadratic(eta, ell):
    target = make_quadratic([1.0, 0.8, 0.6, 0.5])
    b_eta = moment_B_eta(target, eta, ell, N, seed=16)
    delta = moment_delta(target, eta, ell, N, seed=16)
    assert b_eta.bound == pytest.approx(b_eta_bound(target.profile, eta, ell))
    assert delta.bound == pytest.approx(delta_bound(target.profile, eta, ell))
    assert b_eta.passed
    assert delta.passed


# --- Acceptance tail ------------------------------------------------------------


def test_tail_max_eta():
    profile = SmoothnessProfile(L=1.0, upsilon=1.0, psi=1.0)
    assert tail_max_eta(profile, 0.5) == pytest.approx(0.125, rel=1e-12)
    assert tail_max_eta(profile, 0.05) == pytest.approx((4096 * math.log(20.0)) ** -0.25)
    assert tail_max_eta(profile, 0.05) == pytest.approx(0.0950, abs=1e-4)
    with pytest.raises(InvalidInputError):
        tail_max_eta(profile, 1.0)


def test_acceptance_tail_passes_at_lemma_step(gaussian1):
    report = acceptance_tail(gaussian1, 0.05, N, seed=9)
    assert report.eta == pytest.approx(tail_max_eta(gaussian1.profile, 0.05))
    assert report.exceedance <= 0.05
    assert report.threshold == pytest.approx(0.05 + 3 * math.sqrt(0.05 * 0.95 / N))
    assert report.passed


def test_acceptance_tail_fails_beyond_lemma_step(gaussian1):
    report = acceptance_tail(gaussian1, 0.05, N, seed=9, eta=1.5)
    assert report.exceedance > 0.1
    assert not report.passed
    assert report.ci_lo <= report.exceedance <= report.ci_hi


def test_acceptance_tail_on_burn_in_cosine():
    target = _burn_in_cosine()
    report = acceptance_tail(target, 0.05, N, seed=13)
    assert report.approximate
    assert report.passed
    good = good_set_fraction(target, 0.05, n_starts=200, n_momenta=64, seed=13)
    assert good.approximate
    assert good.passed


def test_good_set_fraction(gaussian1):
    report = good_set_fraction(gaussian1, 0.05, n_starts=200, n_momenta=64, seed=10)
    assert report.required_mass == pytest.approx(0.2)
    assert report.good_mass >= 0.99
    assert report.min_good_acceptance >= report.acceptance_floor
    assert report.passed


# --- Proposal overlap -----------------------------------------------------------


def test_overlap_flat(flat):
    x = np.zeros(2)
    eta = 0.5
    same = proposal_overlap_exact(x, x, eta, flat)
    assert same.tv_exact == 0.0
    assert same.passed

    far = proposal_overlap_exact(x, np.array([2 * eta, 0.0]), eta, flat)
    assert far.tv_exact == pytest.approx(2 * special.ndtr(1.0) - 1, abs=1e-12)
    assert far.tv_exact == pytest.approx(0.6827, abs=1e-4)
    assert far.bound_raw == pytest.approx(4.0)
    assert far.tv_bound == 1.0

    near = proposal_overlap_exact(x, np.array([0.1 * eta, 0.0]), eta, flat)
    assert near.tv_exact == pytest.approx(2 * special.ndtr(0.05) - 1, abs=1e-12)
    assert near.tv_bound == pytest.approx(0.2)


def test_overlap_quadratic_uses_proposal_means():
    target = make_quadratic([1.0])
    eta = 0.5
    report = proposal_overlap_exact(np.array([0.0]), np.array([1.0]), eta, target)
    shrink = 1.0 - eta * eta / 2
    assert report.tv_exact == pytest.approx(2 * special.ndtr(shrink / (2 * eta)) - 1, abs=1e-12)
    assert report.passed


def test_overlap_rejects_large_step(gaussian1):
    with pytest.raises(InvalidInputError):
        proposal_overlap_exact(np.zeros(1), np.ones(1), 1.5, gaussian1)


def test_overlap_grid_all_pass():
    reports = proposal_overlap_grid(make_anisotropic(4))
    assert len(reports) == 400
    assert all(r.passed for r in reports)
    assert min(r.distance / r.eta for r in reports) == pytest.approx(1e-3)
