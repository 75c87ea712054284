"""Acceptance-scale Monte-Carlo checks. Run with ``pytest -m slow``."""

import math

import numpy as np
import pytest

from malalab.kernel import manual_policy, run_chain, theorem1_policy
from malalab.mixing import (
    gaussian_warm_start,
    mixing_time_measure,
)
from malalab.targets import make_anisotropic, make_gaussian, make_quadratic
from malalab.theory import (
    acceptance_tail,
    moment_B_eta,
    moment_delta,
    moment_grad_diff,
    moment_grad_norm,
    moment_quadratic_form,
    moment_quadratic_form_at_qt,
)

pytestmark = pytest.mark.slow

N = 200_000
TARGETS = {
    "gaussian1": lambda: make_gaussian(1),
    "quadratic": lambda: make_quadratic([3.0, 1.0]),
    "anisotropic8": lambda: make_anisotropic(8),
}


@pytest.fixture(params=sorted(TARGETS))
def target(request):
    return TARGETS[request.param]()


@pytest.mark.parametrize("ell", [1, 2, 4, 8])
def test_moment_lemmas_hold(target, ell):
    reports = [
        moment_grad_norm(target, ell, N, seed=11),
        moment_quadratic_form(target, np.zeros(target.dim), ell, N, seed=11),
        moment_quadratic_form_at_qt(target, 0.5 / math.sqrt(target.profile.L), ell, N, seed=11),
    ]
    pair = moment_grad_diff(target, 0.1, 0.2, ell, N, seed=11)
    reports += [pair.vs_start, pair.vs_end]
    if ell % 2 == 0:
        eta = 0.5 / math.sqrt(target.profile.L)
        reports.append(moment_B_eta(target, eta, ell, N, seed=11))
        reports.append(moment_delta(target, eta, ell, N, seed=11))
    for report in reports:
        assert report.passed, report


@pytest.mark.parametrize("delta", [0.5, 0.1, 0.05])
def test_acceptance_tail_holds(target, delta):
    assert acceptance_tail(target, delta, 100_000, seed=12).passed


def test_long_chain_keeps_mean_and_variance():
    target = make_gaussian(1)
    traj = run_chain(target, target, manual_policy(0.5), 1_000_000, rng_seed=13, thinning=100)
    x = traj.chain(0)[:, 0]
    # Thinned by 100 lazy steps, consecutive records are close to independent.
    assert abs(x.mean()) < 5.0 / math.sqrt(x.size)
    assert abs(x.var() - 1.0) < 5.0 * math.sqrt(2.0 / x.size)


def test_tau_hat_is_finite_and_grows_with_smaller_steps():
    target = make_gaussian(1)
    warm = gaussian_warm_start(target, math.e)
    policy = theorem1_policy(target.profile, math.e, 0.1)
    fast = mixing_time_measure(target, warm, policy, 0.1, 10_000, 20_000, seed=14)
    slow = mixing_time_measure(target, warm, manual_policy(policy.eta / 2), 0.1, 10_000, 20_000, seed=14)
    assert fast.reached
    assert not slow.reached or slow.tau_hat >= fast.tau_hat


def test_tau_hat_decreases_with_eps():
    target = make_gaussian(1)
    warm = gaussian_warm_start(target, math.e)
    policy = theorem1_policy(target.profile, math.e, 0.1)
    taus = [
        mixing_time_measure(target, warm, policy, eps, 10_000, 20_000, seed=15).tau_hat
        for eps in (0.05, 0.1, 0.2)
    ]
    assert all(t is not None for t in taus)
    assert taus[0] >= taus[1] >= taus[2]
