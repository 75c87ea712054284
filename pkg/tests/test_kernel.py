import math

import numpy as np
import pytest

from malalab.errors import InvalidInputError, NumericError, PolicyUnavailableError
from malalab.kernel import (
    DEFAULT_C0,
    AcceptanceStats,
    BurnInTarget,
    ChainState,
    PhasePoint,
    acceptance_from_delta,
    acceptance_probability,
    burn_in_target,
    energy_difference,
    kappa_policy,
    leapfrog,
    leapfrog_jacobian_det,
    mala_step,
    manual_policy,
    run_chain,
    theorem1_policy,
    transition_log_density,
)
from malalab.mixing import tv_marginal
from malalab.targets import (
    SmoothnessProfile,
    make_anisotropic,
    make_cosine_perturbed,
    make_gaussian,
)
from malalab.utils.streams import stream


def _random_phase(target, n, seed):
    rng = stream(seed, "phase")
    return rng.standard_normal((n, target.dim)), rng.standard_normal((n, target.dim))


def test_leapfrog_hand_example(gaussian1):
    end = leapfrog(gaussian1, PhasePoint(np.array([1.0]), np.array([0.5])), 0.1)
    assert end.q[0] == pytest.approx(1.045, abs=1e-15)
    assert end.p[0] == pytest.approx(0.39775, abs=1e-15)


def test_leapfrog_free_dynamics(flat):
    start = PhasePoint(np.array([1.0, -2.0]), np.array([0.5, 0.25]))
    end = leapfrog(flat, start, 0.4)
    np.testing.assert_allclose(end.q, [1.2, -1.9])
    np.testing.assert_array_equal(end.p, start.p)
    assert energy_difference(flat, start, 0.4) == 0.0


def test_energy_difference_hand_example(gaussian1):
    start = PhasePoint(np.array([1.0]), np.array([0.5]))
    delta = energy_difference(gaussian1, start, 0.1)
    expected = 0.5 * 1.045**2 - 0.5 + 0.5 * 0.39775**2 - 0.125
    assert float(delta) == pytest.approx(expected, abs=1e-15)
    assert float(delta) == pytest.approx(0.00011503125, abs=1e-12)


def test_leapfrog_is_reversible(catalog_target):
    q, p = _random_phase(catalog_target, 100, 1)
    for eta in (0.05, 0.5):
        end = leapfrog(catalog_target, PhasePoint(q, p), eta)
        back = leapfrog(catalog_target, end.flipped(), eta)
        np.testing.assert_allclose(back.q, q, atol=1e-12)
        np.testing.assert_allclose(-back.p, p, atol=1e-12)


def test_leapfrog_preserves_volume(catalog_target):
    if catalog_target.dim > 3:
        pytest.skip("finite-difference Jacobian is only checked for d <= 3")
    q, p = _random_phase(catalog_target, 5, 2)
    for i in range(5):
        det = leapfrog_jacobian_det(catalog_target, PhasePoint(q[i], p[i]), 0.5)
        assert det == pytest.approx(1.0, abs=1e-5)


def test_acceptance_forms_agree(catalog_target):
    q, p = _random_phase(catalog_target, 20, 3)
    start = PhasePoint(q, p)
    literal = acceptance_probability(catalog_target, start, 0.3)
    from_delta = acceptance_from_delta(energy_difference(catalog_target, start, 0.3))
    np.testing.assert_allclose(literal, from_delta, rtol=1e-12, atol=0)


def test_acceptance_from_delta_saturates():
    np.testing.assert_array_equal(acceptance_from_delta(np.array([-3.0, 0.0, np.inf])), [1.0, 1.0, 0.0])


def test_detailed_balance(catalog_target):
    rng = stream(4, "balance")
    eta = 0.5
    x = rng.standard_normal((1000, catalog_target.dim))
    y = x + eta * rng.standard_normal((1000, catalog_target.dim))
    forward = -catalog_target.potential(x) + transition_log_density(catalog_target, x, y, eta)
    backward = -catalog_target.potential(y) + transition_log_density(catalog_target, y, x, eta)
    assert forward.shape == (1000,)
    np.testing.assert_allclose(forward, backward, rtol=1e-10, atol=1e-10)


def test_phase_point_shape_mismatch():
    with pytest.raises(InvalidInputError):
        PhasePoint(np.zeros(2), np.zeros(3))


@pytest.mark.parametrize("eta", [0.0, -0.1, float("inf"), float("nan")])
def test_leapfrog_rejects_bad_step(gaussian1, eta):
    with pytest.raises(InvalidInputError):
        leapfrog(gaussian1, PhasePoint(np.zeros(1), np.zeros(1)), eta)


def test_leapfrog_non_finite_gradient(flat):
    class Exploding(type(flat)):
        def gradient(self, q):
            return np.full_like(np.asarray(q, dtype=np.float64), np.nan)

    with pytest.raises(NumericError):
        leapfrog(Exploding(2), PhasePoint(np.zeros(2), np.zeros(2)), 0.1)


# --- Step-size policies -------------------------------------------------------


def test_theorem1_second_branch():
    profile = SmoothnessProfile(L=1.0, upsilon=1.0, psi=1.0)
    policy = theorem1_policy(profile, M=math.e, eps=1.0 / math.e, c0=1.0)
    assert policy.denominator == pytest.approx(2.0)
    assert policy.h == pytest.approx(0.5)
    assert policy.eta == pytest.approx(1.0)
    assert policy.provenance.startswith("theorem1(")


def test_theorem1_log_branch_value():
    profile = SmoothnessProfile(L=1.0, upsilon=4.0, psi=1.0)
    policy = theorem1_policy(profile, M=math.e, eps=0.1, c0=1.0)
    expected = math.log(4.0**0.25 * math.e / 0.1)
    assert policy.denominator == pytest.approx(expected)
    assert policy.denominator == pytest.approx(3.649, abs=1e-3)
    assert policy.h == pytest.approx(0.274, abs=1e-3)


def test_theorem1_sqrt_branch_scaling():
    small = theorem1_policy(SmoothnessProfile(L=1.0, upsilon=100.0, psi=1.0), M=1.0, eps=0.5, c0=1.0)
    large = theorem1_policy(SmoothnessProfile(L=1.0, upsilon=200.0, psi=1.0), M=1.0, eps=0.5, c0=1.0)
    assert large.h / small.h == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-12)


def test_default_c0_value():
    assert DEFAULT_C0 == pytest.approx(1.0 / (128.0 * math.sqrt(math.log(20.0))))


def test_policy_needs_psi():
    with pytest.raises(PolicyUnavailableError):
        theorem1_policy(SmoothnessProfile(L=1.0, upsilon=2.0), M=2.0, eps=0.1)


@pytest.mark.parametrize("M, eps", [(0.5, 0.1), (2.0, 0.0), (2.0, 1.0)])
def test_policy_rejects_bad_inputs(M, eps):
    with pytest.raises(InvalidInputError):
        theorem1_policy(SmoothnessProfile(L=1.0, upsilon=2.0, psi=1.0), M=M, eps=eps)


def test_kappa_policy_is_more_conservative_on_anisotropic():
    target = make_anisotropic(32)
    trace_rule = theorem1_policy(target.profile, M=math.e, eps=0.1)
    kappa_rule = kappa_policy(target.profile, target.dim, M=math.e, eps=0.1)
    assert kappa_rule.eta < trace_rule.eta
    assert kappa_rule.predicted_iterations() > trace_rule.predicted_iterations()


def test_manual_policy_has_no_iteration_bound():
    policy = manual_policy(0.3)
    assert policy.provenance == "manual"
    with pytest.raises(PolicyUnavailableError):
        policy.predicted_iterations()


# --- Chains -------------------------------------------------------------------


def test_flat_target_accepts_everything(flat):
    state = ChainState(q=np.zeros((50, 2)), rng=stream(5))
    for _ in range(10):
        state = mala_step(flat, state, manual_policy(0.5), lazy=False)
    assert state.stats.rejected == 0
    assert state.stats.held == 0
    assert state.stats.accepted == 500


def test_lazy_accounting(gaussian1):
    traj = run_chain(
        gaussian1, np.zeros(1), manual_policy(1.0), 10_000, rng_seed=6, thinning=100, n_chains=10
    )
    stats = traj.stats
    n = 10_000 * 10
    assert stats.accepted + stats.rejected + stats.held == n
    assert abs(stats.held_fraction - 0.5) <= 5.0 * math.sqrt(0.25 / n)


def test_stats_addition():
    total = AcceptanceStats(accepted=1, rejected=2, held=3) + AcceptanceStats(accepted=4)
    assert (total.accepted, total.rejected, total.held) == (5, 2, 3)
    assert total.acceptance_rate == pytest.approx(5 / 7)


def test_run_chain_rejects_zero_steps(gaussian1):
    with pytest.raises(InvalidInputError):
        run_chain(gaussian1, np.zeros(1), manual_policy(0.1), 0, rng_seed=1)


def test_run_chain_rejects_bad_init(gaussian1):
    with pytest.raises(InvalidInputError):
        run_chain(gaussian1, np.array([np.nan]), manual_policy(0.1), 5, rng_seed=1)


def test_run_chain_is_deterministic():
    target = make_anisotropic(4)
    policy = manual_policy(0.4)
    a = run_chain(target, np.ones(4), policy, 300, rng_seed=42, n_chains=3)
    b = run_chain(target, np.ones(4), policy, 300, rng_seed=42, n_chains=3)
    c = run_chain(target, np.ones(4), policy, 300, rng_seed=43, n_chains=3)
    np.testing.assert_array_equal(a.positions, b.positions)
    np.testing.assert_array_equal(a.moved, b.moved)
    assert not np.array_equal(a.positions, c.positions)


def test_run_chain_thinning(gaussian1):
    traj = run_chain(gaussian1, np.zeros(1), manual_policy(0.3), 10, rng_seed=1, thinning=3)
    np.testing.assert_array_equal(traj.steps, [0, 3, 6, 9])
    assert traj.positions.shape == (4, 1, 1)
    assert traj.chain(0).shape == (4, 1)


def test_theorem1_step_keeps_acceptance_high(gaussian1):
    policy = theorem1_policy(gaussian1.profile, M=math.e, eps=0.1)
    traj = run_chain(gaussian1, gaussian1, policy, 1000, rng_seed=9, n_chains=10)
    assert traj.stats.acceptance_rate >= 0.73


def test_chain_preserves_stationarity():
    target = make_gaussian(1)
    traj = run_chain(target, target, manual_policy(0.5), 100, rng_seed=12, n_chains=10_000)
    final = traj.positions[-1, :, 0]
    n = final.size
    assert abs(final.mean()) < 5.0 / math.sqrt(n)
    assert abs(final.var() - 1.0) < 5.0 * math.sqrt(2.0 / n)


# --- Burn-in sampler ------------------------------------------------------------


def test_burn_in_leaves_exact_targets_alone(gaussian1):
    assert burn_in_target(gaussian1, 0.5) is gaussian1


def test_burn_in_target_is_seeded_and_flagged():
    target = burn_in_target(make_cosine_perturbed(2, 0.5), 0.5, n_steps=200)
    assert isinstance(target, BurnInTarget)
    assert target.approximate
    assert target.has_sampler
    assert not target.has_exact_sampler
    assert "burn-in" in target.name
    a = target.sample(stream(1, "burn_in"), 100)
    b = target.sample(stream(1, "burn_in"), 100)
    c = target.sample(stream(2, "burn_in"), 100)
    assert a.shape == (100, 2)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_burn_in_rejects_bad_settings():
    base = make_cosine_perturbed(2, 0.5)
    with pytest.raises(InvalidInputError):
        BurnInTarget(base, 0.5, n_steps=0)
    with pytest.raises(InvalidInputError):
        BurnInTarget(base, 0.0)


def test_burn_in_samples_follow_cosine_marginal():
    target = burn_in_target(make_cosine_perturbed(2, 0.5), 0.5, n_steps=300)
    samples = target.sample(stream(3, "burn_in"), 20_000)
    assert tv_marginal(samples, target, coordinate=1) < 0.1
    assert np.var(samples[:, 0]) == pytest.approx(target.marginal_std(0) ** 2, rel=0.05)
