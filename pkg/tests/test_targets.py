import math

import numpy as np
import pytest
from scipy import special

from malalab.errors import InvalidInputError, ProfileInvalidError, UnsupportedTargetError
from malalab.targets import (
    SmoothnessProfile,
    build_target,
    check_derivatives,
    hessian_trace,
    make_anisotropic,
    make_cosine_perturbed,
    make_gaussian,
    make_quadratic,
    validate_profile,
)
from malalab.utils.streams import stream


def test_quadratic_profile_one_dimensional():
    target = make_quadratic([1.0])
    assert target.profile == SmoothnessProfile(L=1.0, upsilon=1.0, psi=1.0)


def test_anisotropic_profile():
    target = make_anisotropic(4, L=1.0)
    assert target.profile.L == 1.0
    assert target.profile.upsilon == pytest.approx(1.75)
    assert target.profile.psi == pytest.approx(0.5)


def test_isotropic_trace_is_tight():
    target = make_quadratic([2.0, 2.0])
    assert target.profile.upsilon == pytest.approx(target.profile.L * target.dim)


@pytest.mark.parametrize("d", [2, 4, 8, 16, 32])
def test_anisotropic_trace_below_twice_L(d):
    profile = make_anisotropic(d, L=3.0).profile
    assert profile.upsilon < 2 * profile.L
    assert profile.upsilon <= profile.L * d


@pytest.mark.parametrize("eigenvalues", [[], [1.0, 0.0], [-1.0], [float("nan")]])
def test_quadratic_rejects_bad_eigenvalues(eigenvalues):
    with pytest.raises(InvalidInputError):
        make_quadratic(eigenvalues)


def test_cosine_rejects_large_amplitude():
    with pytest.raises(InvalidInputError):
        make_cosine_perturbed(2, 1.0)


def test_cosine_without_perturbation_is_gaussian():
    cosine = make_cosine_perturbed(3, 0.0)
    gaussian = make_gaussian(3)
    q = stream(1, "points").standard_normal((20, 3))
    np.testing.assert_allclose(cosine.potential(q), gaussian.potential(q), atol=1e-14)
    np.testing.assert_allclose(cosine.gradient(q), gaussian.gradient(q), atol=1e-14)


def test_cosine_hand_values():
    target = make_cosine_perturbed(1, 0.5)
    assert target.potential(np.array([0.0])) == pytest.approx(0.5)
    np.testing.assert_allclose(target.gradient(np.array([0.0])), [0.0])

    target2 = make_cosine_perturbed(2, 0.5)
    q = np.array([math.pi / 2, 0.0])
    np.testing.assert_allclose(target2.gradient(q), [math.pi / 2 - 0.5, 0.0], atol=1e-15)


def test_cosine_has_no_exact_sampler():
    target = make_cosine_perturbed(2, 0.3)
    assert not target.has_exact_sampler
    assert target.profile.psi is None
    with pytest.raises(UnsupportedTargetError):
        target.sample(stream(0), 3)


def test_cosine_marginal_is_normalised_and_symmetric():
    target = make_cosine_perturbed(2, 0.5)
    x = np.linspace(-6.0, 6.0, 49)
    cdf = target.marginal_cdf(1, x)
    assert np.all(np.diff(cdf) > 0.0)
    assert target.marginal_cdf(0, np.array([0.0]))[0] == pytest.approx(0.5, abs=1e-12)
    np.testing.assert_allclose(cdf + cdf[::-1], 1.0, atol=1e-10)
    tails = target.marginal_cdf(0, np.array([-np.inf, 12.0, np.inf]))
    np.testing.assert_allclose(tails, [0.0, 1.0, 1.0], atol=1e-12)


def test_cosine_marginal_reduces_to_gaussian():
    target = make_cosine_perturbed(1, 0.0)
    x = np.array([-1.5, -0.2, 0.7, 2.0])
    np.testing.assert_allclose(target.marginal_cdf(0, x), special.ndtr(x), atol=1e-10)
    assert target.marginal_std(0) == pytest.approx(1.0, abs=1e-10)


def test_cosine_marginal_width_follows_amplitude():
    # a > 0 raises the potential near 0 and pushes mass outward.
    assert make_cosine_perturbed(1, 0.5).marginal_std(0) > 1.0
    assert make_cosine_perturbed(1, -0.5).marginal_std(0) < 1.0
    with pytest.raises(InvalidInputError):
        make_cosine_perturbed(2, 0.5).marginal_std(2)


def test_gaussian_sampler_moments():
    target = make_quadratic([4.0, 0.25])
    x = target.sample(stream(3, "sampler"), 200_000)
    np.testing.assert_allclose(x.std(axis=0), [0.5, 2.0], rtol=0.01)


def test_validate_profile_isotropic_margins_zero():
    report = validate_profile(make_gaussian(3), n_probes=5, rng_seed=11)
    assert report.max_lambda == pytest.approx(1.0, abs=1e-12)
    assert report.max_trace == pytest.approx(3.0, abs=1e-12)
    assert abs(report.lambda_margin) < 1e-12
    assert abs(report.trace_margin) < 1e-12
    assert report.trace_method == "exact"


def test_validate_profile_exact_diagonal_trace():
    report = validate_profile(make_quadratic([3.0, 1.0]), n_probes=4, rng_seed=2)
    assert report.max_trace == pytest.approx(4.0)
    assert report.max_lambda == pytest.approx(3.0, rel=1e-9)


def test_validate_profile_cosine_at_pi():
    target = make_cosine_perturbed(1, 0.5)
    report = validate_profile(target, n_probes=8, rng_seed=5, points=np.array([[math.pi]]))
    assert report.max_lambda == pytest.approx(1.5, abs=1e-12)
    assert report.lambda_margin >= -1e-12


def test_validate_profile_reports_violation():
    target = make_quadratic([2.0, 1.0])
    target.profile = SmoothnessProfile(L=1.0, upsilon=3.0, psi=1.0)
    with pytest.raises(ProfileInvalidError) as excinfo:
        validate_profile(target, n_probes=3, rng_seed=0)
    assert excinfo.value.quantity == "lambda_max <= L"


def test_hutchinson_trace_is_exact_for_diagonal_hessians():
    target = make_gaussian(100, sigma=0.5)
    assert target.dim > 64
    tr = hessian_trace(target, np.zeros(100), stream(0, "trace"))
    assert tr == pytest.approx(400.0, rel=1e-12)


def test_derivatives_match_finite_differences(catalog_target):
    report = check_derivatives(catalog_target, n_probes=32, rng_seed=7)
    assert report.n_probes == 32
    assert report.gradient_rel_error <= 1e-5
    assert report.hvp_rel_error <= 1e-4
    assert report.hvp_asymmetry <= 1e-10


def test_build_target_dispatch():
    target = build_target("anisotropic", dim=8, L=2.0)
    assert target.dim == 8
    assert target.profile.L == 2.0
    with pytest.raises(InvalidInputError):
        build_target("banana", dim=2)
