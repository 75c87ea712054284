"""Target densities mu ∝ exp(-f) with exact smoothness metadata.

All evaluations are vectorised over a leading batch axis: ``q`` has shape
``(..., d)``; ``potential`` returns shape ``(...)`` and ``gradient`` / ``hvp``
return shape ``(..., d)``. Hessians are only ever touched through
Hessian-vector products.
"""

import functools
import math
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np
from scipy import integrate, special

from malalab.errors import (
    InvalidInputError,
    ProfileInvalidError,
    UnsupportedTargetError,
)
from malalab.types import BaseModel
from malalab.utils.streams import stream

# Above this dimension the trace is estimated with Rademacher probes.
EXACT_TRACE_MAX_DIM = 64
HUTCHINSON_PROBES = 256
PROFILE_TOLERANCE = 1e-6


class SmoothnessProfile(BaseModel):
    L: float
    """Bound on the operator norm of the Hessian."""

    upsilon: float
    """Bound on sup_x tr(Hessian)."""

    psi: Optional[float] = None
    """Cheeger isoperimetric coefficient; None when unknown."""

    @property
    def psi_known(self) -> bool:
        return self.psi is not None


class TargetDensity(ABC):
    name: str
    dim: int
    profile: SmoothnessProfile
    approximate: bool = False
    """True when ``sample`` only approximates mu."""

    @abstractmethod
    def potential(self, q: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def gradient(self, q: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def hvp(self, q: np.ndarray, v: np.ndarray) -> np.ndarray: ...

    @property
    def has_exact_sampler(self) -> bool:
        return False

    @property
    def has_sampler(self) -> bool:
        """Whether ``sample`` works at all, exactly or approximately."""
        return self.has_exact_sampler

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` exact samples of shape ``(n, d)``."""
        raise UnsupportedTargetError(self.name)

    def marginal_cdf(self, coordinate: int, x: np.ndarray) -> np.ndarray:
        """CDF of the ``coordinate``-th marginal of mu."""
        raise UnsupportedTargetError(self.name, "a closed-form marginal")

    def marginal_std(self, coordinate: int) -> float:
        raise UnsupportedTargetError(self.name, "a closed-form marginal")

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name} d={self.dim}>"


class QuadraticTarget(TargetDensity):
    """f(q) = 1/2 sum_i a_i q_i^2, i.e. mu = N(0, diag(1/a))."""

    def __init__(self, eigenvalues: Sequence[float], name: Optional[str] = None):
        eig = np.asarray(eigenvalues, dtype=np.float64).ravel()
        if eig.size == 0:
            raise InvalidInputError("at least one eigenvalue is required", "eigenvalues")
        if not np.all(np.isfinite(eig)) or np.any(eig <= 0.0):
            raise InvalidInputError(
                f"all eigenvalues must be positive, got {eig.tolist()}", "eigenvalues"
            )
        eig.setflags(write=False)
        self.eigenvalues = eig
        self.dim = int(eig.size)
        self.profile = SmoothnessProfile(
            L=float(eig.max()),
            upsilon=float(eig.sum()),
            psi=float(np.sqrt(eig.min())),
        )
        self.name = name or f"quadratic(d={self.dim})"
        self._std = 1.0 / np.sqrt(eig)

    def potential(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=np.float64)
        return 0.5 * np.sum(self.eigenvalues * q * q, axis=-1)

    def gradient(self, q: np.ndarray) -> np.ndarray:
        return self.eigenvalues * np.asarray(q, dtype=np.float64)

    def hvp(self, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        return np.broadcast_to(self.eigenvalues * v, np.broadcast_shapes(np.shape(q), v.shape)).copy()

    @property
    def has_exact_sampler(self) -> bool:
        return True

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.standard_normal((n, self.dim)) * self._std

    def marginal_std(self, coordinate: int) -> float:
        return float(self._std[coordinate])

    def marginal_cdf(self, coordinate: int, x: np.ndarray) -> np.ndarray:
        return special.ndtr(np.asarray(x, dtype=np.float64) / self._std[coordinate])


class CosinePerturbedTarget(TargetDensity):
    """f(q) = 1/2 |q|^2 + a sum_i cos(q_i), |a| < 1.

    Strongly log-concave since f'' >= 1 - |a|, but not Gaussian: psi is not
    computed and there is no exact sampler.
    """

    def __init__(self, dim: int, a: float):
        if dim < 1:
            raise InvalidInputError(f"dimension must be positive, got {dim}", "d")
        if not abs(a) < 1.0:
            raise InvalidInputError(f"|a| must be < 1, got {a}", "a")
        self.dim = int(dim)
        self.a = float(a)
        self.profile = SmoothnessProfile(
            L=1.0 + abs(self.a), upsilon=self.dim * (1.0 + abs(self.a)), psi=None
        )
        self.name = f"cosine(d={self.dim},a={self.a:g})"

    def potential(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=np.float64)
        return 0.5 * np.sum(q * q, axis=-1) + self.a * np.sum(np.cos(q), axis=-1)

    def gradient(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=np.float64)
        return q - self.a * np.sin(q)

    def hvp(self, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=np.float64)
        return (1.0 - self.a * np.cos(q)) * np.asarray(v, dtype=np.float64)

    # mu is a product of identical one-dimensional laws exp(-x^2/2 - a cos x) / Z,
    # so every marginal is the same and is integrated numerically.

    def _density(self, x: float) -> float:
        return math.exp(-0.5 * x * x - self.a * math.cos(x))

    @functools.cached_property
    def _normaliser(self) -> float:
        return integrate.quad(self._density, -math.inf, math.inf, epsabs=0.0, epsrel=1e-12)[0]

    @functools.cached_property
    def _variance(self) -> float:
        second = integrate.quad(
            lambda x: x * x * self._density(x), -math.inf, math.inf, epsabs=0.0, epsrel=1e-12
        )[0]
        return second / self._normaliser

    def _check_coordinate(self, coordinate: int) -> None:
        if not 0 <= coordinate < self.dim:
            raise InvalidInputError(f"coordinate {coordinate} out of range for d={self.dim}", "coordinate")

    def marginal_std(self, coordinate: int) -> float:
        self._check_coordinate(coordinate)
        return math.sqrt(self._variance)

    def marginal_cdf(self, coordinate: int, x: np.ndarray) -> np.ndarray:
        self._check_coordinate(coordinate)
        x = np.asarray(x, dtype=np.float64)
        # The density is even, so integrate from 0 and reflect.
        half = np.array(
            [
                integrate.quad(self._density, 0.0, abs(v), epsabs=0.0, epsrel=1e-12)[0]
                if math.isfinite(v)
                else 0.5 * self._normaliser
                for v in x.ravel()
            ]
        )
        return (0.5 + np.sign(x.ravel()) * half / self._normaliser).reshape(x.shape)


# --- Catalog ------------------------------------------------------------------


def make_quadratic(eigenvalues: Sequence[float]) -> QuadraticTarget:
    return QuadraticTarget(eigenvalues)


def make_gaussian(dim: int, sigma: float = 1.0) -> QuadraticTarget:
    """Isotropic N(0, sigma^2 I_d)."""
    if dim < 1:
        raise InvalidInputError(f"dimension must be positive, got {dim}", "dim")
    if not sigma > 0.0:
        raise InvalidInputError(f"sigma must be positive, got {sigma}", "sigma")
    return QuadraticTarget(
        np.full(dim, 1.0 / sigma**2), name=f"gaussian(d={dim},sigma={sigma:g})"
    )


def make_anisotropic(dim: int, L: float = 1.0) -> QuadraticTarget:
    """Eigenvalues (L, L/d, ..., L/d): one stiff direction, trace below 2L."""
    if dim < 1:
        raise InvalidInputError(f"dimension must be positive, got {dim}", "dim")
    if not L > 0.0:
        raise InvalidInputError(f"L must be positive, got {L}", "L")
    eig = np.full(dim, L / dim)
    eig[0] = L
    return QuadraticTarget(eig, name=f"anisotropic(d={dim},L={L:g})")


def make_cosine_perturbed(d: int, a: float) -> CosinePerturbedTarget:
    return CosinePerturbedTarget(d, a)


CATALOG: Dict[str, Callable[..., TargetDensity]] = {
    "gaussian": make_gaussian,
    "quadratic": make_quadratic,
    "anisotropic": make_anisotropic,
    "cosine": make_cosine_perturbed,
}


def build_target(kind: str, **params: Any) -> TargetDensity:
    factory = CATALOG.get(kind)
    if factory is None:
        raise InvalidInputError(
            f"unknown target kind {kind!r}; expected one of {sorted(CATALOG)}", "kind"
        )
    return factory(**params)


# --- Profile and derivative checks --------------------------------------------


class ProfileReport(BaseModel):
    target: str
    n_probes: int
    trace_method: str
    max_lambda: float
    max_trace: float
    lambda_margin: float
    """min over probes of L - lambda_max."""
    trace_margin: float
    """min over probes of upsilon - tr."""


def _probe_points(
    target: TargetDensity, n: int, rng: np.random.Generator
) -> np.ndarray:
    if target.has_exact_sampler:
        return target.sample(rng, n)
    return 2.0 * rng.standard_normal((n, target.dim))


def max_eigenvalue(
    target: TargetDensity,
    q: np.ndarray,
    rng: np.random.Generator,
    iterations: int = 500,
    rtol: float = 1e-13,
) -> float:
    """Largest Hessian eigenvalue at ``q`` by power iteration on hvp."""
    v = rng.standard_normal(target.dim)
    v /= np.linalg.norm(v)
    rayleigh = float(v @ target.hvp(q, v))
    for _ in range(iterations):
        w = target.hvp(q, v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        updated = float(v @ target.hvp(q, v))
        if abs(updated - rayleigh) <= rtol * max(1.0, abs(updated)):
            return updated
        rayleigh = updated
    return rayleigh


def hessian_trace(
    target: TargetDensity, q: np.ndarray, rng: np.random.Generator
) -> float:
    """tr(Hessian) at ``q``: exact from basis vectors up to d = 64, Hutchinson above."""
    d = target.dim
    if d <= EXACT_TRACE_MAX_DIM:
        basis = np.eye(d)
        return float(np.sum(basis * target.hvp(np.broadcast_to(q, (d, d)), basis)))
    probes = rng.choice(np.array([-1.0, 1.0]), size=(HUTCHINSON_PROBES, d))
    hz = target.hvp(np.broadcast_to(q, probes.shape), probes)
    return float(np.mean(np.sum(probes * hz, axis=-1)))


def validate_profile(
    target: TargetDensity,
    n_probes: int,
    rng_seed: int,
    points: Optional[np.ndarray] = None,
    tolerance: float = PROFILE_TOLERANCE,
) -> ProfileReport:
    """Check lambda_max <= L and tr <= upsilon at random (or given) probe points.

    Raises ProfileInvalidError naming the first point whose margin is below
    ``-tolerance``.
    """
    if n_probes < 1:
        raise InvalidInputError(f"need at least one probe, got {n_probes}", "n_probes")
    rng = stream(rng_seed, "validate_profile")
    probes = _probe_points(target, n_probes, rng)
    if points is not None:
        probes = np.vstack([np.atleast_2d(points), probes])

    lam_margin = trace_margin = np.inf
    max_lam = max_tr = -np.inf
    for q in probes:
        lam = max_eigenvalue(target, q, rng)
        tr = hessian_trace(target, q, rng)
        max_lam, max_tr = max(max_lam, lam), max(max_tr, tr)
        lam_margin = min(lam_margin, target.profile.L - lam)
        trace_margin = min(trace_margin, target.profile.upsilon - tr)
        if target.profile.L - lam < -tolerance:
            raise ProfileInvalidError("lambda_max <= L", q, target.profile.L - lam)
        if target.profile.upsilon - tr < -tolerance:
            raise ProfileInvalidError("trace <= upsilon", q, target.profile.upsilon - tr)

    return ProfileReport(
        target=target.name,
        n_probes=len(probes),
        trace_method="exact" if target.dim <= EXACT_TRACE_MAX_DIM else "hutchinson",
        max_lambda=max_lam,
        max_trace=max_tr,
        lambda_margin=lam_margin,
        trace_margin=trace_margin,
    )


class DerivativeReport(BaseModel):
    target: str
    n_probes: int
    gradient_rel_error: float
    hvp_rel_error: float
    hvp_asymmetry: float


def _relative_error(approx: np.ndarray, exact: np.ndarray) -> float:
    return float(np.linalg.norm(approx - exact) / max(1.0, np.linalg.norm(exact)))


def check_derivatives(
    target: TargetDensity, n_probes: int, rng_seed: int, step: float = 1e-5
) -> DerivativeReport:
    """Compare gradient and hvp against central finite differences.

    The returned errors are the worst relative errors over the probes; symmetry
    is |u'Hv - v'Hu| scaled by |u||v|.
    """
    rng = stream(rng_seed, "check_derivatives")
    probes = _probe_points(target, n_probes, rng)
    d = target.dim
    eye = np.eye(d)
    worst_grad = worst_hvp = worst_sym = 0.0
    for q in probes:
        shifted = q + step * eye
        back = q - step * eye
        fd_grad = (target.potential(shifted) - target.potential(back)) / (2 * step)
        worst_grad = max(worst_grad, _relative_error(fd_grad, target.gradient(q)))

        u, v = rng.standard_normal(d), rng.standard_normal(d)
        fd_hvp = (target.gradient(q + step * v) - target.gradient(q - step * v)) / (2 * step)
        hv = target.hvp(q, v)
        worst_hvp = max(worst_hvp, _relative_error(fd_hvp, hv))
        hu = target.hvp(q, u)
        asym = abs(float(u @ hv) - float(v @ hu)) / (np.linalg.norm(u) * np.linalg.norm(v))
        worst_sym = max(worst_sym, asym)

    return DerivativeReport(
        target=target.name,
        n_probes=n_probes,
        gradient_rel_error=worst_grad,
        hvp_rel_error=worst_hvp,
        hvp_asymmetry=worst_sym,
    )
