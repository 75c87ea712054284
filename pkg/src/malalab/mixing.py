"""Mixing-time measurement and the conductance bound on finite chains.

Continuous chains are measured through the total variation between the
histogram of one coordinate across many replicas and that coordinate's exact
marginal. A marginal TV lower-bounds the full TV, so ``tau_hat`` is optimistic
by construction and every report calls it "marginal TV".

Finite chains (at most ``MAX_STATES`` states) are small enough to check the
Lovasz-Simonovits bound exactly: the s-conductance comes from enumerating every
subset and the TV from matrix powers.
"""

import dataclasses
import functools
import itertools
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special, stats

from malalab.errors import (
    GridTooSmallError,
    InvalidInputError,
    UndefinedConductanceError,
)
from malalab.kernel import (
    ChainState,
    InitialSampler,
    StepSizePolicy,
    kappa_policy,
    mala_step,
    proposal_mean,
    theorem1_policy,
)
from malalab.parallel import batch_sizes, map_batches
from malalab.targets import QuadraticTarget, TargetDensity, make_anisotropic
from malalab.types import BaseModel
from malalab.utils.logger import Logger, get_default_logger
from malalab.utils.streams import child_seed, stream

MAX_STATES = 20
CHAIN_TOLERANCE = 1e-12
LOVASZ_SLACK = 1e-10
MIN_COVERAGE = 1.0 - 1e-6
MIN_REPLICAS = 10_000
TV_BINS = 64
TV_SPAN = 8.0
"""Histogram half-width in units of the marginal's standard deviation."""
SCALING_DIMS = (2, 4, 8, 16, 32)
MIN_RESOLVED_DIMS = 3
"""A slope needs at least this many dims with 0 < tau_hat <= n_max."""
REPLICA_BATCH = 5_000
_QUADRATURE_ORDER = 64
_SLOPE_RESAMPLES = 1000


# --- Warm starts --------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class WarmStart:
    """mu0 = N(0, diag(std^2)) with warmness ``M`` relative to the target."""

    std: np.ndarray
    M: float
    exact: bool = True
    """False when ``M`` is only a declared upper bound."""

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.standard_normal((n, self.std.size)) * self.std


def slowest_coordinate(target: TargetDensity) -> int:
    """Index of the widest marginal, the last direction to relax under MALA.

    Ties go to the lowest index, so the anisotropic family reports coordinate 1.
    """
    std = [target.marginal_std(i) for i in range(target.dim)]
    return int(np.argmax(std))


def gaussian_warm_start(
    target: TargetDensity, M: float, coordinate: Optional[int] = None
) -> WarmStart:
    """Shrink one marginal by 1/M and leave the rest at their stationary width.

    For N(0, r^2 s^2) against N(0, s^2) with r <= 1 the density ratio peaks at
    the origin with value 1/r, so sup mu0 / mu = M in every dimension and the
    starting marginal TV does not depend on d. ``coordinate`` defaults to
    :func:`slowest_coordinate`. Warmness is exact only for Gaussian targets.
    """
    if not M >= 1.0:
        raise InvalidInputError(f"warmness must be >= 1, got {M}", "M")
    if coordinate is None:
        coordinate = slowest_coordinate(target)
    if not 0 <= coordinate < target.dim:
        raise InvalidInputError(
            f"coordinate must lie in [0, {target.dim}), got {coordinate}", "coordinate"
        )
    std = np.array([target.marginal_std(i) for i in range(target.dim)])
    std[coordinate] /= M
    return WarmStart(std=std, M=float(M), exact=isinstance(target, QuadraticTarget))


def stationary_start(target: TargetDensity) -> WarmStart:
    return gaussian_warm_start(target, 1.0)


# --- Finite chains --------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class FiniteChain:
    """Lazy chain on ``k`` states, reversible with respect to ``pi``."""

    P: np.ndarray
    pi: np.ndarray
    centers: Optional[np.ndarray] = None
    """Bin centers when the chain discretises a 1D target."""

    def __post_init__(self) -> None:
        P = np.asarray(self.P, dtype=np.float64)
        pi = np.asarray(self.pi, dtype=np.float64)
        k = pi.size
        if not 2 <= k <= MAX_STATES:
            raise InvalidInputError(f"need 2 <= k <= {MAX_STATES} states, got {k}", "k")
        if P.shape != (k, k):
            raise InvalidInputError(f"P must be {k}x{k}, got {P.shape}", "P")
        if np.any(P < 0.0) or np.max(np.abs(P.sum(axis=1) - 1.0)) > CHAIN_TOLERANCE:
            raise InvalidInputError("P must be row-stochastic", "P")
        if abs(pi.sum() - 1.0) > CHAIN_TOLERANCE or np.any(pi <= 0.0):
            raise InvalidInputError("pi must be a positive probability vector", "pi")
        if self.reversibility_residual(P, pi) > CHAIN_TOLERANCE:
            raise InvalidInputError("P is not reversible with respect to pi", "P")
        if np.any(np.diag(P) < 0.5 - CHAIN_TOLERANCE):
            raise InvalidInputError("chain is not lazy: some P_ii < 1/2", "P")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "pi", pi)

    @property
    def k(self) -> int:
        return int(self.pi.size)

    @staticmethod
    def reversibility_residual(P: np.ndarray, pi: np.ndarray) -> float:
        flow = pi[:, None] * P
        return float(np.max(np.abs(flow - flow.T)))

    def flows(self) -> np.ndarray:
        """Ergodic flow matrix pi_i P_ij."""
        return self.pi[:, None] * self.P

    def distribution(self, mu0: np.ndarray, n: int) -> np.ndarray:
        return np.asarray(mu0, dtype=np.float64) @ np.linalg.matrix_power(self.P, n)


def lazify(P: np.ndarray) -> np.ndarray:
    P = np.asarray(P, dtype=np.float64)
    return 0.5 * (np.eye(P.shape[0]) + P)


def _metropolis(proposal: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """Metropolis-Hastings kernel for ``proposal`` against ``pi``.

    Flows are symmetrised before dividing by pi, so detailed balance holds to
    rounding. Proposal mass that leaves the state space is rejected.
    """
    raw = pi[:, None] * proposal
    flow = np.minimum(raw, raw.T)
    np.fill_diagonal(flow, 0.0)
    P = flow / pi[:, None]
    np.fill_diagonal(P, 1.0 - P.sum(axis=1))
    return P


def two_state_chain(p: float, pi0: float = 0.5) -> FiniteChain:
    """Lazified Metropolis chain on {0, 1} whose proposal flips with probability ``p``.

    With uniform pi the result is [[1 - p/2, p/2], [p/2, 1 - p/2]].
    """
    if not 0.0 < p <= 1.0:
        raise InvalidInputError(f"flip probability must lie in (0, 1], got {p}", "p")
    if not 0.0 < pi0 < 1.0:
        raise InvalidInputError(f"pi0 must lie in (0, 1), got {pi0}", "pi0")
    pi = np.array([pi0, 1.0 - pi0])
    proposal = np.array([[1.0 - p, p], [p, 1.0 - p]])
    return FiniteChain(P=lazify(_metropolis(proposal, pi)), pi=pi)


def _unnormalised_density(target: TargetDensity):
    def density(x):
        x = np.asarray(x, dtype=np.float64)
        return np.exp(-target.potential(x[..., None]))

    return density


def discretize_1d(
    target: TargetDensity,
    lo: float,
    hi: float,
    k: int,
    policy: StepSizePolicy,
) -> FiniteChain:
    """Lazy Metropolis surrogate of MALA on ``k`` equal bins of [lo, hi].

    pi_i is the target mass of bin i (Gauss-Legendre per bin, renormalised to
    [lo, hi]). From bin center c_i the proposal is N(c_i - h f'(c_i), 2h)
    integrated over each bin.
    """
    if target.dim != 1:
        raise InvalidInputError(f"discretisation needs a 1D target, got d={target.dim}", "target")
    if not 2 <= k <= MAX_STATES:
        raise InvalidInputError(f"need 2 <= k <= {MAX_STATES} bins, got {k}", "k")
    if not hi > lo:
        raise InvalidInputError(f"empty interval [{lo}, {hi}]", "grid")

    density = _unnormalised_density(target)
    edges = np.linspace(lo, hi, k + 1)
    nodes, weights = special.roots_legendre(_QUADRATURE_ORDER)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    points = mid[:, None] + half[:, None] * nodes[None, :]
    bin_mass = half * (density(points) @ weights)

    total, _ = integrate.quad(density, -np.inf, np.inf)
    inside = float(bin_mass.sum())
    coverage = inside / total
    if coverage < MIN_COVERAGE:
        raise GridTooSmallError(coverage, MIN_COVERAGE)
    pi = bin_mass / inside

    means = proposal_mean(target, mid[:, None], policy.eta)[:, 0]
    # sqrt(2h) == eta
    cdf = special.ndtr((edges[None, :] - means[:, None]) / policy.eta)
    proposal = np.diff(cdf, axis=1)
    return FiniteChain(P=lazify(_metropolis(proposal, pi)), pi=pi, centers=mid)


def binned_mass(target: TargetDensity, lo: float, hi: float, k: int) -> np.ndarray:
    """Exact marginal mass of each bin, renormalised to [lo, hi]."""
    cdf = target.marginal_cdf(0, np.linspace(lo, hi, k + 1))
    mass = np.diff(cdf)
    return mass / mass.sum()


# --- s-conductance --------------------------------------------------------------

_MASK_CHUNK = 1 << 15


def _check_s(s: float) -> None:
    if not 0.0 <= s < 0.5:
        raise InvalidInputError(f"s must lie in [0, 1/2), got {s}", "s")


def s_conductance_exact(chain: FiniteChain, s: float) -> float:
    """inf over s < pi(S) < 1 - s of Q(S, S^c) / (min{pi(S), pi(S^c)} - s).

    Every nonempty proper subset is scanned as a bitmask, in chunks.
    """
    _check_s(s)
    k = chain.k
    flows = chain.flows()
    bits = 1 << np.arange(k, dtype=np.int64)
    best = math.inf
    for start in range(1, (1 << k) - 1, _MASK_CHUNK):
        masks = np.arange(start, min(start + _MASK_CHUNK, (1 << k) - 1), dtype=np.int64)
        member = ((masks[:, None] & bits[None, :]) != 0).astype(np.float64)
        mass = member @ chain.pi
        feasible = (mass > s) & (mass < 1.0 - s)
        if not np.any(feasible):
            continue
        member = member[feasible]
        mass = mass[feasible]
        boundary = np.sum((member @ flows) * (1.0 - member), axis=1)
        ratio = boundary / (np.minimum(mass, 1.0 - mass) - s)
        best = min(best, float(ratio.min()))
    if math.isinf(best):
        raise UndefinedConductanceError(s)
    return best


def s_conductance_reference(chain: FiniteChain, s: float) -> float:
    """Same quantity, scanning subsets by size from large to small with plain sums."""
    _check_s(s)
    k = chain.k
    pi = chain.pi.tolist()
    P = chain.P.tolist()
    best = math.inf
    for size in range(k - 1, 0, -1):
        for subset in itertools.combinations(range(k), size):
            inside = set(subset)
            mass = math.fsum(pi[i] for i in subset)
            if not s < mass < 1.0 - s:
                continue
            boundary = math.fsum(
                pi[i] * P[i][j] for i in subset for j in range(k) if j not in inside
            )
            best = min(best, boundary / (min(mass, 1.0 - mass) - s))
    if math.isinf(best):
        raise UndefinedConductanceError(s)
    return best


# --- Lovasz-Simonovits bound ----------------------------------------------------


@dataclasses.dataclass(frozen=True)
class LovaszReport:
    s: float
    M: float
    phi_s: float
    n: np.ndarray
    tv: np.ndarray
    bound: np.ndarray
    """M s + M (1 - phi_s^2 / 2)^n."""

    @property
    def slack(self) -> np.ndarray:
        return self.bound - self.tv

    @property
    def passed(self) -> np.ndarray:
        return self.slack >= -LOVASZ_SLACK

    @property
    def all_passed(self) -> bool:
        return bool(np.all(self.passed))

    def tau(self, eps: float) -> Optional[int]:
        """First n with exact TV <= eps, or None within the horizon."""
        hit = np.flatnonzero(self.tv <= eps)
        return int(self.n[hit[0]]) if hit.size else None


def warmness(chain: FiniteChain, mu0: np.ndarray) -> float:
    """sup_S mu0(S) / pi(S), attained on a single state."""
    return float(np.max(np.asarray(mu0, dtype=np.float64) / chain.pi))


def total_variation(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(a) - np.asarray(b))))


def lovasz_bound_check(
    chain: FiniteChain,
    mu0: np.ndarray,
    s: float,
    n_max: int,
    M: Optional[float] = None,
) -> LovaszReport:
    """Compare exact d_TV(mu0 P^n, pi) with the bound for n = 0..n_max.

    ``M`` defaults to the exact warmness of ``mu0``; a declared ``M`` must
    dominate it.
    """
    mu0 = np.asarray(mu0, dtype=np.float64)
    if mu0.shape != chain.pi.shape or np.any(mu0 < 0.0) or abs(mu0.sum() - 1.0) > 1e-12:
        raise InvalidInputError("mu0 must be a probability vector over the chain's states", "mu0")
    if n_max < 0:
        raise InvalidInputError(f"n_max must be >= 0, got {n_max}", "n_max")
    exact_M = warmness(chain, mu0)
    if M is None:
        M = exact_M
    elif exact_M > M * (1.0 + 1e-12):
        raise InvalidInputError(f"mu0 is {exact_M:.6g}-warm, more than the declared M={M:g}", "M")

    phi = s_conductance_exact(chain, s)
    n = np.arange(n_max + 1)
    tv = np.empty(n_max + 1)
    v = mu0.copy()
    for i in range(n_max + 1):
        tv[i] = total_variation(v, chain.pi)
        v = v @ chain.P
    # phi_s <= 1 for lazy chains, so the base stays in [1/2, 1].
    bound = M * s + M * np.power(1.0 - 0.5 * phi * phi, n)
    return LovaszReport(s=s, M=M, phi_s=phi, n=n, tv=tv, bound=bound)


def lovasz_iteration_bound(phi_s: float, M: float, eps: float) -> int:
    """n = ceil((2 / phi_s^2) log(2M / eps)); with s = eps / (2M) the bound is <= eps there."""
    if not phi_s > 0.0:
        raise InvalidInputError(f"phi_s must be positive, got {phi_s}", "phi_s")
    if not 0.0 < eps < 1.0:
        raise InvalidInputError(f"eps must lie in (0, 1), got {eps}", "eps")
    return int(math.ceil(2.0 / (phi_s * phi_s) * math.log(2.0 * M / eps)))


# --- Marginal TV ---------------------------------------------------------------


def marginal_edges(
    target: TargetDensity, coordinate: int, bins: int = TV_BINS, span: float = TV_SPAN
) -> np.ndarray:
    width = span * target.marginal_std(coordinate)
    return np.linspace(-width, width, bins + 1)


def tv_marginal(
    samples: np.ndarray,
    target: TargetDensity,
    coordinate: int = 0,
    bins: int = TV_BINS,
    span: float = TV_SPAN,
) -> float:
    """1/2 sum |empirical - target| over ``bins`` uniform bins plus two tail bins.

    ``samples`` is either (n,) values of the coordinate or (n, d) positions.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 2:
        x = x[:, coordinate]
    if x.size < MIN_REPLICAS:
        raise InvalidInputError(
            f"need at least {MIN_REPLICAS} replicas, got {x.size}", "samples"
        )
    edges = marginal_edges(target, coordinate, bins, span)
    counts, _ = np.histogram(x, bins=edges)
    below = np.count_nonzero(x < edges[0])
    above = np.count_nonzero(x > edges[-1])
    empirical = np.concatenate(([below], counts, [above])) / x.size

    cdf = target.marginal_cdf(coordinate, edges)
    expected = np.concatenate(([cdf[0]], np.diff(cdf), [1.0 - cdf[-1]]))
    return total_variation(empirical, expected)


def noise_floor(
    target: TargetDensity,
    n_replicas: int,
    seed: int,
    coordinate: int = 0,
    bins: int = TV_BINS,
    span: float = TV_SPAN,
) -> float:
    """Marginal TV of ``n_replicas`` draws from ``target.sample``; of order sqrt(bins / n) / 2.

    For a burn-in sampler the floor also absorbs its residual bias.
    """
    samples = target.sample(stream(seed, "noise_floor"), n_replicas)
    return tv_marginal(samples, target, coordinate, bins, span)


@dataclasses.dataclass(frozen=True)
class TVCurve:
    iterations: np.ndarray
    tv: np.ndarray
    """Marginal TV at each recorded iteration."""
    coordinate: int
    bins: int
    n_replicas: int
    noise_floor: float


def iteration_grid(n_max: int, points: int = 40) -> np.ndarray:
    """0 followed by roughly log-spaced iterations up to ``n_max``."""
    if n_max < 1:
        raise InvalidInputError(f"n_max must be >= 1, got {n_max}", "n_max")
    grid = np.unique(np.round(np.geomspace(1, n_max, points)).astype(np.int64))
    return np.concatenate(([0], grid))


def _replica_batch(target, warm, policy, grid, coordinate, seed, index, size):
    q0 = warm.sample(stream(seed, "warm", index), size)
    state = ChainState(q=q0, rng=stream(seed, "replicas", index))
    out = np.empty((grid.size, size))
    record = 0
    if grid[0] == 0:
        out[0] = q0[:, coordinate]
        record = 1
    for k in range(1, int(grid[-1]) + 1):
        state = mala_step(target, state, policy)
        if k == grid[record]:
            out[record] = state.q[:, coordinate]
            record += 1
    return out


@dataclasses.dataclass(frozen=True)
class MixingMeasurement:
    curve: TVCurve
    tau_hat: Optional[int]
    """First grid iteration with marginal TV <= eps + noise floor; None if never."""
    eps: float
    eta: float

    @property
    def reached(self) -> bool:
        return self.tau_hat is not None


def mixing_time_measure(
    target: TargetDensity,
    warm: InitialSampler,
    policy: StepSizePolicy,
    eps: float,
    n_replicas: int,
    n_max: int,
    seed: int,
    coordinate: Optional[int] = None,
    grid_points: int = 40,
    workers: int = 1,
    logger: Optional[Logger] = None,
) -> MixingMeasurement:
    """Run ``n_replicas`` lazy MALA chains from ``warm`` and track marginal TV.

    The tracked marginal defaults to :func:`slowest_coordinate`.
    """
    if n_replicas < MIN_REPLICAS:
        raise InvalidInputError(
            f"need at least {MIN_REPLICAS} replicas, got {n_replicas}", "n_replicas"
        )
    if not 0.0 < eps < 1.0:
        raise InvalidInputError(f"eps must lie in (0, 1), got {eps}", "eps")
    logger = logger or get_default_logger()
    grid = iteration_grid(n_max, grid_points)
    if coordinate is None:
        coordinate = slowest_coordinate(target)
    floor = noise_floor(target, n_replicas, seed, coordinate)

    fn = functools.partial(_replica_batch, target, warm, policy, grid, coordinate, seed)
    paths = np.concatenate(
        map_batches(fn, batch_sizes(n_replicas, REPLICA_BATCH), workers), axis=1
    )
    tv = np.array([tv_marginal(row, target, coordinate) for row in paths])
    hit = np.flatnonzero(tv <= eps + floor)
    tau = int(grid[hit[0]]) if hit.size else None
    logger.debug(
        "mixing on %s: eta=%.6g eps=%g floor=%.4f tau_hat=%s",
        target.name,
        policy.eta,
        eps,
        floor,
        tau,
    )
    return MixingMeasurement(
        curve=TVCurve(
            iterations=grid,
            tv=tv,
            coordinate=coordinate,
            bins=TV_BINS,
            n_replicas=n_replicas,
            noise_floor=floor,
        ),
        tau_hat=tau,
        eps=eps,
        eta=policy.eta,
    )


# --- Dimension scaling ----------------------------------------------------------


class ScalingRow(BaseModel):
    dim: int
    eta: float
    tau_hat: Optional[int]
    tau_bracket: Tuple[int, int]
    """Grid iterations (previous, tau_hat] that bracket the crossing."""
    predicted_n: float
    predicted_n_kappa: float
    noise_floor: float


class ScalingReport(BaseModel):
    rows: List[ScalingRow]
    slope: float
    """Least-squares slope of log tau_hat on log d over resolved dims."""
    slope_stderr: float
    slope_ci: Tuple[float, float]
    predicted_exponent: float
    predicted_exponent_kappa: float
    coordinate: int
    """Index of the tracked marginal, the same for every dim."""

    @property
    def reached_dims(self) -> List[int]:
        return [r.dim for r in self.rows if r.tau_hat is not None]

    @property
    def resolved_dims(self) -> List[int]:
        """Dims whose start was not already within eps, so tau_hat carries information."""
        return [r.dim for r in self.rows if _resolved(r)]

    @property
    def slope_supported(self) -> bool:
        return len(self.resolved_dims) >= MIN_RESOLVED_DIMS and not math.isnan(self.slope)


def _resolved(row: ScalingRow) -> bool:
    return row.tau_hat is not None and row.tau_hat > 0


def _fit_slope(dims: Sequence[float], taus: Sequence[float]) -> Tuple[float, float]:
    if len(dims) < 2:
        return math.nan, math.nan
    fit = stats.linregress(np.log(dims), np.log(taus))
    return float(fit.slope), float(fit.stderr)


def _slope_interval(
    rows: Sequence[ScalingRow], seed: int, confidence: float = 0.95
) -> Tuple[float, float]:
    """Percentile interval of the slope when each tau_hat is redrawn log-uniformly
    inside its grid bracket."""
    resolved = [r for r in rows if _resolved(r)]
    if len(resolved) < 2:
        return math.nan, math.nan
    rng = stream(seed, "slope_ci")
    x = np.log([r.dim for r in resolved])
    lo = np.log([max(r.tau_bracket[0], 1) for r in resolved])
    hi = np.log([r.tau_bracket[1] for r in resolved])
    draws = lo + (hi - lo) * rng.random((_SLOPE_RESAMPLES, len(resolved)))
    xc = x - x.mean()
    slopes = (draws - draws.mean(axis=1, keepdims=True)) @ xc / (xc @ xc)
    alpha = 0.5 * (1.0 - confidence)
    return float(np.quantile(slopes, alpha)), float(np.quantile(slopes, 1.0 - alpha))


def scaling_experiment(
    dims: Sequence[int],
    eps: float,
    M_target: float,
    n_replicas: int,
    seed: int,
    n_max: int = 100_000,
    L: float = 1.0,
    grid_points: int = 40,
    workers: int = 1,
    logger: Optional[Logger] = None,
) -> ScalingReport:
    """Measure tau_hat on the anisotropic family under the trace-based step size.

    Each dim starts exactly M_target-warm in its widest coordinate, which is
    also the one tracked. A dim whose start already sits within eps has
    tau_hat = 0 and is left out of the fit. The predicted counts use c1 = 1 and
    are meaningful only up to a universal constant; their log-log slopes are the
    exponents to compare against.
    """
    bad = sorted(set(dims) - set(SCALING_DIMS))
    if bad or not dims:
        raise InvalidInputError(f"dims must be drawn from {SCALING_DIMS}, got {list(dims)}", "dims")
    logger = logger or get_default_logger()
    rows = []
    coordinate = 0
    for d in sorted(dims):
        target = make_anisotropic(d, L)
        coordinate = slowest_coordinate(target)
        policy = theorem1_policy(target.profile, M_target, eps)
        naive = kappa_policy(target.profile, d, M_target, eps)
        result = mixing_time_measure(
            target,
            gaussian_warm_start(target, M_target, coordinate),
            policy,
            eps,
            n_replicas,
            n_max,
            seed=child_seed(seed, "dim", d),
            coordinate=coordinate,
            grid_points=grid_points,
            workers=workers,
            logger=logger,
        )
        grid = result.curve.iterations
        if result.tau_hat is None:
            logger.warning("d=%d: marginal TV never reached eps=%g within %d steps", d, eps, n_max)
            bracket = (int(grid[-1]), int(grid[-1]))
        elif result.tau_hat == 0:
            logger.warning("d=%d: the warm start is already within eps=%g; unresolved", d, eps)
            bracket = (0, 0)
        else:
            pos = int(np.searchsorted(grid, result.tau_hat))
            bracket = (int(grid[max(pos - 1, 0)]), int(result.tau_hat))
        rows.append(
            ScalingRow(
                dim=d,
                eta=policy.eta,
                tau_hat=result.tau_hat,
                tau_bracket=bracket,
                predicted_n=policy.predicted_iterations(),
                predicted_n_kappa=naive.predicted_iterations(),
                noise_floor=result.curve.noise_floor,
            )
        )

    resolved = [r for r in rows if _resolved(r)]
    if len(resolved) < MIN_RESOLVED_DIMS:
        logger.warning(
            "only %d of %d dims resolved a mixing time; the slope is not supported",
            len(resolved),
            len(rows),
        )
    slope, stderr = _fit_slope([r.dim for r in resolved], [r.tau_hat for r in resolved])
    pred, _ = _fit_slope([r.dim for r in rows], [r.predicted_n for r in rows])
    pred_kappa, _ = _fit_slope([r.dim for r in rows], [r.predicted_n_kappa for r in rows])
    return ScalingReport(
        rows=rows,
        slope=slope,
        slope_stderr=stderr,
        slope_ci=_slope_interval(rows, seed),
        predicted_exponent=pred,
        predicted_exponent_kappa=pred_kappa,
        coordinate=coordinate,
    )
