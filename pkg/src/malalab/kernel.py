"""Lazy MALA as Metropolized HMC with a single leapfrog step.

One step from ``q0`` draws ``p0 ~ N(0, I)``, proposes

    q_eta = q0 + eta p0 - (eta^2 / 2) grad f(q0)
    p_eta = p0 - (eta / 2) grad f(q0) - (eta / 2) grad f(q_eta)

and accepts with probability ``min{1, exp(-Delta_eta)}`` where
``Delta_eta = H(q_eta, p_eta) - H(q0, p0)`` and ``H(q, p) = f(q) + |p|^2 / 2``.
The proposal for ``q`` alone is ``N(q0 - h grad f(q0), 2h I)`` with ``h = eta^2 / 2``.

Random numbers: each chain batch owns one Philox stream keyed by
``(seed, "chain", chain_id)``. Every step consumes the same number of variates
(lazy coin, momentum, uniform) whatever the outcome, so step ``k`` always reads
the same counter range.
"""

import dataclasses
import math
from typing import Optional, Protocol, Union, runtime_checkable

import numpy as np

from malalab.errors import InvalidInputError, NumericError, PolicyUnavailableError
from malalab.targets import SmoothnessProfile, TargetDensity
from malalab.types import BaseModel
from malalab.utils.logger import Logger, get_default_logger
from malalab.utils.streams import stream

ACCEPTANCE_DELTA = 0.05
"""Failure probability the default c0 is calibrated against."""

DEFAULT_C0 = 1.0 / (128.0 * math.sqrt(math.log(1.0 / ACCEPTANCE_DELTA)))
"""With h = c0 / max{...}, eta^4 max{L^2 log(1/delta), L Upsilon} <= 1/4096 for
delta = 0.05 whenever the Hessian is PSD (then L Upsilon >= L^2)."""


# --- Phase space --------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class PhasePoint:
    """Position/momentum pair; arrays of shape ``(d,)`` or ``(n, d)``."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self) -> None:
        q = np.asarray(self.q, dtype=np.float64)
        p = np.asarray(self.p, dtype=np.float64)
        if q.shape != p.shape or q.ndim == 0:
            raise InvalidInputError(
                f"q and p must have equal shape, got {q.shape} and {p.shape}", "phase"
            )
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def dim(self) -> int:
        return int(self.q.shape[-1])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.p)))

    def flipped(self) -> "PhasePoint":
        return PhasePoint(self.q, -self.p)


def hamiltonian(target: TargetDensity, q: np.ndarray, p: np.ndarray) -> np.ndarray:
    return target.potential(q) + 0.5 * np.sum(p * p, axis=-1)


def _leapfrog(target: TargetDensity, q0: np.ndarray, p0: np.ndarray, eta: float):
    grad0 = target.gradient(q0)
    q_eta = q0 + eta * p0 - 0.5 * eta * eta * grad0
    grad_eta = target.gradient(q_eta)
    p_eta = p0 - 0.5 * eta * grad0 - 0.5 * eta * grad_eta
    return q_eta, p_eta, grad0, grad_eta


def _check_eta(eta: float) -> None:
    if not (eta > 0.0 and math.isfinite(eta)):
        raise InvalidInputError(f"step size must be positive and finite, got {eta}", "eta")


def leapfrog(target: TargetDensity, start: PhasePoint, eta: float) -> PhasePoint:
    """One leapfrog step; exactly two gradient evaluations."""
    _check_eta(eta)
    q_eta, p_eta, grad0, grad_eta = _leapfrog(target, start.q, start.p, eta)
    if not np.all(np.isfinite(grad0)):
        raise NumericError(f"non-finite gradient at q={start.q.tolist()}")
    if not np.all(np.isfinite(grad_eta)):
        raise NumericError(f"non-finite gradient at q={q_eta.tolist()}")
    return PhasePoint(q_eta, p_eta)


def energy_difference(target: TargetDensity, start: PhasePoint, eta: float) -> np.ndarray:
    """Delta_eta = f(q_eta) - f(q0) + |p_eta|^2/2 - |p0|^2/2, from the definition."""
    end = leapfrog(target, start, eta)
    return (
        target.potential(end.q)
        - target.potential(start.q)
        + 0.5 * np.sum(end.p * end.p, axis=-1)
        - 0.5 * np.sum(start.p * start.p, axis=-1)
    )


def acceptance_probability(target: TargetDensity, start: PhasePoint, eta: float) -> np.ndarray:
    """min{1, exp(-H(q_eta, p_eta)) / exp(-H(q0, p0))}, evaluated literally."""
    end = leapfrog(target, start, eta)
    ratio = np.exp(-hamiltonian(target, end.q, end.p)) / np.exp(
        -hamiltonian(target, start.q, start.p)
    )
    return np.minimum(1.0, ratio)


def acceptance_from_delta(delta: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.minimum(1.0, np.exp(-np.asarray(delta)))


def leapfrog_jacobian_det(
    target: TargetDensity, start: PhasePoint, eta: float, step: float = 1e-6
) -> float:
    """Determinant of the central-difference Jacobian of (q0, p0) -> (q_eta, p_eta)."""
    d = start.dim
    z0 = np.concatenate([start.q, start.p])
    jac = np.empty((2 * d, 2 * d))
    for j in range(2 * d):
        e = np.zeros(2 * d)
        e[j] = step
        plus = leapfrog(target, PhasePoint((z0 + e)[:d], (z0 + e)[d:]), eta)
        minus = leapfrog(target, PhasePoint((z0 - e)[:d], (z0 - e)[d:]), eta)
        jac[:, j] = (np.concatenate([plus.q, plus.p]) - np.concatenate([minus.q, minus.p])) / (2 * step)
    return float(np.linalg.det(jac))


# --- Proposal and transition densities ------------------------------------------


def proposal_mean(target: TargetDensity, x: np.ndarray, eta: float) -> np.ndarray:
    return x - 0.5 * eta * eta * target.gradient(x)


def proposal_log_density(
    target: TargetDensity, x: np.ndarray, y: np.ndarray, eta: float
) -> np.ndarray:
    """log N(y; x - h grad f(x), 2h I)."""
    h = 0.5 * eta * eta
    diff = y - proposal_mean(target, x, eta)
    d = diff.shape[-1]
    return -np.sum(diff * diff, axis=-1) / (4.0 * h) - 0.5 * d * np.log(4.0 * np.pi * h)


def momentum_for(target: TargetDensity, x: np.ndarray, y: np.ndarray, eta: float) -> np.ndarray:
    """The p0 for which the leapfrog step from x lands on y."""
    return (y - proposal_mean(target, x, eta)) / eta


def transition_log_density(
    target: TargetDensity, x: np.ndarray, y: np.ndarray, eta: float
) -> np.ndarray:
    """log of (proposal density x -> y) * (acceptance), for y != x.

    The acceptance is computed in leapfrog form from the momentum that connects
    x to y.
    """
    delta = energy_difference(target, PhasePoint(x, momentum_for(target, x, y, eta)), eta)
    return proposal_log_density(target, x, y, eta) + np.minimum(0.0, -delta)


# --- Step-size policies -------------------------------------------------------


class Theorem1Inputs(BaseModel):
    L: float
    upsilon: float
    psi: float
    M: float
    eps: float
    c0: float


class StepSizePolicy(BaseModel):
    eta: float
    provenance: str
    """``"manual"``, ``"theorem1(...)"`` or ``"kappa(...)"``."""
    inputs: Optional[Theorem1Inputs] = None
    denominator: Optional[float] = None
    """max{(L U)^(1/2), L log((L U)^(1/4) M / (psi eps))} for the rule's U."""

    @property
    def h(self) -> float:
        return 0.5 * self.eta * self.eta

    def predicted_iterations(self, c1: float = 1.0) -> float:
        """Iteration bound c1 max{...} / psi^2 log(M/eps), up to a universal constant."""
        if self.inputs is None or self.denominator is None:
            raise PolicyUnavailableError("manual step sizes carry no iteration bound")
        i = self.inputs
        return c1 * self.denominator / (i.psi * i.psi) * math.log(i.M / i.eps)


def manual_policy(eta: float) -> StepSizePolicy:
    _check_eta(eta)
    return StepSizePolicy(eta=float(eta), provenance="manual")


def _rule_denominator(L: float, trace: float, psi: float, M: float, eps: float) -> float:
    lt = L * trace
    return max(math.sqrt(lt), L * math.log(lt**0.25 / psi * M / eps))


def _check_rule_inputs(profile: SmoothnessProfile, M: float, eps: float, c0: float) -> float:
    if profile.psi is None:
        raise PolicyUnavailableError()
    if not M >= 1.0:
        raise InvalidInputError(f"warmness must be >= 1, got {M}", "M")
    if not 0.0 < eps < 1.0:
        raise InvalidInputError(f"eps must lie in (0, 1), got {eps}", "eps")
    if not c0 > 0.0:
        raise InvalidInputError(f"c0 must be positive, got {c0}", "c0")
    return profile.psi


def theorem1_policy(
    profile: SmoothnessProfile, M: float, eps: float, c0: float = DEFAULT_C0
) -> StepSizePolicy:
    """h = eta^2/2 = c0 / max{(L U)^(1/2), L log((L U)^(1/4) M / (psi eps))}."""
    psi = _check_rule_inputs(profile, M, eps, c0)
    denom = _rule_denominator(profile.L, profile.upsilon, psi, M, eps)
    return StepSizePolicy(
        eta=math.sqrt(2.0 * c0 / denom),
        provenance=(
            f"theorem1(L={profile.L:g}, upsilon={profile.upsilon:g}, psi={psi:g}, "
            f"M={M:g}, eps={eps:g}, c0={c0:g})"
        ),
        inputs=Theorem1Inputs(L=profile.L, upsilon=profile.upsilon, psi=psi, M=M, eps=eps, c0=c0),
        denominator=denom,
    )


def kappa_policy(
    profile: SmoothnessProfile, dim: int, M: float, eps: float, c0: float = DEFAULT_C0
) -> StepSizePolicy:
    """The same rule with the trace bound replaced by L d.

    This is the condition-number step size; on the stiff anisotropic family it
    predicts d^(3/2) iterations where the trace rule predicts d.
    """
    psi = _check_rule_inputs(profile, M, eps, c0)
    trace = profile.L * dim
    denom = _rule_denominator(profile.L, trace, psi, M, eps)
    return StepSizePolicy(
        eta=math.sqrt(2.0 * c0 / denom),
        provenance=f"kappa(L={profile.L:g}, d={dim}, psi={psi:g}, M={M:g}, eps={eps:g}, c0={c0:g})",
        inputs=Theorem1Inputs(L=profile.L, upsilon=trace, psi=psi, M=M, eps=eps, c0=c0),
        denominator=denom,
    )


# --- Chains -------------------------------------------------------------------


class AcceptanceStats(BaseModel):
    accepted: int = 0
    rejected: int = 0
    held: int = 0

    @property
    def proposals(self) -> int:
        return self.accepted + self.rejected

    @property
    def total(self) -> int:
        return self.accepted + self.rejected + self.held

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else float("nan")

    @property
    def held_fraction(self) -> float:
        return self.held / self.total if self.total else float("nan")

    def __add__(self, other: "AcceptanceStats") -> "AcceptanceStats":
        return AcceptanceStats(
            accepted=self.accepted + other.accepted,
            rejected=self.rejected + other.rejected,
            held=self.held + other.held,
        )


@dataclasses.dataclass(frozen=True)
class ChainState:
    """Positions of ``n_chains`` chains advanced in lockstep.

    accepted + rejected + held == iteration * n_chains.
    """

    q: np.ndarray
    rng: np.random.Generator
    iteration: int = 0
    stats: AcceptanceStats = dataclasses.field(default_factory=AcceptanceStats)
    moved: Optional[np.ndarray] = None
    """Chains whose last step accepted a move."""

    @property
    def n_chains(self) -> int:
        return int(self.q.shape[0])


def mala_step(
    target: TargetDensity, state: ChainState, policy: StepSizePolicy, lazy: bool = True
) -> ChainState:
    """Advance every chain by one (lazy) MALA step.

    Held chains still count an iteration. Proposals with a non-finite energy
    difference are rejected.
    """
    n, d = state.q.shape
    rng = state.rng
    coins = rng.random(n)
    p0 = rng.standard_normal((n, d))
    log_u = np.log(rng.random(n))

    hold = coins < 0.5 if lazy else np.zeros(n, dtype=bool)
    active = ~hold
    moved = np.zeros(n, dtype=bool)
    q_next = state.q.copy()
    if np.any(active):
        q0 = state.q[active]
        with np.errstate(all="ignore"):
            q_eta, p_eta, _, _ = _leapfrog(target, q0, p0[active], policy.eta)
            delta = hamiltonian(target, q_eta, p_eta) - hamiltonian(target, q0, p0[active])
        delta = np.where(np.isfinite(delta), delta, np.inf)
        accept = log_u[active] < -delta
        moved[active] = accept
        q_next[moved] = q_eta[accept]

    n_accept = int(moved.sum())
    n_held = int(hold.sum())
    stats = state.stats + AcceptanceStats(
        accepted=n_accept, rejected=n - n_held - n_accept, held=n_held
    )
    return ChainState(
        q=q_next, rng=rng, iteration=state.iteration + 1, stats=stats, moved=moved
    )


@runtime_checkable
class InitialSampler(Protocol):
    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray: ...


Init = Union[np.ndarray, InitialSampler]


@dataclasses.dataclass(frozen=True)
class Trajectory:
    steps: np.ndarray
    """Recorded step indices, starting with 0 (the initial state)."""
    positions: np.ndarray
    """Shape (n_records, n_chains, d)."""
    moved: np.ndarray
    """Shape (n_records, n_chains): whether the recorded step accepted a move."""
    stats: AcceptanceStats
    final: ChainState

    def chain(self, index: int = 0) -> np.ndarray:
        return self.positions[:, index, :]


def initial_positions(
    target: TargetDensity, init: Init, rng: np.random.Generator, n_chains: int
) -> np.ndarray:
    if isinstance(init, InitialSampler):
        q = np.asarray(init.sample(rng, n_chains), dtype=np.float64)
    else:
        q = np.array(init, dtype=np.float64)
        q = np.broadcast_to(q, (n_chains, target.dim)).copy() if q.ndim == 1 else q
    if q.shape != (n_chains, target.dim):
        raise InvalidInputError(
            f"initial positions must have shape {(n_chains, target.dim)}, got {q.shape}", "init"
        )
    if not np.all(np.isfinite(q)):
        raise InvalidInputError("initial positions must be finite", "init")
    return q


def run_chain(
    target: TargetDensity,
    init: Init,
    policy: StepSizePolicy,
    n_steps: int,
    rng_seed: int,
    thinning: int = 1,
    lazy: bool = True,
    n_chains: int = 1,
    chain_id: int = 0,
    logger: Optional[Logger] = None,
) -> Trajectory:
    """Run ``n_chains`` chains for ``n_steps`` steps; deterministic in the seed."""
    if n_steps < 1:
        raise InvalidInputError(f"need at least one step, got {n_steps}", "n_steps")
    if thinning < 1:
        raise InvalidInputError(f"thinning must be >= 1, got {thinning}", "thinning")
    logger = logger or get_default_logger()
    rng = stream(rng_seed, "chain", chain_id)
    q0 = initial_positions(target, init, stream(rng_seed, "init", chain_id), n_chains)
    state = ChainState(q=q0, rng=rng)

    n_records = n_steps // thinning + 1
    steps = np.zeros(n_records, dtype=np.int64)
    positions = np.empty((n_records, n_chains, target.dim))
    moved = np.zeros((n_records, n_chains), dtype=bool)
    positions[0] = q0
    record = 1
    for k in range(1, n_steps + 1):
        state = mala_step(target, state, policy, lazy)
        if k % thinning == 0:
            steps[record] = k
            positions[record] = state.q
            moved[record] = state.moved
            record += 1
    logger.debug(
        "chain %d on %s: %d steps, eta=%.6g, acceptance=%.4f, held=%.4f",
        chain_id,
        target.name,
        n_steps,
        policy.eta,
        state.stats.acceptance_rate,
        state.stats.held_fraction,
    )
    return Trajectory(
        steps=steps, positions=positions, moved=moved, stats=state.stats, final=state
    )


# --- Approximate stationary draws ------------------------------------------------

DEFAULT_BURN_IN = 2_000


class _StandardNormalStart:
    def __init__(self, dim: int):
        self.dim = dim

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.standard_normal((n, self.dim))


class BurnInTarget(TargetDensity):
    """``base`` with ``sample`` replaced by the endpoints of long lazy MALA runs.

    Each call seeds ``n`` independent chains from ``N(0, I)`` and returns their
    positions after ``n_steps`` steps at the fixed step size ``eta``. The draws
    only approximate mu, so reports built from them are flagged approximate.
    """

    approximate = True

    def __init__(self, base: TargetDensity, eta: float, n_steps: int = DEFAULT_BURN_IN):
        _check_eta(eta)
        if n_steps < 1:
            raise InvalidInputError(f"burn-in needs at least one step, got {n_steps}", "n_steps")
        self.base = base
        self.policy = manual_policy(eta)
        self.n_steps = int(n_steps)
        self.dim = base.dim
        self.profile = base.profile
        self.name = f"{base.name}~burn-in(eta={eta:g},n={self.n_steps})"

    def potential(self, q: np.ndarray) -> np.ndarray:
        return self.base.potential(q)

    def gradient(self, q: np.ndarray) -> np.ndarray:
        return self.base.gradient(q)

    def hvp(self, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.base.hvp(q, v)

    @property
    def has_sampler(self) -> bool:
        return True

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        seed = int(rng.integers(0, 2**63))
        traj = run_chain(
            self.base,
            _StandardNormalStart(self.dim),
            self.policy,
            self.n_steps,
            seed,
            thinning=self.n_steps,
            n_chains=n,
        )
        q = traj.positions[-1]
        if not np.all(np.isfinite(q)):
            raise NumericError(f"burn-in on {self.base.name} left the finite reals")
        return q

    def marginal_cdf(self, coordinate: int, x: np.ndarray) -> np.ndarray:
        return self.base.marginal_cdf(coordinate, x)

    def marginal_std(self, coordinate: int) -> float:
        return self.base.marginal_std(coordinate)


def burn_in_target(
    target: TargetDensity, eta: float, n_steps: int = DEFAULT_BURN_IN
) -> TargetDensity:
    """Give ``target`` a sampler: exact targets come back unchanged."""
    if target.has_exact_sampler:
        return target
    return BurnInTarget(target, eta, n_steps)
