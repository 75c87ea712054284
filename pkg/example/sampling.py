"""
Library Examples
Demonstrates running lazy MALA and the bound checks from Python.
"""
import math

import numpy as np

from malalab import make_anisotropic, make_gaussian, manual_policy, run_chain, theorem1_policy
from malalab.mixing import discretize_1d, lovasz_bound_check, s_conductance_exact
from malalab.theory import acceptance_tail, moment_grad_norm


def trace_aware_step():
    """Example 1: Step size from the trace rule vs the condition-number rule"""
    print("\n" + "="*60)
    print("Example 1: Step sizes on the anisotropic family")
    print("="*60)

    for d in (2, 8, 32):
        target = make_anisotropic(d)
        policy = theorem1_policy(target.profile, M=math.e, eps=0.1)
        print(f"d={d:3d}  eta={policy.eta:.5f}  predicted n={policy.predicted_iterations():.1f}")


def sample_chain():
    """Example 2: Run 100 lazy chains from the origin"""
    print("\n" + "="*60)
    print("Example 2: Sampling")
    print("="*60)

    target = make_gaussian(3)
    traj = run_chain(target, np.zeros(3), manual_policy(0.5), 2000, rng_seed=42, n_chains=100)
    final = traj.positions[-1]
    print(f"Acceptance rate: {traj.stats.acceptance_rate:.4f}")
    print(f"Held fraction: {traj.stats.held_fraction:.4f}")
    print(f"Final variance per coordinate: {final.var(axis=0)}")


def check_lemmas():
    """Example 3: One moment bound and the acceptance tail"""
    print("\n" + "="*60)
    print("Example 3: Bound checks")
    print("="*60)

    target = make_gaussian(2)
    report = moment_grad_norm(target, ell=2, n_samples=20_000, seed=1)
    print(f"grad_norm ell=2: estimate={report.estimate:.4f} bound={report.bound} passed={report.passed}")

    tail = acceptance_tail(target, delta=0.05, n_samples=20_000, seed=1)
    print(f"P(Delta > 1/4) = {tail.exceedance:.5f} at eta={tail.eta:.4f}: passed={tail.passed}")


def finite_chain():
    """Example 4: s-conductance and the warm-start bound on a 12-state chain"""
    print("\n" + "="*60)
    print("Example 4: Finite chain")
    print("="*60)

    chain = discretize_1d(make_gaussian(1), -6.0, 6.0, 12, manual_policy(0.5))
    print(f"Phi_0.05 = {s_conductance_exact(chain, 0.05):.5f}")

    point = np.zeros(chain.k)
    point[int(np.argmax(chain.pi))] = 1.0
    check = lovasz_bound_check(chain, point, s=0.01, n_max=200)
    print(f"M={check.M:.3f}  bound holds for all n <= 200: {check.all_passed}")
    print(f"TV <= 0.1 after {check.tau(0.1)} steps")


if __name__ == "__main__":
    trace_aware_step()
    sample_chain()
    check_lemmas()
    finite_chain()
