"""
Checking the exact identities on small random MDPs
==================================================

For tiny models the augmented MDP can be built explicitly, so the claims
about it can be checked numerically from the true model.
"""

import numpy as np

from emql import analysis
from emql.mdp import random_mdp

rng = np.random.default_rng(0)
m = random_mdp(rng, 4, 3, gamma=0.9)

# The augmented state is (last known state, d actions since).
am = analysis.build_augmented(m, d=2)
print("augmented states:", am.spec.num_states)

# Its reward, from the recursion, versus brute-force path enumeration.
err = np.abs(am.reward - analysis.enumerated_augmented_reward(m, 2)).max()
print(f"augmented reward, two computations: max difference {err:.1e}")

# Value of each oracle policy, averaged over augmented states.
q_star, v_star = analysis.optimal_values(m)
_, v_aug = analysis.optimal_values(am.as_true_mdp())
print(f"optimal augmented value {v_aug.mean():.4f}")
for kind in analysis.ORACLE_POLICIES:
    pol = analysis.oracle_policy(am, q_star, kind)
    v = analysis.evaluate_policy_on_augmented(am, pol)
    print(f"{kind:10s} {v.mean():.4f}")

# Lower bound on the belief-weighted policy, state by state.
rep = analysis.check_theorem1(m, 2)
print(f"bound term {rep.bound_term:.2f}, worst slack {rep.worst_slack:.3f}, violations {rep.violations}")

# The randomised suites in miniature.
for name, suite in analysis.SUITES.items():
    rows = suite(n=25)
    print(f"{name:9s} {sum(r['ok'] for r in rows)}/{len(rows)} instances ok")
