"""
Where is the agent now?
=======================

The agent last saw itself at the start cell of the 8x8 lake, then played
four actions blind. Pushing a one-hot vector through the transition matrix
of each action gives the probability of every cell it might be on.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from emql.belief import emql_action_values, most_likely_state, propagate_log
from emql.envs import DOWN, RIGHT, FrozenLake

env = FrozenLake()
p = env.transition_table()

# Four blind moves on slippery ice.
log = [RIGHT, RIGHT, DOWN, DOWN]
beliefs = [propagate_log(0, log[:k], p, env.num_states).probs for k in range(len(log) + 1)]
for k, b in enumerate(beliefs):
    print(f"after {k} actions: mass {b.sum():.3f}, most likely cell {int(np.argmax(b))}, p={b.max():.3f}")

# The belief spreads out with every step.
fig, axes = plt.subplots(1, len(beliefs), figsize=(12, 3))
for k, (ax, b) in enumerate(zip(axes, beliefs)):
    ax.imshow(b.reshape(8, 8), cmap="Blues", vmin=0, vmax=1)
    ax.set_title(f"{k} blind steps")
    ax.set_xticks([])
    ax.set_yticks([])
fig.tight_layout()
fig.savefig("belief_spread.png", dpi=80)

# Acting on the expectation versus on the single most likely cell.
q = np.random.default_rng(0).random((env.num_states, 4))
print("belief-weighted action values:", np.round(emql_action_values(0, log, p, q), 3))
print("most likely cell:", most_likely_state(0, log, p, env.num_states))
