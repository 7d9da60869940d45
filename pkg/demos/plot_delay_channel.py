"""
Observations arriving late and out of order
===========================================

Each observation is stamped with the step that produced it and lands a
geometric number of steps later. Late packets can be overtaken.
"""

import numpy as np

from emql.channel import Channel, DelayModel, sample_delay

ch = Channel(DelayModel.geometric(2 / 3), np.random.default_rng(1))
for t in range(1, 16):
    ch.send(t, state=t, reward=0.0, done=False, now=t)
    landed = ch.poll(t)
    if landed:
        print(f"step {t:2d}: received {[o.timestamp for o in landed]}")
print("flushed at episode end:", [o.timestamp for o in ch.flush()])

# The delay distribution has support k >= 1 and mean 1 / (1 - p).
rng = np.random.default_rng(0)
for p in (0.0, 0.5, 2 / 3, 0.9):
    model = DelayModel.geometric(p)
    draws = [sample_delay(model, rng) for _ in range(20_000)]
    print(f"p={p:.2f}  empirical mean {np.mean(draws):.3f}  expected {model.mean:.3f}")
