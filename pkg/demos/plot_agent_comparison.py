"""
Four agents on a delayed frozen lake
====================================

Matched-seed runs of the belief-weighted learner, the most-likely-state
and memoryless baselines, and a learner on the augmented state space,
with every observation arriving four steps late. Small run sizes keep
this quick; raise them for smoother curves.
"""

from emql.channel import DelayModel
from emql.harness import ExperimentConfig, compare, emit_comparison

cfg = ExperimentConfig(
    env="frozen_lake",
    delay=DelayModel.constant(4),
    episodes=400,
    iterations=4,
    window=50,
    out_dir="demo_results",
)
results = compare(cfg, ["emql", "mbs", "dq", "emdp"])
for kind, res in results.items():
    print(f"{kind:5s} final moving average per iteration: {res.final_moving.round(2)}")

paths = emit_comparison(results, cfg.out_dir)
print("plot written to", paths["plot"])
