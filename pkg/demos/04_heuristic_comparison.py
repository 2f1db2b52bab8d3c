"""Compare the five attachment heuristics on a shared set of episodes.

The full experiment (500 episodes per heuristic) is what the acceptance
suite runs; this demo uses 60 episodes to show the same ordering quickly:
peripheral attachment out-earns hub attachment.

Run:  python demos/04_heuristic_comparison.py
"""

import numpy as np

from pcnsim import EnvConfig, HEURISTIC_KINDS, SampleConfig, synthetic_snapshot
from pcnsim.cli import evaluate_heuristic

snapshot = synthetic_snapshot(2000, seed=1)
config = EnvConfig(sample=SampleConfig(target_size=50, seed=0))
episode_seeds = list(range(1000, 1060))

print(f"{len(episode_seeds)} shared episodes per heuristic, "
      f"50-node samples, 5 channels, budget {config.budget_msat} msat\n")

results = {}
for kind in HEURISTIC_KINDS:
    rewards = np.asarray(evaluate_heuristic(snapshot, config, kind,
                                            episode_seeds, jobs=2))
    results[kind] = rewards
    print(f"{kind:22s} mean={rewards.mean():.4f}  std={rewards.std(ddof=1):.4f}")

print("\nranking (best first):")
for rank, kind in enumerate(sorted(results, key=lambda k: -results[k].mean()), 1):
    print(f"  {rank}. {kind}")
print("\nconnecting to the least-connected nodes supplies fresh inbound "
      "liquidity to starved corners of the graph, which is where forwarding "
      "fees are earned; paralleling well-funded hubs earns almost nothing.")
