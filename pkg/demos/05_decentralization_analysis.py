"""Evolve a network with revenue-seeking agents and measure decentralization.

Each episode localizes the base snapshot, plays an attachment policy to the
end, and merges the agent's final channels back into the global graph as a
brand-new node.  Centrality distributions are then compared through entropy
and inequality metrics on a shared binning, plus Louvain modularity.

Run:  python demos/05_decentralization_analysis.py
"""

from pcnsim import (EnvConfig, SampleConfig, evolve_network, louvain_modularity,
                    synthetic_snapshot)

base = synthetic_snapshot(500, seed=7)
config = EnvConfig(sample=SampleConfig(target_size=50, seed=0),
                   episode_length=5)

parts, q = louvain_modularity(base, seed=0)
print(f"base graph: {base.n_nodes} nodes, {base.n_channels} channels, "
      f"{len(set(parts))} communities, modularity {q:.4f}")

report = evolve_network(base, "bottom-k-degree", episodes=50, cfg=config,
                        seed=3)
print(f"\nevolved with 50 episodes of bottom-k-degree agents: "
      f"+{report.episodes} nodes, +{report.channels_added} channels")
print(f"modularity {report.modularity_base:.4f} -> "
      f"{report.modularity_evolved:.4f} "
      f"(drop means the new channels bridge communities)\n")

print(f"{'centrality':<14} {'shannon':>9} {'renyi':>9} {'gini':>9}")
for name, deltas in report.deltas.items():
    print(f"{name:<14} {deltas['shannon']:>+9.4f} {deltas['renyi']:>+9.4f} "
          f"{deltas['gini']:>+9.4f}")
print("\npositive entropy deltas and negative Gini deltas both read as "
      "'more decentralized'; degree spreads out and inequality drops when "
      "agents attach at the periphery.")

hist = report.histograms["degree"]
peak = max(range(len(hist["base_counts"])), key=hist["base_counts"].__getitem__)
print(f"\nhistogram tables are included for plotting; e.g. the degree "
      f"histogram has {len(hist['base_counts'])} bins with its base-graph "
      f"peak in bin {peak}.")
