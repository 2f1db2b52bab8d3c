"""Forest-fire localization: connected induced subgraphs of a big snapshot.

The burn starts at a uniformly drawn ignition node and spreads breadth-first;
every not-yet-sampled neighbor of the current node catches fire independently
with probability ``p_forward``.  The burn stops the instant the target size
is reached, and a died-out fire re-ignites from an already-sampled node (up
to ``max_restarts`` times).  The sample is the node-induced subgraph, so
every channel between two sampled nodes is kept with its live balances and
fee policies.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from random import Random
from typing import Iterator

from .graph import ChannelGraph


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class SampleConfig:
    target_size: int
    p_forward: float = 0.7
    max_restarts: int = 100
    seed: int = 0

    def validate(self) -> None:
        if self.target_size < 2:
            raise ValueError(f"target_size must be >= 2, got {self.target_size}")
        if not 0.0 < self.p_forward < 1.0:
            raise ValueError(f"p_forward must be in (0, 1), got {self.p_forward}")


def forest_fire_sample(graph: ChannelGraph, cfg: SampleConfig) -> ChannelGraph:
    """Burn a connected ``cfg.target_size``-node sample out of ``graph``.

    Identical (graph, cfg) always yields the identical sample.  Raises
    SamplingError when the largest component is too small or the fire dies
    out more than ``cfg.max_restarts`` times.
    """
    cfg.validate()
    comp = max(graph.connected_components(), key=len) if graph.n_nodes else []
    if cfg.target_size > len(comp):
        raise SamplingError(
            f"target size {cfg.target_size} exceeds largest component "
            f"({len(comp)} nodes)")
    rng = Random(cfg.seed)
    start = comp[rng.randrange(len(comp))]
    in_sample = bytearray(graph.n_nodes)
    in_sample[start] = 1
    sampled = [start]
    frontier = deque([start])
    restarts = 0
    while len(sampled) < cfg.target_size:
        if not frontier:
            restarts += 1
            if restarts > cfg.max_restarts:
                raise SamplingError(
                    f"burn died out {restarts} times before reaching "
                    f"{cfg.target_size} nodes")
            frontier.append(sampled[rng.randrange(len(sampled))])
            continue
        u = frontier.popleft()
        for w in graph.neighbors(u):
            if in_sample[w]:
                continue
            if rng.random() < cfg.p_forward:
                in_sample[w] = 1
                sampled.append(w)
                frontier.append(w)
                if len(sampled) == cfg.target_size:
                    break
    return induced_subgraph(graph, sorted(sampled))


def induced_subgraph(graph: ChannelGraph, keep: list[int]) -> ChannelGraph:
    """Copy the subgraph on ``keep`` (all channels between kept nodes)."""
    sub = ChannelGraph()
    remap = {}
    for u in keep:
        rec = graph.nodes[u]
        remap[u] = sub.add_node(rec.node_id, rec.is_provider)
    for k in range(graph.n_channels):
        e = 2 * k
        u, v = graph._edge_src[e], graph._edge_dst[e]
        if u in remap and v in remap:
            sub.add_channel(
                remap[u], remap[v],
                int(graph.balances[e]), int(graph.balances[e + 1]),
                graph.edge_fee_policy(e), graph.edge_fee_policy(e + 1),
                channel_id=graph._edge_channel[e])
    return sub


def sample_stream(graph: ChannelGraph, cfg: SampleConfig,
                  count: int) -> Iterator[ChannelGraph]:
    """Yield ``count`` independent samples seeded ``cfg.seed + i``."""
    for i in range(count):
        yield forest_fire_sample(graph, replace(cfg, seed=cfg.seed + i))
