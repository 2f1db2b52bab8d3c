"""Node-attachment baselines and the centrality primitives they rank by.

Five strategies: uniform random selection, and top-k / bottom-k by degree or
betweenness centrality.  All of them pick their k nodes up-front on the
episode's initial graph and spread the budget uniformly (bucket 1 each step).
"""

from __future__ import annotations

from collections import deque
from random import Random
from typing import Iterable, Sequence

import numpy as np

from .env import Action, JcnsraEnv
from .graph import ChannelGraph

HEURISTIC_KINDS = (
    "random",
    "top-k-degree",
    "bottom-k-degree",
    "top-k-betweenness",
    "bottom-k-betweenness",
)


def degree_vector(graph: ChannelGraph) -> np.ndarray:
    """Channel-count degree (paired edges counted once) over N-1."""
    n = graph.n_nodes
    deg = np.fromiter((graph.degree(i) for i in range(n)),
                      dtype=np.float64, count=n)
    return deg / max(n - 1, 1)


def betweenness_centrality(graph: ChannelGraph) -> np.ndarray:
    """Ordered-pair betweenness over hop-count shortest paths.

    Brandes accumulation on the directed channel view (parallel channels
    deduplicated), normalized by (N-1)(N-2).  Graphs with fewer than three
    nodes score all zero; disconnected graphs accumulate within components.
    """
    n = graph.n_nodes
    scores = np.zeros(n, dtype=np.float64)
    if n < 3:
        return scores
    succ = [sorted({graph._edge_dst[e] for e in graph.out_edges[u]})
            for u in range(n)]
    for s in range(n):
        stack = []
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma = [0.0] * n
        sigma[s] = 1.0
        dist = [-1] * n
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in succ[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                scores[w] += delta[w]
    return scores / ((n - 1) * (n - 2))


def select_nodes(graph: ChannelGraph, kind: str, k: int, rng: Random,
                 candidates: Sequence[int] | None = None) -> list[int]:
    """Pick k distinct nodes by the named strategy.

    Metric ties break by ascending node index; `random` draws uniformly
    without replacement.  ``candidates`` restricts the eligible nodes
    (defaults to every node).
    """
    if kind not in HEURISTIC_KINDS:
        raise ValueError(f"unknown heuristic {kind!r}; expected one of "
                         f"{HEURISTIC_KINDS}")
    pool = list(range(graph.n_nodes)) if candidates is None else list(candidates)
    if k > len(pool):
        raise ValueError(f"k={k} exceeds {len(pool)} candidates")
    if kind == "random":
        return rng.sample(pool, k)
    metric = degree_vector(graph) if "degree" in kind \
        else betweenness_centrality(graph)
    if kind.startswith("top"):
        ranked = sorted(pool, key=lambda i: (-metric[i], i))
    else:
        ranked = sorted(pool, key=lambda i: (metric[i], i))
    return ranked[:k]


def run_heuristic(env: JcnsraEnv, kind: str, seed: int) -> float:
    """Play one full episode with the heuristic; returns the final-step reward.

    Selects episode_length nodes on the freshly reset graph and opens one
    channel per step with bucket 1, which the allocation quotient turns into
    uniform budget shares.
    """
    env.reset(seed)
    rng = Random(f"heuristic:{seed}")
    picks = select_nodes(env.graph, kind, env.config.episode_length, rng,
                         candidates=range(env.candidate_count))
    outcome = None
    for node in picks:
        outcome = env.step(Action(node, 1))
    return outcome.reward


def evaluate_heuristic(env: JcnsraEnv, kind: str, seeds: Iterable[int]) -> list[float]:
    """Final-step rewards of the heuristic over a sequence of episode seeds."""
    return [run_heuristic(env, kind, seed) for seed in seeds]
