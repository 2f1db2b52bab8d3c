"""Shared builders and independent oracles used across the suite."""

from __future__ import annotations

from fractions import Fraction
from random import Random

import pytest

from pcnsim.graph import ChannelGraph, FeePolicy


def random_graph(rng: Random, n_nodes: int = 8, n_channels: int = 12,
                 provider_p: float = 0.3,
                 cap_range=(2 * 10**6, 10**8),
                 base_range=(0, 3000), rate_max=1e-3) -> ChannelGraph:
    """Small random multigraph with random fees and balances."""
    g = ChannelGraph()
    for i in range(n_nodes):
        g.add_node(f"n{i}", rng.random() < provider_p)
    made = 0
    while made < n_channels:
        u, v = rng.randrange(n_nodes), rng.randrange(n_nodes)
        if u == v:
            continue
        cap = rng.randrange(*cap_range)
        bal_u = rng.randrange(cap + 1)
        g.add_channel(u, v, bal_u, cap - bal_u,
                      FeePolicy(rng.randrange(*base_range), rng.random() * rate_max),
                      FeePolicy(rng.randrange(*base_range), rng.random() * rate_max))
        made += 1
    return g


def connected_random_graph(rng: Random, n_nodes: int = 8,
                           extra_channels: int = 5, **kw) -> ChannelGraph:
    """Random spanning tree plus extra channels; connected by construction."""
    g = ChannelGraph()
    for i in range(n_nodes):
        g.add_node(f"n{i}", rng.random() < kw.get("provider_p", 0.3))
    cap_range = kw.get("cap_range", (2 * 10**6, 10**8))
    base_range = kw.get("base_range", (0, 3000))
    rate_max = kw.get("rate_max", 1e-3)

    def channel(u, v):
        cap = rng.randrange(*cap_range)
        bal_u = rng.randrange(cap + 1)
        g.add_channel(u, v, bal_u, cap - bal_u,
                      FeePolicy(rng.randrange(*base_range), rng.random() * rate_max),
                      FeePolicy(rng.randrange(*base_range), rng.random() * rate_max))

    for v in range(1, n_nodes):
        channel(rng.randrange(v), v)
    for _ in range(extra_channels):
        u, v = rng.randrange(n_nodes), rng.randrange(n_nodes)
        if u != v:
            channel(u, v)
    return g


def fee_oracle_exact(base: int, rate: float, amount: int) -> int:
    """Edge fee recomputed in rational arithmetic (half-even rounding)."""
    product = Fraction(amount) * Fraction(rate)
    floor = product.numerator // product.denominator
    rem = product - floor
    if rem > Fraction(1, 2):
        rounded = floor + 1
    elif rem < Fraction(1, 2):
        rounded = floor
    else:
        rounded = floor if floor % 2 == 0 else floor + 1
    return base + rounded


def brute_force_route(graph: ChannelGraph, sender: int, receiver: int,
                      amount: int):
    """Exhaustive best route: enumerate all simple paths on the filtered
    graph, per hop the cheapest qualifying parallel edge (ties by edge id),
    globally ordered by (fee, hops, node path, edge ids).

    Returns (total_fee, node_path, edge_ids) or None when unreachable.
    """
    from pcnsim.routing import _fee

    best = None
    bal = graph.balances

    def hop_options(u):
        per_dst = {}
        for e in sorted(graph.out_edges[u]):
            if bal[e] < amount:
                continue
            d = graph._edge_dst[e]
            fee = _fee(graph._edge_base[e], graph._edge_rate[e], amount)
            if d not in per_dst or fee < per_dst[d][0]:
                per_dst[d] = (fee, e)
        return per_dst

    def walk(u, visited, fee, path, eids):
        nonlocal best
        if u == receiver:
            cand = (fee, len(path) - 1, tuple(path), tuple(eids))
            if best is None or cand < best:
                best = cand
            return
        for d, (w, e) in sorted(hop_options(u).items()):
            if d in visited:
                continue
            walk(d, visited | {d}, fee + w, path + [d], eids + [e])

    walk(sender, {sender}, 0, [sender], [])
    if best is None:
        return None
    return best[0], list(best[2]), list(best[3])


def betweenness_oracle(graph: ChannelGraph):
    """Ordered-pair betweenness by explicit shortest-path enumeration."""
    n = graph.n_nodes
    scores = [0.0] * n
    if n < 3:
        return scores
    succ = [sorted({graph._edge_dst[e] for e in graph.out_edges[u]})
            for u in range(n)]

    def all_shortest_paths(s, t):
        # BFS layers, then DFS over the layered DAG
        dist = {s: 0}
        frontier = [s]
        while frontier and t not in dist:
            nxt = []
            for u in frontier:
                for w in succ[u]:
                    if w not in dist:
                        dist[w] = dist[u] + 1
                        nxt.append(w)
            frontier = nxt
        if t not in dist:
            return []
        paths = []

        def dfs(u, acc):
            if u == t:
                paths.append(list(acc))
                return
            for w in succ[u]:
                if dist.get(w) == dist[u] + 1 and dist[w] <= dist[t]:
                    acc.append(w)
                    dfs(w, acc)
                    acc.pop()

        dfs(s, [s])
        return paths

    for s in range(n):
        for t in range(n):
            if s == t:
                continue
            paths = all_shortest_paths(s, t)
            if not paths:
                continue
            sigma = len(paths)
            for v in range(n):
                if v == s or v == t:
                    continue
                through = sum(1 for p in paths if v in p[1:-1])
                scores[v] += through / sigma
    norm = (n - 1) * (n - 2)
    return [x / norm for x in scores]


@pytest.fixture(scope="session")
def small_snapshot():
    from pcnsim.synthetic import synthetic_snapshot
    return synthetic_snapshot(400, seed=7)
