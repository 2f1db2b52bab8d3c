"""Decentralization analytics: centralities, distribution metrics, communities.

Used for the network-evolution study: attach revenue-seeking agents episode
by episode, merge their final channels into the global graph, and compare
centrality distributions (entropy, inequality) and modularity before/after.
"""

from __future__ import annotations

from dataclasses import dataclass
from random import Random
from typing import Callable, Union

import numpy as np

from .env import EnvConfig, JcnsraEnv
from .graph import ChannelGraph
from .heuristics import betweenness_centrality, degree_vector, run_heuristic

CENTRALITIES = ("degree", "betweenness", "eigenvector", "closeness")


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, iterations: int):
        super().__init__(message)
        self.iterations = iterations


@dataclass
class CentralityReport:
    degree: np.ndarray
    betweenness: np.ndarray
    eigenvector: np.ndarray
    closeness: np.ndarray

    def vector(self, name: str) -> np.ndarray:
        return getattr(self, name)


@dataclass
class DistributionMetrics:
    shannon: float
    renyi: float
    gini: float
    bin_count: int


@dataclass
class EvolutionReport:
    episodes: int
    channels_added: int
    modularity_base: float
    modularity_evolved: float
    base: dict[str, DistributionMetrics]
    evolved: dict[str, DistributionMetrics]
    deltas: dict[str, dict[str, float]]
    histograms: dict[str, dict]

    def to_dict(self) -> dict:
        def metrics(m: DistributionMetrics) -> dict:
            return {"shannon": m.shannon, "renyi": m.renyi,
                    "gini": m.gini, "bin_count": m.bin_count}
        return {
            "episodes": self.episodes,
            "channels_added": self.channels_added,
            "modularity": {"base": self.modularity_base,
                           "evolved": self.modularity_evolved},
            "base": {k: metrics(v) for k, v in self.base.items()},
            "evolved": {k: metrics(v) for k, v in self.evolved.items()},
            "deltas": self.deltas,
            "histograms": self.histograms,
        }


# ----------------------------------------------------------------------
# centralities
# ----------------------------------------------------------------------

def eigenvector_centrality(graph: ChannelGraph, tol: float = 1e-8,
                           max_iter: int = 1000) -> np.ndarray:
    """Principal-eigenvector scores of the undirected channel adjacency.

    Power iteration on A + I (the shift sidesteps bipartite oscillation
    without changing eigenvectors), L2-normalized, entries >= 0.
    """
    n = graph.n_nodes
    if n == 0:
        raise ValueError("empty graph")
    links = _undirected_links(graph)
    if not links:
        return np.full(n, 1.0 / np.sqrt(n))
    pairs = np.asarray(links, dtype=np.int64)
    srcs = np.concatenate([pairs[:, 0], pairs[:, 1]])
    dsts = np.concatenate([pairs[:, 1], pairs[:, 0]])
    x = np.full(n, 1.0 / np.sqrt(n))
    for iteration in range(1, max_iter + 1):
        y = x + np.bincount(dsts, weights=x[srcs], minlength=n)
        y /= np.linalg.norm(y)
        if np.linalg.norm(y - x) <= tol * np.linalg.norm(y):
            return y
        x = y
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations", max_iter)


def closeness_centrality(graph: ChannelGraph) -> np.ndarray:
    """Classical closeness with Wasserman-Faust component scaling.

    For n_v nodes reachable from v within its component:
    ((n_v - 1) / (N - 1)) * ((n_v - 1) / sum of distances).
    """
    n = graph.n_nodes
    nbrs = [graph.neighbors(u) for u in range(n)]
    out = np.zeros(n, dtype=np.float64)
    for v in range(n):
        dist = [-1] * n
        dist[v] = 0
        queue = [v]
        total = 0
        reach = 0
        while queue:
            nxt = []
            for u in queue:
                for w in nbrs[u]:
                    if dist[w] < 0:
                        dist[w] = dist[u] + 1
                        total += dist[w]
                        reach += 1
                        nxt.append(w)
            queue = nxt
        if reach > 0 and n > 1:
            out[v] = (reach / (n - 1)) * (reach / total)
    return out


def centrality_report(graph: ChannelGraph) -> CentralityReport:
    return CentralityReport(
        degree=degree_vector(graph),
        betweenness=betweenness_centrality(graph),
        eigenvector=eigenvector_centrality(graph),
        closeness=closeness_centrality(graph),
    )


# ----------------------------------------------------------------------
# distribution metrics
# ----------------------------------------------------------------------

def histogram_probs(values, bin_count: int,
                    value_range: tuple[float, float] | None = None) -> np.ndarray:
    """Probabilities over equal-width bins spanning the observed range."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty sample")
    if bin_count < 1:
        raise ValueError("bin_count must be >= 1")
    lo, hi = value_range if value_range is not None else (arr.min(), arr.max())
    counts, _ = np.histogram(arr, bins=bin_count, range=(float(lo), float(hi)))
    return counts / counts.sum()


def shannon_entropy(values, bin_count: int = 50,
                    value_range: tuple[float, float] | None = None) -> float:
    """Histogram Shannon entropy in nats; constant samples score 0."""
    p = histogram_probs(values, bin_count, value_range)
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def renyi_entropy(values, bin_count: int = 50, alpha: float = 2.0,
                  value_range: tuple[float, float] | None = None) -> float:
    """Order-alpha Renyi entropy in nats on the same binning as Shannon."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if alpha == 1.0:
        raise ValueError("alpha=1 is the Shannon limit; call shannon_entropy")
    p = histogram_probs(values, bin_count, value_range)
    p = p[p > 0]
    return float(np.log((p ** alpha).sum()) / (1.0 - alpha))


def gini_index(values) -> float:
    """Mean absolute difference over twice the mean, in [0, 1]."""
    arr = np.sort(np.asarray(values, dtype=np.float64))
    n = arr.size
    if n == 0:
        raise ValueError("empty sample")
    if (arr < 0).any():
        raise ValueError("negative values")
    total = arr.sum()
    if total == 0:
        raise ValueError("all-zero sample has no defined inequality")
    ranks = np.arange(1, n + 1, dtype=np.float64)
    return float(2.0 * (ranks * arr).sum() / (n * total) - (n + 1) / n)


# ----------------------------------------------------------------------
# communities
# ----------------------------------------------------------------------

def _undirected_links(graph: ChannelGraph) -> list[tuple[int, int]]:
    links = {(min(graph._edge_src[2 * k], graph._edge_dst[2 * k]),
              max(graph._edge_src[2 * k], graph._edge_dst[2 * k]))
             for k in range(graph.n_channels)}
    return sorted(links)


def newman_modularity(links: list[tuple[int, int]], n: int,
                      assign: list[int]) -> float:
    """Q of a partition on an undirected unit-weight link list."""
    m = len(links)
    if m == 0:
        raise ValueError("edgeless graph")
    intra: dict[int, int] = {}
    deg_c: dict[int, int] = {}
    for u, v in links:
        deg_c[assign[u]] = deg_c.get(assign[u], 0) + 1
        deg_c[assign[v]] = deg_c.get(assign[v], 0) + 1
        if assign[u] == assign[v]:
            intra[assign[u]] = intra.get(assign[u], 0) + 1
    q = 0.0
    for c, deg in deg_c.items():
        q += intra.get(c, 0) / m - (deg / (2.0 * m)) ** 2
    return q


def _louvain_level(adj: list[dict[int, float]], m: float,
                   rng: Random) -> tuple[list[int], bool]:
    n = len(adj)
    community = list(range(n))
    strength = [sum(adj[i].values()) + adj[i].get(i, 0.0) for i in range(n)]
    sigma_tot = strength[:]
    order = list(range(n))
    rng.shuffle(order)
    moved_any = False
    moved = True
    while moved:
        moved = False
        for v in order:
            cv = community[v]
            weight_to: dict[int, float] = {}
            for nb, w in adj[v].items():
                if nb != v:
                    c = community[nb]
                    weight_to[c] = weight_to.get(c, 0.0) + w
            sigma_tot[cv] -= strength[v]
            best_c = cv
            best_gain = weight_to.get(cv, 0.0) / m \
                - sigma_tot[cv] * strength[v] / (2.0 * m * m)
            for c in sorted(weight_to):
                gain = weight_to[c] / m - sigma_tot[c] * strength[v] / (2.0 * m * m)
                if gain > best_gain + 1e-12:
                    best_gain, best_c = gain, c
            sigma_tot[best_c] += strength[v]
            if best_c != cv:
                community[v] = best_c
                moved = True
                moved_any = True
    return community, moved_any


def louvain_modularity(graph: ChannelGraph, seed: int = 0,
                       phase_log: list | None = None) -> tuple[list[int], float]:
    """Greedy modularity maximization on the undirected unit-weight graph.

    Deterministic for a given seed (the seed fixes the node visiting order).
    Returns the community id per node and the partition's modularity; when
    ``phase_log`` is a list, the modularity after each local-move level is
    appended to it (the sequence never decreases).
    """
    links = _undirected_links(graph)
    if not links:
        raise ValueError("Louvain needs at least one channel")
    n = graph.n_nodes
    rng = Random(seed)
    adj: list[dict[int, float]] = [dict() for _ in range(n)]
    for u, v in links:
        adj[u][v] = adj[u].get(v, 0.0) + 1.0
        adj[v][u] = adj[v].get(u, 0.0) + 1.0
    m = float(len(links))
    assign = list(range(n))
    while True:
        community, improved = _louvain_level(adj, m, rng)
        labels = {c: i for i, c in enumerate(sorted(set(community)))}
        community = [labels[c] for c in community]
        assign = [community[assign[i]] for i in range(n)]
        if phase_log is not None:
            phase_log.append(newman_modularity(links, n, assign))
        size = len(labels)
        if not improved or size == len(adj):
            break
        new_adj: list[dict[int, float]] = [dict() for _ in range(size)]
        for u in range(len(adj)):
            cu = community[u]
            for v, w in adj[u].items():
                cv = community[v]
                if u == v:
                    new_adj[cu][cu] = new_adj[cu].get(cu, 0.0) + w
                elif u < v:
                    if cu == cv:
                        new_adj[cu][cu] = new_adj[cu].get(cu, 0.0) + w
                    else:
                        new_adj[cu][cv] = new_adj[cu].get(cv, 0.0) + w
                        new_adj[cv][cu] = new_adj[cv].get(cu, 0.0) + w
        adj = new_adj
    return assign, newman_modularity(links, n, assign)


# ----------------------------------------------------------------------
# evolution experiment
# ----------------------------------------------------------------------

Policy = Union[str, Callable[[JcnsraEnv, int], object]]


def evolve_network(base: ChannelGraph, policy: Policy, episodes: int,
                   cfg: EnvConfig, seed: int = 0, bin_count: int = 50,
                   renyi_alpha: float = 2.0,
                   louvain_seed: int = 0) -> EvolutionReport:
    """Deploy a revenue-seeking policy ``episodes`` times and measure the drift.

    Each episode localizes the base snapshot, plays the policy to the end,
    and merges the agent's final channels into the evolved graph as a brand
    new node.  Base and evolved distributions share one binning per
    centrality (union value range), so episodes=0 yields exactly zero deltas.
    """
    if episodes < 0:
        raise ValueError("episodes must be >= 0")
    play = (lambda env, s: run_heuristic(env, policy, s)) \
        if isinstance(policy, str) else policy
    evolved = base.copy()
    channels_added = 0
    for ep in range(episodes):
        env = JcnsraEnv(base, cfg)
        play(env, seed + ep)
        new_idx = evolved.add_node(f"__evolved_{ep:05d}__", False)
        for peer in sorted(env.allocations):
            funding = env.allocations[peer]
            if funding <= 0:
                continue
            peer_idx = evolved.index_of(env.graph.nodes[peer].node_id)
            evolved.add_channel(new_idx, peer_idx, funding, funding,
                                env.agent_policy, env.agent_policy)
            channels_added += 1

    base_rep = centrality_report(base)
    evo_rep = centrality_report(evolved)
    base_metrics: dict[str, DistributionMetrics] = {}
    evo_metrics: dict[str, DistributionMetrics] = {}
    deltas: dict[str, dict[str, float]] = {}
    histograms: dict[str, dict] = {}
    for name in CENTRALITIES:
        b = base_rep.vector(name)
        e = evo_rep.vector(name)
        lo = float(min(b.min(), e.min()))
        hi = float(max(b.max(), e.max()))
        rng_ = (lo, hi)
        base_metrics[name] = DistributionMetrics(
            shannon_entropy(b, bin_count, rng_),
            renyi_entropy(b, bin_count, renyi_alpha, rng_),
            gini_index(b) if b.sum() > 0 else 0.0,
            bin_count)
        evo_metrics[name] = DistributionMetrics(
            shannon_entropy(e, bin_count, rng_),
            renyi_entropy(e, bin_count, renyi_alpha, rng_),
            gini_index(e) if e.sum() > 0 else 0.0,
            bin_count)
        deltas[name] = {
            "shannon": evo_metrics[name].shannon - base_metrics[name].shannon,
            "renyi": evo_metrics[name].renyi - base_metrics[name].renyi,
            "gini": evo_metrics[name].gini - base_metrics[name].gini,
        }
        edges = np.linspace(lo, hi, bin_count + 1)
        histograms[name] = {
            "bin_edges": edges.tolist(),
            "base_counts": np.histogram(b, bins=bin_count, range=rng_)[0].tolist(),
            "evolved_counts": np.histogram(e, bins=bin_count, range=rng_)[0].tolist(),
        }
    _, q_base = louvain_modularity(base, seed=louvain_seed)
    _, q_evolved = louvain_modularity(evolved, seed=louvain_seed)
    return EvolutionReport(
        episodes=episodes,
        channels_added=channels_added,
        modularity_base=q_base,
        modularity_evolved=q_evolved,
        base=base_metrics,
        evolved=evo_metrics,
        deltas=deltas,
        histograms=histograms,
    )
