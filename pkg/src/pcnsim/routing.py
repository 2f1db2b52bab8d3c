"""Transaction flow over a channel graph.

Payments are source-routed along the cheapest-fee path among channels whose
outbound balance covers the amount; every hop the balance shifts toward the
receiver and each strict intermediary earns the fee of its inbound edge.
Path cost ties break by fewer hops, then by the lexicographically smallest
node-index sequence, then by smallest edge id per hop, so routing is fully
deterministic.

The hot path is a numba kernel over the graph's CSR arrays; a pure-Python
Dijkstra with identical semantics serves as fallback (set PCNSIM_NO_NUMBA=1)
and as a cross-check in the test suite.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from random import Random
from typing import Iterator

import numpy as np

from .graph import ChannelGraph, ChannelEdge


@dataclass(frozen=True)
class Transaction:
    sender: int
    receiver: int
    amount_msat: int


@dataclass
class RouteResult:
    path: list[int]
    edge_ids: list[int]
    total_fee_msat: int
    success: bool


@dataclass
class FlowRecord:
    """Aggregated forwarding log of one simulation step.

    ``edge_flows`` maps a directed edge index to the amounts it carried;
    ``node_volume_msat``/``node_fees_msat`` count only strict intermediaries
    (endpoints of a payment neither forward nor earn).
    """

    edge_flows: dict[int, list[int]] = field(default_factory=dict)
    node_volume_msat: list[int] = field(default_factory=list)
    node_fees_msat: list[int] = field(default_factory=list)
    failed: int = 0

    def to_report(self, graph: ChannelGraph) -> dict:
        return {
            "failed": self.failed,
            "nodes": [
                {"id": graph.nodes[i].node_id,
                 "volume_msat": self.node_volume_msat[i],
                 "fees_msat": self.node_fees_msat[i]}
                for i in range(graph.n_nodes)
            ],
        }


@dataclass(frozen=True)
class FlowConfig:
    amounts_msat: tuple[int, ...] = (10_000_000, 50_000_000, 100_000_000)
    count_per_amount: int = 200
    provider_bias: float = 0.8

    def validate(self) -> None:
        if not self.amounts_msat or any(a <= 0 for a in self.amounts_msat):
            raise ValueError(f"amount tiers must be positive: {self.amounts_msat}")
        if self.count_per_amount < 0:
            raise ValueError("count_per_amount must be >= 0")
        if not 0.0 <= self.provider_bias <= 1.0:
            raise ValueError(f"provider_bias outside [0, 1]: {self.provider_bias}")


def edge_fee(edge: ChannelEdge, amount_msat: int) -> int:
    """Fee for forwarding ``amount_msat`` over one edge (half-even rounding)."""
    return edge.base_fee_msat + int(round(amount_msat * edge.fee_rate))


def _fee(base: int, rate: float, amount: int) -> int:
    return base + int(round(amount * rate))


# ----------------------------------------------------------------------
# capacity-filtered view
# ----------------------------------------------------------------------

class AmountView:
    """Live edge filter: exposes exactly the edges with balance >= amount."""

    def __init__(self, graph: ChannelGraph, amount_msat: int):
        if amount_msat <= 0:
            raise ValueError("amount must be positive")
        self.graph = graph
        self.amount_msat = amount_msat

    def has_edge(self, i: int) -> bool:
        return int(self.graph.balances[i]) >= self.amount_msat

    def edge_ids(self) -> Iterator[int]:
        bal = self.graph.balances
        return (i for i in range(self.graph.n_edges) if bal[i] >= self.amount_msat)

    def out_edges(self, u: int) -> list[int]:
        bal = self.graph.balances
        return [e for e in self.graph.out_edges[u] if bal[e] >= self.amount_msat]

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(self.graph.balances >= self.amount_msat))


def filter_by_amount(graph: ChannelGraph, amount_msat: int) -> AmountView:
    return AmountView(graph, amount_msat)


# ----------------------------------------------------------------------
# cheapest-path search
# ----------------------------------------------------------------------

_USE_NUMBA = os.environ.get("PCNSIM_NO_NUMBA", "") != "1"

if _USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        _USE_NUMBA = False

if _USE_NUMBA:

    @njit(cache=True)
    def _lex_prefers(u, e, v, hops, pred_edge, esrc, buf_a, buf_b):
        # True when best-path(u)+e orders before the chain stored at v.
        # Both node sequences have hops edges, same endpoints.
        buf_a[hops] = v
        x = u
        i = hops - 1
        while i >= 0:
            buf_a[i] = x
            if i > 0:
                x = esrc[pred_edge[x]]
            i -= 1
        x = v
        i = hops
        while i >= 0:
            buf_b[i] = x
            if i > 0:
                x = esrc[pred_edge[x]]
            i -= 1
        for i in range(hops + 1):
            if buf_a[i] < buf_b[i]:
                return True
            if buf_a[i] > buf_b[i]:
                return False
        return e < pred_edge[v]

    @njit(cache=True)
    def _route_kernel(indptr, eidx, esrc, edst, ebase, erate, bal,
                      sender, receiver, amount,
                      dist_fee, dist_hops, pred_edge, state,
                      hfee, hhops, hnode, buf_a, buf_b, out_edges):
        n = dist_fee.shape[0]
        for i in range(n):
            dist_fee[i] = -1
            state[i] = 0
        dist_fee[sender] = 0
        dist_hops[sender] = 0
        pred_edge[sender] = -1
        hfee[0] = 0
        hhops[0] = 0
        hnode[0] = sender
        hsize = 1
        found = False
        while hsize > 0:
            topf = hfee[0]
            toph = hhops[0]
            topn = hnode[0]
            hsize -= 1
            hfee[0] = hfee[hsize]
            hhops[0] = hhops[hsize]
            hnode[0] = hnode[hsize]
            i = 0
            while True:
                left = 2 * i + 1
                right = left + 1
                m = i
                if left < hsize and (hfee[left] < hfee[m] or
                                     (hfee[left] == hfee[m] and hhops[left] < hhops[m])):
                    m = left
                if right < hsize and (hfee[right] < hfee[m] or
                                      (hfee[right] == hfee[m] and hhops[right] < hhops[m])):
                    m = right
                if m == i:
                    break
                hfee[i], hfee[m] = hfee[m], hfee[i]
                hhops[i], hhops[m] = hhops[m], hhops[i]
                hnode[i], hnode[m] = hnode[m], hnode[i]
                i = m
            if state[topn] == 2:
                continue
            if topf != dist_fee[topn] or toph != dist_hops[topn]:
                continue
            state[topn] = 2
            if topn == receiver:
                found = True
                break
            for k in range(indptr[topn], indptr[topn + 1]):
                e = eidx[k]
                if bal[e] < amount:
                    continue
                v = edst[e]
                if state[v] == 2:
                    continue
                fee = topf + ebase[e] + np.int64(np.rint(amount * erate[e]))
                hp = toph + 1
                if dist_fee[v] == -1 or fee < dist_fee[v] or \
                        (fee == dist_fee[v] and hp < dist_hops[v]):
                    dist_fee[v] = fee
                    dist_hops[v] = hp
                    pred_edge[v] = e
                    j = hsize
                    hfee[j] = fee
                    hhops[j] = hp
                    hnode[j] = v
                    hsize += 1
                    while j > 0:
                        p = (j - 1) // 2
                        if hfee[p] > hfee[j] or \
                                (hfee[p] == hfee[j] and hhops[p] > hhops[j]):
                            hfee[p], hfee[j] = hfee[j], hfee[p]
                            hhops[p], hhops[j] = hhops[j], hhops[p]
                            hnode[p], hnode[j] = hnode[j], hnode[p]
                            j = p
                        else:
                            break
                elif fee == dist_fee[v] and hp == dist_hops[v]:
                    if _lex_prefers(topn, e, v, hp, pred_edge, esrc, buf_a, buf_b):
                        pred_edge[v] = e
        if not found:
            return -1
        hops = dist_hops[receiver]
        v = receiver
        j = hops - 1
        while v != sender:
            e = pred_edge[v]
            out_edges[j] = e
            j -= 1
            v = esrc[e]
        return hops


def _workspace(graph: ChannelGraph):
    ws = graph.scratch.get("route_ws")
    n, m = graph.n_nodes, graph.n_edges
    if ws is None or ws[0].shape[0] < n or ws[4].shape[0] < m + 8:
        ws = (
            np.empty(n, dtype=np.int64),      # dist_fee
            np.empty(n, dtype=np.int64),      # dist_hops
            np.empty(n, dtype=np.int64),      # pred_edge
            np.empty(n, dtype=np.uint8),      # state
            np.empty(m + 8, dtype=np.int64),  # heap fee
            np.empty(m + 8, dtype=np.int64),  # heap hops
            np.empty(m + 8, dtype=np.int64),  # heap node
            np.empty(n + 1, dtype=np.int64),  # lex buffer a
            np.empty(n + 1, dtype=np.int64),  # lex buffer b
            np.empty(n + 1, dtype=np.int64),  # out edges
        )
        graph.scratch["route_ws"] = ws
    return ws


def _cheapest_path_ref(graph: ChannelGraph, sender: int, receiver: int,
                       amount_msat: int) -> RouteResult:
    """Reference Dijkstra carrying full (fee, hops, path, edges) priorities.

    Semantically identical to the kernel; used as fallback and cross-check.
    """
    import heapq

    bal = graph.balances
    settled = set()
    heap = [(0, 0, (sender,), ())]
    while heap:
        fee, hops, path, epath = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == receiver:
            return RouteResult(list(path), list(epath), fee, True)
        for e in sorted(graph.out_edges[node]):
            if bal[e] < amount_msat:
                continue
            v = graph._edge_dst[e]
            if v in settled:
                continue
            w = _fee(graph._edge_base[e], graph._edge_rate[e], amount_msat)
            heapq.heappush(heap, (fee + w, hops + 1, path + (v,), epath + (e,)))
    return RouteResult([], [], 0, False)


def cheapest_path(graph: ChannelGraph, sender: int, receiver: int,
                  amount_msat: int) -> RouteResult:
    """Cheapest route on the balance-filtered view, or a failed result.

    Minimizes total edge fee with (hops, node sequence, edge id) tie-breaks;
    only edges with balance >= amount are considered.
    """
    n = graph.n_nodes
    if not (0 <= sender < n and 0 <= receiver < n):
        raise IndexError(f"node index out of range: ({sender}, {receiver})")
    if sender == receiver:
        raise ValueError("sender and receiver must differ")
    if amount_msat <= 0:
        raise ValueError("amount must be positive")
    if not _USE_NUMBA:
        return _cheapest_path_ref(graph, sender, receiver, amount_msat)
    indptr, eidx, esrc, edst, ebase, erate = graph.csr()
    ws = _workspace(graph)
    hops = _route_kernel(indptr, eidx, esrc, edst, ebase, erate,
                         graph.balances, sender, receiver, amount_msat, *ws)
    if hops < 0:
        return RouteResult([], [], 0, False)
    edge_ids = [int(e) for e in ws[9][:hops]]
    path = [sender] + [graph._edge_dst[e] for e in edge_ids]
    total = sum(_fee(graph._edge_base[e], graph._edge_rate[e], amount_msat)
                for e in edge_ids)
    return RouteResult(path, edge_ids, total, True)


# ----------------------------------------------------------------------
# execution and flow simulation
# ----------------------------------------------------------------------

def execute_transaction(graph: ChannelGraph,
                        tx: Transaction) -> tuple[RouteResult, dict[int, int]]:
    """Route and settle one payment.

    On success every traversed edge sheds the amount onto its reverse half
    and each strict intermediary is credited the fee of its inbound edge
    (fees are revenue accounting, not moved through balances).  On failure
    the graph is untouched.
    """
    res = cheapest_path(graph, tx.sender, tx.receiver, tx.amount_msat)
    if not res.success:
        return res, {}
    bal = graph.balances
    amt = tx.amount_msat
    for e in res.edge_ids:
        bal[e] -= amt
        bal[e ^ 1] += amt
    credits: dict[int, int] = {}
    for i in range(1, len(res.path) - 1):
        inbound = res.edge_ids[i - 1]
        fee = _fee(graph._edge_base[inbound], graph._edge_rate[inbound], amt)
        credits[res.path[i]] = credits.get(res.path[i], 0) + fee
    return res, credits


def generate_transactions(graph: ChannelGraph, cfg: FlowConfig, rng: Random,
                          exclude: int | None = None) -> list[Transaction]:
    """Draw the step's payments: per tier, count receivers (provider-biased)
    and uniform senders.  ``exclude`` removes a node (the agent) from both
    roles.  Falls back to uniform receivers when no provider exists.
    """
    cfg.validate()
    population = [i for i in range(graph.n_nodes) if i != exclude]
    if len(population) < 2:
        raise ValueError("need at least two eligible nodes")
    providers = [i for i in population if graph.nodes[i].is_provider]
    txs = []
    for amount in cfg.amounts_msat:
        for _ in range(cfg.count_per_amount):
            if providers and rng.random() < cfg.provider_bias:
                receiver = providers[rng.randrange(len(providers))]
            else:
                receiver = population[rng.randrange(len(population))]
            while True:
                sender = population[rng.randrange(len(population))]
                if sender != receiver:
                    break
            txs.append(Transaction(sender, receiver, amount))
    return txs


def run_transactions(graph: ChannelGraph,
                     txs: list[Transaction]) -> FlowRecord:
    """Execute payments sequentially against the live graph and aggregate."""
    record = FlowRecord(
        node_volume_msat=[0] * graph.n_nodes,
        node_fees_msat=[0] * graph.n_nodes,
    )
    flows = record.edge_flows
    volume = record.node_volume_msat
    fees = record.node_fees_msat
    for tx in txs:
        res, credits = execute_transaction(graph, tx)
        if not res.success:
            record.failed += 1
            continue
        amt = tx.amount_msat
        for e in res.edge_ids:
            flows.setdefault(e, []).append(amt)
        for i in range(1, len(res.path) - 1):
            volume[res.path[i]] += amt
        for node, fee in credits.items():
            fees[node] += fee
    return record


def simulate_step(graph: ChannelGraph, cfg: FlowConfig, rng: Random,
                  exclude: int | None = None) -> FlowRecord:
    """One traffic step: generate this step's payments and run them in order."""
    return run_transactions(graph, generate_transactions(graph, cfg, rng, exclude))
