"""Channel-graph data model, snapshot ingestion, and fee statistics.

A payment channel between two participants is represented as a pair of
directed edges stored at adjacent indices (2k, 2k+1) that share a channel id.
The partner of directed edge ``i`` is always ``i ^ 1``.  Each directed edge
carries its own fee policy and a live balance (the outbound liquidity of its
source node); the two balances of a pair always sum to the channel capacity
fixed at creation.

All amounts are integer millisatoshis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterator, Union

import numpy as np


class SnapshotParseError(ValueError):
    """The snapshot document is structurally malformed."""


class GraphValidationError(ValueError):
    """The document parsed but violates a graph invariant."""


@dataclass(frozen=True)
class FeePolicy:
    """Per-direction forwarding charge: fixed base fee plus proportional rate."""

    base_fee_msat: int = 0
    fee_rate: float = 0.0

    def validate(self) -> None:
        if self.base_fee_msat < 0:
            raise GraphValidationError(f"negative base fee: {self.base_fee_msat}")
        if not 0.0 <= self.fee_rate < 1.0:
            raise GraphValidationError(f"fee rate out of [0, 1): {self.fee_rate}")


@dataclass(frozen=True)
class NodeRecord:
    node_id: str
    index: int
    is_provider: bool


@dataclass(frozen=True)
class ChannelEdge:
    """Read-only record of one directed half of a channel."""

    src: int
    dst: int
    base_fee_msat: int
    fee_rate: float
    balance_msat: int
    channel_id: str


_BAL_GROW = 256


class ChannelGraph:
    """Directed multigraph of channel half-edges with live balances.

    Nodes are dense integer indices.  Topology lives in plain lists plus a
    per-node out-edge index; balances live in a growable int64 array so the
    routing kernel can read them without copying.  Mutate from one thread at
    a time; concurrent read-only use of a quiescent graph is safe.
    """

    def __init__(self) -> None:
        self.nodes: list[NodeRecord] = []
        self.out_edges: list[list[int]] = []
        self._edge_src: list[int] = []
        self._edge_dst: list[int] = []
        self._edge_base: list[int] = []
        self._edge_rate: list[float] = []
        self._edge_channel: list[str] = []
        self._bal = np.zeros(_BAL_GROW, dtype=np.int64)
        self._n_edges = 0
        self._id_to_index: dict[str, int] = {}
        self._chan_seq = 0
        self._csr_cache = None
        self.scratch: dict = {}  # subsystem-owned caches, never copied

    # ------------------------------------------------------------------
    # size / lookup
    # ------------------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return self._n_edges

    @property
    def n_channels(self) -> int:
        return self._n_edges // 2

    @property
    def balances(self) -> np.ndarray:
        """Live view of per-edge balances; writing through it is allowed."""
        return self._bal[: self._n_edges]

    def index_of(self, node_id: str) -> int:
        return self._id_to_index[node_id]

    def edge(self, i: int) -> ChannelEdge:
        if not 0 <= i < self._n_edges:
            raise IndexError(f"edge index {i} out of range")
        return ChannelEdge(
            src=self._edge_src[i],
            dst=self._edge_dst[i],
            base_fee_msat=self._edge_base[i],
            fee_rate=self._edge_rate[i],
            balance_msat=int(self._bal[i]),
            channel_id=self._edge_channel[i],
        )

    def edges(self) -> Iterator[ChannelEdge]:
        for i in range(self._n_edges):
            yield self.edge(i)

    def degree(self, u: int) -> int:
        """Number of channels incident to u (each channel counted once)."""
        return len(self.out_edges[u])

    def neighbors(self, u: int) -> list[int]:
        """Distinct channel peers of u, ascending."""
        return sorted({self._edge_dst[e] for e in self.out_edges[u]})

    def edge_fee_policy(self, i: int) -> FeePolicy:
        return FeePolicy(self._edge_base[i], self._edge_rate[i])

    def channel_capacity(self, i: int) -> int:
        """Capacity of the channel containing directed edge i."""
        return int(self._bal[i] + self._bal[i ^ 1])

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------

    def add_node(self, node_id: str, is_provider: bool = False) -> int:
        if node_id in self._id_to_index:
            raise GraphValidationError(f"duplicate node id: {node_id!r}")
        idx = len(self.nodes)
        self.nodes.append(NodeRecord(node_id, idx, bool(is_provider)))
        self.out_edges.append([])
        self._id_to_index[node_id] = idx
        return idx

    def _append_edge(self, src: int, dst: int, policy: FeePolicy,
                     balance: int, channel_id: str) -> int:
        i = self._n_edges
        if i >= self._bal.shape[0]:
            grown = np.zeros(max(self._bal.shape[0] * 2, _BAL_GROW), dtype=np.int64)
            grown[:i] = self._bal[:i]
            self._bal = grown
        self._edge_src.append(src)
        self._edge_dst.append(dst)
        self._edge_base.append(policy.base_fee_msat)
        self._edge_rate.append(policy.fee_rate)
        self._edge_channel.append(channel_id)
        self._bal[i] = balance
        self.out_edges[src].append(i)
        self._n_edges += 1
        return i

    def add_channel(self, u: int, v: int, funding_u: int, funding_v: int,
                    policy_u: FeePolicy, policy_v: FeePolicy,
                    channel_id: str | None = None) -> tuple[int, int]:
        """Open a channel funded by both sides; capacity is the funding sum.

        Returns the directed edge indices (u->v, v->u).  Parallel channels
        between the same pair are permitted and get fresh channel ids.
        """
        if u == v:
            raise GraphValidationError(f"self-channel on node {u}")
        if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
            raise IndexError(f"node index out of range: ({u}, {v})")
        if funding_u < 0 or funding_v < 0:
            raise GraphValidationError("negative funding")
        if funding_u == 0 and funding_v == 0:
            raise GraphValidationError("channel with zero capacity")
        policy_u.validate()
        policy_v.validate()
        if channel_id is None:
            channel_id = f"_ch{self._chan_seq}"
            self._chan_seq += 1
        e_uv = self._append_edge(u, v, policy_u, funding_u, channel_id)
        e_vu = self._append_edge(v, u, policy_v, funding_v, channel_id)
        self._csr_cache = None
        return e_uv, e_vu

    def remove_channels_of(self, u: int) -> int:
        """Drop every channel incident to u; returns how many were removed."""
        if not 0 <= u < self.n_nodes:
            raise IndexError(f"node index {u} out of range")
        if not self.out_edges[u]:
            return 0
        keep = [k for k in range(self.n_channels)
                if self._edge_src[2 * k] != u and self._edge_dst[2 * k] != u]
        removed = self.n_channels - len(keep)
        src, dst, base, rate, chan = [], [], [], [], []
        bal = np.zeros(max(2 * len(keep), _BAL_GROW), dtype=np.int64)
        for j, k in enumerate(keep):
            for half in (2 * k, 2 * k + 1):
                src.append(self._edge_src[half])
                dst.append(self._edge_dst[half])
                base.append(self._edge_base[half])
                rate.append(self._edge_rate[half])
                chan.append(self._edge_channel[half])
                bal[2 * j + (half & 1)] = self._bal[half]
        self._edge_src, self._edge_dst = src, dst
        self._edge_base, self._edge_rate = base, rate
        self._edge_channel = chan
        self._bal = bal
        self._n_edges = 2 * len(keep)
        self.out_edges = [[] for _ in range(self.n_nodes)]
        for i in range(self._n_edges):
            self.out_edges[src[i]].append(i)
        self._csr_cache = None
        return removed

    def copy(self) -> "ChannelGraph":
        g = ChannelGraph()
        g.nodes = list(self.nodes)
        g.out_edges = [list(es) for es in self.out_edges]
        g._edge_src = list(self._edge_src)
        g._edge_dst = list(self._edge_dst)
        g._edge_base = list(self._edge_base)
        g._edge_rate = list(self._edge_rate)
        g._edge_channel = list(self._edge_channel)
        g._bal = self._bal.copy()
        g._n_edges = self._n_edges
        g._id_to_index = dict(self._id_to_index)
        g._chan_seq = self._chan_seq
        return g

    # ------------------------------------------------------------------
    # queries
    # ------------------------------------------------------------------

    def connected_components(self) -> list[list[int]]:
        """Components of the undirected channel graph, each sorted ascending."""
        seen = bytearray(self.n_nodes)
        comps = []
        for start in range(self.n_nodes):
            if seen[start]:
                continue
            seen[start] = 1
            comp = [start]
            stack = [start]
            while stack:
                u = stack.pop()
                for e in self.out_edges[u]:
                    w = self._edge_dst[e]
                    if not seen[w]:
                        seen[w] = 1
                        comp.append(w)
                        stack.append(w)
            comps.append(sorted(comp))
        return comps

    def median_fee_policy(self) -> FeePolicy:
        """Component-wise lower median of (base fee, fee rate) over all edges."""
        if self._n_edges == 0:
            raise GraphValidationError("median fee of an edgeless graph")
        k = (self._n_edges - 1) // 2
        base = sorted(self._edge_base)[k]
        rate = sorted(self._edge_rate)[k]
        return FeePolicy(base, rate)

    def csr(self):
        """Cached CSR topology arrays for the routing kernel.

        Returns (indptr, eidx, edge_src, edge_dst, edge_base, edge_rate);
        eidx lists out-edge indices grouped by source node, ascending.
        The balance array is deliberately not part of the cache.
        """
        if self._csr_cache is None:
            n = self.n_nodes
            indptr = np.zeros(n + 1, dtype=np.int64)
            for u in range(n):
                indptr[u + 1] = indptr[u] + len(self.out_edges[u])
            eidx = np.empty(self._n_edges, dtype=np.int64)
            pos = 0
            for u in range(n):
                for e in sorted(self.out_edges[u]):
                    eidx[pos] = e
                    pos += 1
            self._csr_cache = (
                indptr,
                eidx,
                np.array(self._edge_src, dtype=np.int64),
                np.array(self._edge_dst, dtype=np.int64),
                np.array(self._edge_base, dtype=np.int64),
                np.array(self._edge_rate, dtype=np.float64),
            )
        return self._csr_cache


# ----------------------------------------------------------------------
# snapshot document I/O
# ----------------------------------------------------------------------

Source = Union[bytes, str, IO]


def _fail(kind: str, what: str) -> SnapshotParseError:
    return SnapshotParseError(f"{kind}: {what}")


def load_snapshot(source: Source) -> ChannelGraph:
    """Build a ChannelGraph from a snapshot document.

    The document lists nodes (id, provider flag) and channels (endpoints,
    capacity, optional per-side balances and fee policies).  When a channel
    states only its capacity the balance is split 50/50.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise SnapshotParseError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise _fail("malformed document", "top level must be an object")
    graph = ChannelGraph()
    for rec in doc.get("nodes", []):
        if not isinstance(rec, dict) or "id" not in rec:
            raise _fail("malformed node record", repr(rec))
        graph.add_node(str(rec["id"]), bool(rec.get("provider", False)))
    seen_channels: set[str] = set()
    for rec in doc.get("channels", []):
        if not isinstance(rec, dict):
            raise _fail("malformed channel record", repr(rec))
        try:
            cid = str(rec["id"])
            a_id, b_id = str(rec["a"]), str(rec["b"])
            capacity = int(rec["capacity_msat"])
        except (KeyError, TypeError, ValueError) as exc:
            raise _fail("malformed channel record", repr(rec)) from exc
        if cid in seen_channels:
            raise GraphValidationError(f"duplicate channel id {cid!r}")
        seen_channels.add(cid)
        if a_id not in graph._id_to_index or b_id not in graph._id_to_index:
            missing = a_id if a_id not in graph._id_to_index else b_id
            raise GraphValidationError(
                f"channel {cid!r} references unknown node {missing!r}")
        if capacity <= 0:
            raise GraphValidationError(f"channel {cid!r} has capacity {capacity}")
        if "balance_a_msat" in rec:
            bal_a = int(rec["balance_a_msat"])
            if not 0 <= bal_a <= capacity:
                raise GraphValidationError(
                    f"channel {cid!r} balance {bal_a} outside [0, {capacity}]")
        else:
            bal_a = capacity // 2
        pol_a = FeePolicy(int(rec.get("base_fee_a_msat", 0)),
                          float(rec.get("fee_rate_a", 0.0)))
        pol_b = FeePolicy(int(rec.get("base_fee_b_msat", 0)),
                          float(rec.get("fee_rate_b", 0.0)))
        u, v = graph.index_of(a_id), graph.index_of(b_id)
        if u == v:
            raise GraphValidationError(f"channel {cid!r} is a self-channel")
        graph.add_channel(u, v, bal_a, capacity - bal_a, pol_a, pol_b,
                          channel_id=cid)
    return graph


def dump_snapshot(graph: ChannelGraph) -> str:
    """Serialize to the snapshot document format, bit-stably.

    Nodes and channels are sorted by id; balances and fee policies are always
    written out, so load(dump(g)) reproduces g exactly.
    """
    nodes = [{"id": n.node_id, "provider": n.is_provider}
             for n in sorted(graph.nodes, key=lambda n: n.node_id)]
    channels = []
    for k in range(graph.n_channels):
        e = 2 * k
        channels.append({
            "id": graph._edge_channel[e],
            "a": graph.nodes[graph._edge_src[e]].node_id,
            "b": graph.nodes[graph._edge_dst[e]].node_id,
            "capacity_msat": graph.channel_capacity(e),
            "balance_a_msat": int(graph._bal[e]),
            "base_fee_a_msat": graph._edge_base[e],
            "fee_rate_a": graph._edge_rate[e],
            "base_fee_b_msat": graph._edge_base[e + 1],
            "fee_rate_b": graph._edge_rate[e + 1],
        })
    channels.sort(key=lambda c: (c["id"], c["a"], c["b"]))
    doc = {"nodes": nodes, "channels": channels}
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def load_snapshot_file(path) -> ChannelGraph:
    with open(path, "rb") as fh:
        return load_snapshot(fh)


def save_snapshot_file(graph: ChannelGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_snapshot(graph))
