"""The channel-placement decision environment.

Each episode draws a fresh forest-fire sample of the snapshot, attaches a new
agent node, and runs one warm-up traffic step so the flow feature is
populated at t=1.  Every step the agent picks a candidate node and a discrete
budget share; the full action history is renormalized over the budget, the
agent's channels are torn down and re-opened at the new allocations, one
traffic step runs, and the reward is the agent's fee revenue that step
divided by a normalization constant.  An episode has exactly
``episode_length`` steps.

The observation is a (candidates x 4) matrix of
[normalized degree, provider flag, normalized forwarded volume, normalized
allocated share]; the agent's own row is not part of it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from random import Random
from typing import Union

import numpy as np

from .graph import ChannelGraph, FeePolicy
from .routing import (FlowConfig, FlowRecord, Transaction,
                      generate_transactions, run_transactions)
from .sampling import SampleConfig, forest_fire_sample

AGENT_NODE_ID = "__agent__"


@dataclass(frozen=True)
class Action:
    node: int
    bucket: int


@dataclass
class AllocationState:
    """Action history plus the budget split it currently implies."""
    history: list[tuple[int, int]]
    allocations: dict[int, int]


@dataclass
class StepOutcome:
    observation: np.ndarray
    reward: float
    done: bool
    info: dict


@dataclass(frozen=True)
class EnvConfig:
    sample: SampleConfig
    flow: FlowConfig = field(default_factory=FlowConfig)
    episode_length: int = 5
    buckets: int = 10
    budget_msat: int = 10**10
    agent_policy: Union[FeePolicy, str] = "median"
    reward_norm_msat: int = 10**6

    def validate(self) -> None:
        self.sample.validate()
        self.flow.validate()
        if self.episode_length < 1:
            raise ValueError("episode_length must be >= 1")
        if self.buckets < 1:
            raise ValueError("buckets must be >= 1")
        if self.budget_msat <= 0:
            raise ValueError("budget must be positive")
        if self.reward_norm_msat <= 0:
            raise ValueError("reward_norm must be positive")
        if isinstance(self.agent_policy, FeePolicy):
            self.agent_policy.validate()
        elif self.agent_policy != "median":
            raise ValueError(f"agent_policy must be 'median' or a FeePolicy, "
                             f"got {self.agent_policy!r}")

    def to_dict(self) -> dict:
        pol = self.agent_policy
        return {
            "sample": {
                "target_size": self.sample.target_size,
                "p_forward": self.sample.p_forward,
                "max_restarts": self.sample.max_restarts,
                "seed": self.sample.seed,
            },
            "flow": {
                "amounts_msat": list(self.flow.amounts_msat),
                "count_per_amount": self.flow.count_per_amount,
                "provider_bias": self.flow.provider_bias,
            },
            "episode_length": self.episode_length,
            "buckets": self.buckets,
            "budget_msat": self.budget_msat,
            "agent_policy": pol if isinstance(pol, str) else {
                "base_fee_msat": pol.base_fee_msat, "fee_rate": pol.fee_rate},
            "reward_norm_msat": self.reward_norm_msat,
        }

    @classmethod
    def from_dict(cls, doc: dict, base: "EnvConfig | None" = None) -> "EnvConfig":
        """Build a config from a document, optionally overriding ``base``.

        Keys mirror the field names; nested sample/flow documents may be
        partial when a base is given.
        """
        merged = base.to_dict() if base is not None else cls._defaults_dict()
        for key, value in doc.items():
            if key in ("sample", "flow"):
                if not isinstance(value, dict):
                    raise ValueError(f"{key} must be an object")
                merged[key].update(value)
            elif key in merged:
                merged[key] = value
            else:
                raise ValueError(f"unknown config key {key!r}")
        pol = merged["agent_policy"]
        if isinstance(pol, dict):
            pol = FeePolicy(int(pol["base_fee_msat"]), float(pol["fee_rate"]))
        cfg = cls(
            sample=SampleConfig(
                target_size=int(merged["sample"]["target_size"]),
                p_forward=float(merged["sample"]["p_forward"]),
                max_restarts=int(merged["sample"]["max_restarts"]),
                seed=int(merged["sample"]["seed"]),
            ),
            flow=FlowConfig(
                amounts_msat=tuple(int(a) for a in merged["flow"]["amounts_msat"]),
                count_per_amount=int(merged["flow"]["count_per_amount"]),
                provider_bias=float(merged["flow"]["provider_bias"]),
            ),
            episode_length=int(merged["episode_length"]),
            buckets=int(merged["buckets"]),
            budget_msat=int(merged["budget_msat"]),
            agent_policy=pol,
            reward_norm_msat=int(merged["reward_norm_msat"]),
        )
        cfg.validate()
        return cfg

    @staticmethod
    def _defaults_dict() -> dict:
        return {
            "sample": {"target_size": 50, "p_forward": 0.7,
                       "max_restarts": 100, "seed": 0},
            "flow": {"amounts_msat": [10_000_000, 50_000_000, 100_000_000],
                     "count_per_amount": 200, "provider_bias": 0.8},
            "episode_length": 5,
            "buckets": 10,
            "budget_msat": 10**10,
            "agent_policy": "median",
            "reward_norm_msat": 10**6,
        }


def normalize_allocations(history: list[tuple[int, int]], buckets: int,
                          budget_msat: int) -> dict[int, int]:
    """Turn the (node, bucket) history into per-node budget shares.

    Each tuple receives bucket/sum(buckets) of the budget (floored to whole
    msat); shares of a node picked multiple times aggregate, and the rounding
    residual goes to the node of the last tuple, so the shares sum to the
    budget exactly.  Scaling every bucket by the same factor leaves the
    result unchanged.
    """
    if not history:
        raise ValueError("empty action history")
    total = 0
    for node, bucket in history:
        if not 1 <= bucket <= buckets:
            raise ValueError(f"bucket {bucket} outside [1, {buckets}]")
        total += bucket
    shares: dict[int, int] = {}
    assigned = 0
    for node, bucket in history:
        part = bucket * budget_msat // total
        shares[node] = shares.get(node, 0) + part
        assigned += part
    shares[history[-1][0]] += budget_msat - assigned
    return shares


def build_observation(graph: ChannelGraph, volumes: list[int],
                      allocations: dict[int, int], n_rows: int) -> np.ndarray:
    """Per-node feature matrix over the first ``n_rows`` nodes.

    Degree is the channel count over (graph size - 1); volume and allocated
    share are max-normalized over the emitted rows, with all-zero columns
    left at zero.
    """
    norm = max(graph.n_nodes - 1, 1)
    deg = np.fromiter((graph.degree(i) for i in range(n_rows)),
                      dtype=np.float64, count=n_rows) / norm
    prov = np.fromiter((1.0 if graph.nodes[i].is_provider else 0.0
                        for i in range(n_rows)), dtype=np.float64, count=n_rows)
    vol = np.asarray(volumes[:n_rows], dtype=np.float64)
    vmax = vol.max(initial=0.0)
    if vmax > 0:
        vol = vol / vmax
    alloc = np.zeros(n_rows, dtype=np.float64)
    for node, c in allocations.items():
        if node < n_rows:
            alloc[node] = c
    amax = alloc.max(initial=0.0)
    if amax > 0:
        alloc = alloc / amax
    return np.column_stack([deg, prov, vol, alloc])


class JcnsraEnv:
    """Steppable episode state machine over a shared immutable snapshot.

    One instance is single-threaded; run several instances concurrently for
    vectorized rollouts.  (config, seed, action sequence) fully determines
    every outcome.
    """

    def __init__(self, snapshot: ChannelGraph, config: EnvConfig):
        config.validate()
        self.parent = snapshot
        self.config = config
        self.graph: ChannelGraph | None = None
        self.agent_index = -1
        self.t = 0
        self.done = False
        self.history: list[tuple[int, int]] = []
        self.allocations: dict[int, int] = {}
        self.last_flow: FlowRecord | None = None
        self.last_transactions: list[Transaction] = []
        self.agent_policy: FeePolicy | None = None
        self.episode_seed: int | None = None

    @property
    def candidate_count(self) -> int:
        if self.graph is None:
            return self.config.sample.target_size
        return self.graph.n_nodes - 1

    @property
    def allocation_state(self) -> AllocationState:
        return AllocationState(list(self.history), dict(self.allocations))

    def reset(self, seed: int | None = None) -> np.ndarray:
        cfg = self.config
        if seed is None:
            seed = cfg.sample.seed
        self.episode_seed = seed
        graph = forest_fire_sample(self.parent, replace(cfg.sample, seed=seed))
        self.agent_index = graph.add_node(AGENT_NODE_ID, False)
        self.graph = graph
        if isinstance(cfg.agent_policy, FeePolicy):
            self.agent_policy = cfg.agent_policy
        else:
            self.agent_policy = graph.median_fee_policy()
        self._flow_rng = Random(f"flow:{seed}")
        self.history = []
        self.allocations = {}
        self.t = 0
        self.done = False
        self.last_transactions = generate_transactions(
            graph, cfg.flow, self._flow_rng, exclude=self.agent_index)
        self.last_flow = run_transactions(graph, self.last_transactions)
        return build_observation(graph, self.last_flow.node_volume_msat,
                                 self.allocations, self.candidate_count)

    def apply_action(self, node: int, bucket: int) -> "ChannelGraph":
        """Append the action, renormalize the budget, re-open agent channels.

        step() calls this before simulating traffic; calling it directly is
        for replay and inspection.  Returns the episode graph.
        """
        graph = self.graph
        self.history.append((node, bucket))
        self.allocations = normalize_allocations(
            self.history, self.config.buckets, self.config.budget_msat)
        graph.remove_channels_of(self.agent_index)
        for peer in sorted(self.allocations):
            funding = self.allocations[peer]
            if funding > 0:
                graph.add_channel(self.agent_index, peer, funding, funding,
                                  self.agent_policy, self.agent_policy)
        return graph

    def step(self, action) -> StepOutcome:
        if self.graph is None:
            raise RuntimeError("reset() must be called before step()")
        if self.done:
            raise RuntimeError("episode is done; reset() to start a new one")
        node, bucket = (action.node, action.bucket) \
            if isinstance(action, Action) else (int(action[0]), int(action[1]))
        if not 0 <= node < self.candidate_count:
            raise IndexError(f"node {node} outside [0, {self.candidate_count})")
        if not 1 <= bucket <= self.config.buckets:
            raise ValueError(f"bucket {bucket} outside [1, {self.config.buckets}]")

        self.apply_action(node, bucket)
        graph = self.graph
        self.last_transactions = generate_transactions(
            graph, self.config.flow, self._flow_rng, exclude=self.agent_index)
        flow = run_transactions(graph, self.last_transactions)
        self.last_flow = flow
        revenue = flow.node_fees_msat[self.agent_index]
        self.t += 1
        self.done = self.t >= self.config.episode_length
        obs = build_observation(graph, flow.node_volume_msat,
                                self.allocations, self.candidate_count)
        info = {
            "revenue_msat": revenue,
            "failed": flow.failed,
            "channels_open": graph.degree(self.agent_index),
        }
        return StepOutcome(obs, revenue / self.config.reward_norm_msat,
                           self.done, info)
