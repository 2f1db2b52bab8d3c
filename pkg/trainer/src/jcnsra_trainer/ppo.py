"""PPO with a clipped surrogate over the joint (node, bucket) action.

The joint log-probability is the sum of the node-selection and bucket
log-probabilities; in the uniform-allocation ablation the bucket is pinned
to 1 and contributes nothing.  Advantages come from generalized advantage
estimation and are normalized per batch before updates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
from torch.distributions import Categorical

from .model import PolicyNetwork


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    learning_rate: float = 3e-4
    epochs_per_batch: int = 4
    episodes_per_batch: int = 64
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    uniform_allocation: bool = False

    def validate(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")
        if self.clip_eps <= 0:
            raise ValueError("clip_eps must be positive")


@dataclass
class TrajectoryBatch:
    """Flat per-timestep storage for one rollout batch."""
    observations: torch.Tensor      # (T, N, F)
    nodes: torch.Tensor             # (T,)
    buckets: torch.Tensor           # (T,)
    log_probs: torch.Tensor         # (T,)  joint, at collection time
    rewards: torch.Tensor           # (T,)
    values: torch.Tensor            # (T,)
    dones: torch.Tensor             # (T,) bool
    advantages: torch.Tensor = field(default=None)
    returns: torch.Tensor = field(default=None)


def compute_gae(rewards: torch.Tensor, values: torch.Tensor,
                dones: torch.Tensor, gamma: float,
                lam: float) -> tuple[torch.Tensor, torch.Tensor]:
    """Generalized advantage estimation over concatenated episodes.

    Episodes terminate where dones is True; terminal bootstrap value is 0.
    Returns (advantages, returns) with returns = advantages + values.
    """
    T = rewards.shape[0]
    advantages = torch.zeros_like(rewards)
    gae = 0.0
    for t in range(T - 1, -1, -1):
        if dones[t]:
            next_value = 0.0
            gae = 0.0
        else:
            next_value = values[t + 1]
        delta = rewards[t] + gamma * next_value - values[t]
        gae = delta + gamma * lam * (0.0 if dones[t] else gae)
        advantages[t] = gae
    return advantages, advantages + values


def joint_log_prob(model: PolicyNetwork, observations: torch.Tensor,
                   nodes: torch.Tensor, buckets: torch.Tensor,
                   uniform_allocation: bool = False):
    """Log p(node) [+ log p(bucket)] plus entropy and values for a batch."""
    node_logits, bucket_logits, values = model(observations)
    node_dist = Categorical(logits=node_logits)
    log_probs = node_dist.log_prob(nodes)
    entropy = node_dist.entropy()
    if not uniform_allocation:
        bucket_dist = Categorical(logits=bucket_logits)
        log_probs = log_probs + bucket_dist.log_prob(buckets - 1)
        entropy = entropy + bucket_dist.entropy()
    return log_probs, entropy, values


def clipped_surrogate(log_probs: torch.Tensor, old_log_probs: torch.Tensor,
                      advantages: torch.Tensor, clip_eps: float) -> torch.Tensor:
    ratio = torch.exp(log_probs - old_log_probs)
    clipped = torch.clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps)
    return torch.minimum(ratio * advantages, clipped * advantages).mean()


def ppo_update(model: PolicyNetwork, optimizer: torch.optim.Optimizer,
               batch: TrajectoryBatch, cfg: TrainConfig) -> dict:
    """Run cfg.epochs_per_batch full-batch updates; returns loss diagnostics."""
    cfg.validate()
    adv = batch.advantages
    adv = (adv - adv.mean()) / (adv.std(unbiased=False) + 1e-8)
    diagnostics = {}
    for _ in range(cfg.epochs_per_batch):
        log_probs, entropy, values = joint_log_prob(
            model, batch.observations, batch.nodes, batch.buckets,
            cfg.uniform_allocation)
        surrogate = clipped_surrogate(log_probs, batch.log_probs, adv,
                                      cfg.clip_eps)
        value_loss = torch.mean((values - batch.returns) ** 2)
        loss = -surrogate + cfg.value_coef * value_loss \
            - cfg.entropy_coef * entropy.mean()
        if not torch.isfinite(loss):
            raise RuntimeError(f"non-finite loss: surrogate={surrogate}, "
                               f"value_loss={value_loss}")
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        diagnostics = {
            "loss": float(loss.detach()),
            "surrogate": float(surrogate.detach()),
            "value_loss": float(value_loss.detach()),
            "entropy": float(entropy.mean().detach()),
        }
    return diagnostics
