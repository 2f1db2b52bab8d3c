"""Set-transformer policy over per-node feature vectors.

The encoder projects each node's 4 features to width d, appends two learned
placeholder tokens (one for the allocation head, one for the state/value
head), and runs post-norm transformer blocks: multi-head self-attention and
a two-layer ReLU feed-forward, each wrapped in residual + LayerNorm.  No
positional embeddings anywhere, so node embeddings are permutation
equivariant and the placeholder tokens permutation invariant.

Heads: a row-wise scorer over node embeddings (node logits), an allocation
scorer over the allocation token (bucket logits), and a critic over the
state token (value).
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass(frozen=True)
class ModelConfig:
    d_model: int = 32
    n_blocks: int = 4
    n_heads: int = 4
    ff_mult: int = 4
    n_buckets: int = 10
    n_features: int = 4


class EncoderBlock(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.attn = nn.MultiheadAttention(cfg.d_model, cfg.n_heads,
                                          batch_first=True)
        self.norm1 = nn.LayerNorm(cfg.d_model)
        hidden = cfg.ff_mult * cfg.d_model
        self.ff = nn.Sequential(
            nn.Linear(cfg.d_model, hidden), nn.ReLU(),
            nn.Linear(hidden, cfg.d_model))
        self.norm2 = nn.LayerNorm(cfg.d_model)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        attended, _ = self.attn(x, x, x, need_weights=False)
        x = self.norm1(x + attended)
        return self.norm2(x + self.ff(x))


class PolicyNetwork(nn.Module):
    """Shared trunk with node-selection, allocation, and value heads."""

    def __init__(self, cfg: ModelConfig = ModelConfig()):
        super().__init__()
        self.cfg = cfg
        self.input_proj = nn.Linear(cfg.n_features, cfg.d_model)
        self.placeholders = nn.Parameter(torch.randn(2, cfg.d_model) * 0.02)
        self.blocks = nn.ModuleList(EncoderBlock(cfg)
                                    for _ in range(cfg.n_blocks))
        self.scoring_head = nn.Sequential(
            nn.Linear(cfg.d_model, cfg.d_model), nn.ReLU(),
            nn.Linear(cfg.d_model, 1))
        self.allocation_head = nn.Sequential(
            nn.Linear(cfg.d_model, cfg.d_model), nn.ReLU(),
            nn.Linear(cfg.d_model, cfg.n_buckets))
        self.value_head = nn.Sequential(
            nn.Linear(cfg.d_model, cfg.d_model), nn.ReLU(),
            nn.Linear(cfg.d_model, 1))

    def encode(self, observation: torch.Tensor) -> torch.Tensor:
        """(B, N, F) features -> (B, N+2, d) embeddings.

        The allocation token sits at position N, the state token at N+1.
        """
        if not torch.isfinite(observation).all():
            raise ValueError("observation contains non-finite values")
        x = self.input_proj(observation)
        tokens = self.placeholders.unsqueeze(0).expand(x.shape[0], -1, -1)
        x = torch.cat([x, tokens.to(x.dtype)], dim=1)
        for block in self.blocks:
            x = block(x)
        return x

    def forward(self, observation: torch.Tensor):
        """Returns (node_logits (B, N), bucket_logits (B, K), value (B,))."""
        squeeze = observation.dim() == 2
        if squeeze:
            observation = observation.unsqueeze(0)
        h = self.encode(observation)
        node_logits = self.scoring_head(h[:, :-2, :]).squeeze(-1)
        bucket_logits = self.allocation_head(h[:, -2, :])
        value = self.value_head(h[:, -1, :]).squeeze(-1)
        if squeeze:
            return node_logits[0], bucket_logits[0], value[0]
        return node_logits, bucket_logits, value
