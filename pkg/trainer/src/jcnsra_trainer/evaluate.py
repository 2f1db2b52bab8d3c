"""Checkpoint evaluation over fresh episodes: mean/std of final-step rewards.

Node selection is sampled from the policy with a generator seeded per
episode, and that stream is independent of the allocation mode, so runs that
differ only in `allocation` are exactly paired: they visit the same episodes
and draw the same node sequences, isolating the allocation head's effect.
"""

from __future__ import annotations

import argparse

import numpy as np
import torch

from .client import RemoteEnv
from .model import PolicyNetwork
from .train import load_checkpoint

ALLOCATION_MODES = ("sampled", "argmax", "uniform")


@torch.no_grad()
def policy_action(model: PolicyNetwork, obs: torch.Tensor, allocation: str,
                  gen_node: torch.Generator | None = None,
                  gen_bucket: torch.Generator | None = None) -> tuple[int, int]:
    """One evaluation action.

    allocation: "sampled" draws a bucket from the head, "argmax" takes its
    mode, "uniform" pins bucket 1 (the ablation).
    """
    node_logits, bucket_logits, _ = model(obs)
    node_probs = torch.softmax(node_logits, dim=-1)
    node = int(torch.multinomial(node_probs, 1, generator=gen_node))
    if allocation == "uniform":
        bucket = 1
    elif allocation == "argmax":
        bucket = int(bucket_logits.argmax()) + 1
    elif allocation == "sampled":
        bucket_probs = torch.softmax(bucket_logits, dim=-1)
        bucket = int(torch.multinomial(bucket_probs, 1,
                                       generator=gen_bucket)) + 1
    else:
        raise ValueError(f"allocation must be one of {ALLOCATION_MODES}")
    return node, bucket


def evaluate(env: RemoteEnv, model: PolicyNetwork, episode_seeds,
             allocation: str = "sampled", torch_seed: int = 0) -> list[float]:
    """Final-step rewards over the given episodes."""
    model.eval()
    finals = []
    for seed in episode_seeds:
        gen_node = torch.Generator().manual_seed(2 * (torch_seed + int(seed)))
        gen_bucket = torch.Generator().manual_seed(
            2 * (torch_seed + int(seed)) + 1)
        obs = env.reset(int(seed))
        done = False
        reward = 0.0
        while not done:
            obs_t = torch.as_tensor(obs, dtype=torch.float32)
            node, bucket = policy_action(model, obs_t, allocation,
                                         gen_node, gen_bucket)
            obs, reward, done, _ = env.step(node, bucket)
        finals.append(reward)
    return finals


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, required=True)
    parser.add_argument("--checkpoint", required=True)
    parser.add_argument("--episodes", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--allocation", choices=ALLOCATION_MODES,
                        default="sampled")
    args = parser.parse_args(argv)
    model, _ = load_checkpoint(args.checkpoint)
    with RemoteEnv(args.host, args.port) as env:
        rewards = np.asarray(evaluate(
            env, model, range(args.seed, args.seed + args.episodes),
            allocation=args.allocation))
    print(f"episodes={rewards.size} mean={rewards.mean():.6f} "
          f"std={rewards.std(ddof=1) if rewards.size > 1 else 0.0:.6f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
