"""Rollout collection and the PPO training loop against remote environments.

Writes periodic self-describing checkpoints (weights + both configs) and a
plain-text reward curve (`env_steps mean_final_reward` per line).
"""

from __future__ import annotations

import argparse
import time
from dataclasses import asdict
from pathlib import Path

import torch
from torch.distributions import Categorical

from .client import RemoteEnv
from .model import ModelConfig, PolicyNetwork
from .ppo import TrainConfig, TrajectoryBatch, compute_gae, ppo_update


def save_checkpoint(path, model: PolicyNetwork, train_cfg: TrainConfig,
                    env_steps: int = 0) -> None:
    torch.save({
        "model_state": model.state_dict(),
        "model_config": asdict(model.cfg),
        "train_config": asdict(train_cfg),
        "env_steps": env_steps,
    }, path)


def load_checkpoint(path) -> tuple[PolicyNetwork, TrainConfig]:
    blob = torch.load(path, weights_only=False)
    model = PolicyNetwork(ModelConfig(**blob["model_config"]))
    model.load_state_dict(blob["model_state"])
    return model, TrainConfig(**blob["train_config"])


@torch.no_grad()
def sample_action(model: PolicyNetwork, obs: torch.Tensor,
                  uniform_allocation: bool):
    """Sample (node, bucket) and return them with joint log-prob and value."""
    node_logits, bucket_logits, value = model(obs)
    node_dist = Categorical(logits=node_logits)
    node = node_dist.sample()
    log_prob = node_dist.log_prob(node)
    if uniform_allocation:
        bucket = torch.tensor(1)
    else:
        bucket_dist = Categorical(logits=bucket_logits)
        drawn = bucket_dist.sample()
        log_prob = log_prob + bucket_dist.log_prob(drawn)
        bucket = drawn + 1
    return int(node), int(bucket), float(log_prob), float(value)


def collect_batch(envs: list[RemoteEnv], model: PolicyNetwork,
                  cfg: TrainConfig, seed_start: int):
    """Play episodes round-robin over the connections; returns the batch,
    the per-episode final-step rewards, and the environment step count."""
    obs_buf, node_buf, bucket_buf = [], [], []
    logp_buf, reward_buf, value_buf, done_buf = [], [], [], []
    final_rewards = []
    steps = 0
    for episode in range(cfg.episodes_per_batch):
        env = envs[episode % len(envs)]
        obs = env.reset(seed_start + episode)
        done = False
        reward = 0.0
        while not done:
            obs_t = torch.as_tensor(obs, dtype=torch.float32)
            node, bucket, log_prob, value = sample_action(
                model, obs_t, cfg.uniform_allocation)
            next_obs, reward, done, _ = env.step(node, bucket)
            obs_buf.append(obs_t)
            node_buf.append(node)
            bucket_buf.append(bucket)
            logp_buf.append(log_prob)
            reward_buf.append(reward)
            value_buf.append(value)
            done_buf.append(done)
            obs = next_obs
            steps += 1
        final_rewards.append(reward)
    batch = TrajectoryBatch(
        observations=torch.stack(obs_buf),
        nodes=torch.as_tensor(node_buf),
        buckets=torch.as_tensor(bucket_buf),
        log_probs=torch.as_tensor(logp_buf, dtype=torch.float32),
        rewards=torch.as_tensor(reward_buf, dtype=torch.float32),
        values=torch.as_tensor(value_buf, dtype=torch.float32),
        dones=torch.as_tensor(done_buf),
    )
    batch.advantages, batch.returns = compute_gae(
        batch.rewards, batch.values, batch.dones, cfg.gamma, cfg.gae_lambda)
    return batch, final_rewards, steps


def train(envs: list[RemoteEnv], cfg: TrainConfig, out_dir,
          max_env_steps: int = 100_000, model: PolicyNetwork | None = None,
          seed: int = 0, checkpoint_every: int = 10,
          stop_fn=None) -> tuple[PolicyNetwork, list[tuple[int, float]]]:
    """PPO against one or more protocol connections.

    Stops at the step budget or when stop_fn(history) returns True; the
    history is a list of (env_steps_so_far, batch mean final-step reward).
    """
    cfg.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(seed)
    if model is None:
        model = PolicyNetwork(ModelConfig(n_buckets=envs[0].n_buckets))
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    curve = out / "reward_curve.log"
    history: list[tuple[int, float]] = []
    env_steps = 0
    iteration = 0
    t0 = time.time()
    with curve.open("w") as log:
        while env_steps < max_env_steps:
            batch, finals, steps = collect_batch(
                envs, model, cfg, seed_start=seed + 1_000_000 + env_steps)
            env_steps += steps
            ppo_update(model, optimizer, batch, cfg)
            mean_final = sum(finals) / len(finals)
            history.append((env_steps, mean_final))
            log.write(f"{env_steps} {mean_final:.6f}\n")
            log.flush()
            iteration += 1
            if iteration % checkpoint_every == 0:
                save_checkpoint(out / f"checkpoint_{env_steps:08d}.pt",
                                model, cfg, env_steps)
            if stop_fn is not None and stop_fn(history):
                break
    save_checkpoint(out / "checkpoint_final.pt", model, cfg, env_steps)
    elapsed = time.time() - t0
    with (out / "train_summary.txt").open("w") as fh:
        fh.write(f"env_steps={env_steps} batches={iteration} "
                 f"elapsed_s={elapsed:.1f}\n")
    return model, history


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, required=True)
    parser.add_argument("--connections", type=int, default=1)
    parser.add_argument("--max-env-steps", type=int, default=100_000)
    parser.add_argument("--episodes-per-batch", type=int, default=64)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--uniform-allocation", action="store_true")
    parser.add_argument("--out", default="runs/latest")
    args = parser.parse_args(argv)
    cfg = TrainConfig(episodes_per_batch=args.episodes_per_batch,
                      uniform_allocation=args.uniform_allocation)
    envs = [RemoteEnv(args.host, args.port) for _ in range(args.connections)]
    try:
        _, history = train(envs, cfg, args.out,
                           max_env_steps=args.max_env_steps, seed=args.seed)
    finally:
        for env in envs:
            env.close()
    print(f"trained {history[-1][0]} env steps; "
          f"last batch mean final reward {history[-1][1]:.4f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
