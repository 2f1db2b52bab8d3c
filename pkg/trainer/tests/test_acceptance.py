"""Trainer acceptance: one test per criterion, each printing a pass/fail line.

Criterion 13 trains a policy against a live simulator subprocess and then
runs a paired 1000-episode evaluation; expect a few minutes on two cores.
"""

import subprocess
import sys

import numpy as np
import torch

from jcnsra_trainer import (ModelConfig, PolicyNetwork, TrainConfig,
                            clipped_surrogate, joint_log_prob, train)
from jcnsra_trainer.evaluate import evaluate

from test_ppo import tiny_batch


def report(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    print(line, flush=True)
    assert ok, line


def test_criterion_11_policy_permutation_equivariance():
    torch.manual_seed(11)
    model = PolicyNetwork()   # paper-size: 4 blocks, 4 heads, d=32
    model.eval()
    worst_node = worst_alloc = worst_value = 0.0
    for trial in range(100):
        n = int(torch.randint(5, 40, ()))
        obs = torch.rand(n, 4)
        perm = torch.randperm(n)
        with torch.no_grad():
            node_logits, bucket_logits, value = model(obs)
            p_node_logits, p_bucket_logits, p_value = model(obs[perm])
        probs = torch.softmax(node_logits, dim=-1)
        p_probs = torch.softmax(p_node_logits, dim=-1)
        worst_node = max(worst_node,
                         float((p_probs - probs[perm]).abs().max()))
        worst_alloc = max(worst_alloc,
                          float((p_bucket_logits - bucket_logits).abs().max()))
        worst_value = max(worst_value, float((p_value - value).abs()))
    ok = worst_node < 1e-6 and worst_alloc < 1e-6 and worst_value < 1e-6
    report(11, ok, f"100 observations/permutations: max node-prob deviation "
                   f"{worst_node:.2e}, allocation {worst_alloc:.2e}, "
                   f"value {worst_value:.2e} (all < 1e-6)")


def test_criterion_12_surrogate_gradient_and_ratio_one():
    torch.manual_seed(12)
    model = PolicyNetwork(ModelConfig(d_model=4, n_blocks=1, n_heads=1,
                                      n_buckets=2)).double()
    batch = tiny_batch(model)
    adv = batch.advantages
    adv = (adv - adv.mean()) / (adv.std(unbiased=False) + 1e-8)

    # at the old policy the ratio is one and the surrogate is the mean advantage
    logp, _, _ = joint_log_prob(model, batch.observations, batch.nodes,
                                batch.buckets)
    with torch.no_grad():
        at_old = clipped_surrogate(logp, logp.clone(), adv, 0.2)
    ratio_one_ok = abs(float(at_old) - float(adv.mean())) < 1e-10

    # move the policy off the batch, then finite-difference the surrogate
    opt = torch.optim.SGD(model.parameters(), lr=0.05)
    for _ in range(3):
        logp, _, _ = joint_log_prob(model, batch.observations, batch.nodes,
                                    batch.buckets)
        loss = -clipped_surrogate(logp, batch.log_probs, adv, 0.2)
        opt.zero_grad()
        loss.backward()
        opt.step()

    def surrogate():
        logp, _, _ = joint_log_prob(model, batch.observations, batch.nodes,
                                    batch.buckets)
        return clipped_surrogate(logp, batch.log_probs, adv, 0.2)

    grads = torch.autograd.grad(surrogate(), list(model.parameters()),
                                allow_unused=True)
    eps = 1e-6
    worst_rel = 0.0
    checked = 0
    for param, grad in zip(model.parameters(), grads):
        if grad is None:
            continue
        flat, gflat = param.data.view(-1), grad.view(-1)
        idx = int(torch.argmax(gflat.abs()))
        if float(gflat[idx].abs()) < 1e-7:
            continue
        original = float(flat[idx])
        with torch.no_grad():
            flat[idx] = original + eps
            up = float(surrogate())
            flat[idx] = original - eps
            down = float(surrogate())
            flat[idx] = original
        fd = (up - down) / (2 * eps)
        worst_rel = max(worst_rel, abs(fd - float(gflat[idx])) / abs(fd))
        checked += 1
    ok = ratio_one_ok and checked >= 10 and worst_rel < 1e-4
    report(12, ok, f"ratio-1 surrogate equals mean advantage: {ratio_one_ok}; "
                   f"finite differences on {checked} parameters, worst "
                   f"relative error {worst_rel:.2e} (< 1e-4)")


def test_criterion_13_desk_scale_learning(server, snapshot_path,
                                          desk_config_path, tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "pcnsim.cli", "eval", "--snapshot",
         snapshot_path, "--policy", "random", "--config", desk_config_path,
         "--nodes", "20", "--channels", "3", "--episodes", "300",
         "--seed", "5000", "--jobs", "2"],
        capture_output=True, check=True, text=True, timeout=300)
    random_mean = float(out.stdout.split("mean=")[1].split()[0])

    envs = [server.connect(), server.connect()]
    try:
        cfg = TrainConfig(episodes_per_batch=48)

        def stop(history):
            if history[-1][0] < 12_000 or len(history) < 3:
                return False
            return np.mean([h[1] for h in history[-3:]]) >= 2.0 * random_mean

        model, history = train(envs, cfg, tmp_path / "run",
                               max_env_steps=100_000, seed=0, stop_fn=stop)
        env_steps = history[-1][0]
        within_budget = env_steps <= 100_000

        finals = evaluate(envs[0], model, range(8000, 8300),
                          allocation="sampled", torch_seed=1)
        learned_mean = float(np.mean(finals))
        ratio = learned_mean / random_mean

        full = evaluate(envs[0], model, range(9000, 10000),
                        allocation="argmax", torch_seed=2)
        ablation = evaluate(envs[1], model, range(9000, 10000),
                            allocation="uniform", torch_seed=2)
    finally:
        for env in envs:
            env.close()
    full_mean = float(np.mean(full))
    ablation_mean = float(np.mean(ablation))
    ok = within_budget and ratio >= 1.5 and full_mean >= ablation_mean
    report(13, ok,
           f"trained {env_steps} env steps (<= 100000); held-out mean "
           f"{learned_mean:.4f} = {ratio:.2f}x random ({random_mean:.4f}) "
           f"(>= 1.5x); paired 1000-episode ablation: full {full_mean:.4f} "
           f">= uniform-allocation {ablation_mean:.4f}")
