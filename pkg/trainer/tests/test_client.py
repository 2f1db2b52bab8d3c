import numpy as np
import pytest
import torch

from jcnsra_trainer import (ModelConfig, PolicyNetwork, ProtocolError,
                            TrainConfig, collect_batch, evaluate,
                            load_checkpoint, save_checkpoint)


def test_handshake_and_episode(server):
    env = server.connect()
    try:
        assert env.n_nodes == 20 and env.n_buckets == 10
        obs = env.reset(1)
        assert obs.shape == (20, 4)
        assert np.isfinite(obs).all()
        assert ((obs >= 0) & (obs <= 1)).all()
        done = False
        steps = 0
        while not done:
            obs, reward, done, info = env.step(steps % 20, 1 + steps % 10)
            assert reward >= 0
            steps += 1
        assert steps == 3
        assert info["channels_open"] >= 1
    finally:
        env.close()


def test_remote_reset_is_deterministic(server):
    env1, env2 = server.connect(), server.connect()
    try:
        assert np.array_equal(env1.reset(42), env2.reset(42))
        a = env1.step(3, 5)
        b = env2.step(3, 5)
        assert np.array_equal(a[0], b[0]) and a[1] == b[1]
    finally:
        env1.close()
        env2.close()


def test_protocol_errors_surface(server):
    env = server.connect()
    try:
        with pytest.raises(ProtocolError, match="bad_state"):
            env.step(0, 1)   # step before reset
        env.reset(1)
        with pytest.raises(ProtocolError, match="bad_action"):
            env.step(999, 1)
    finally:
        env.close()


def test_collect_batch_shapes(server):
    env = server.connect()
    try:
        torch.manual_seed(0)
        model = PolicyNetwork(ModelConfig(d_model=8, n_blocks=1, n_heads=2))
        cfg = TrainConfig(episodes_per_batch=4)
        batch, finals, steps = collect_batch([env], model, cfg, seed_start=100)
        assert steps == 12
        assert batch.observations.shape == (12, 20, 4)
        assert batch.dones.view(4, 3)[:, -1].all()
        assert not batch.dones.view(4, 3)[:, :-1].any()
        assert len(finals) == 4
        assert batch.advantages is not None and batch.returns is not None
    finally:
        env.close()


def test_checkpoint_round_trip(tmp_path, server):
    torch.manual_seed(1)
    model = PolicyNetwork(ModelConfig(d_model=8, n_blocks=1, n_heads=2))
    cfg = TrainConfig(episodes_per_batch=2, uniform_allocation=True)
    path = tmp_path / "ckpt.pt"
    save_checkpoint(path, model, cfg, env_steps=123)
    loaded, loaded_cfg = load_checkpoint(path)
    assert loaded_cfg == cfg
    for a, b in zip(model.parameters(), loaded.parameters()):
        assert torch.equal(a, b)
    env = server.connect()
    try:
        rewards = evaluate(env, loaded, range(5), torch_seed=0)
        again = evaluate(env, loaded, range(5), torch_seed=0)
        assert rewards == again
    finally:
        env.close()
