"""Transformer-PPO learner for the jcnsra/1 channel-placement protocol."""

from .client import ProtocolError, RemoteEnv, ServerProcess
from .evaluate import evaluate
from .model import ModelConfig, PolicyNetwork
from .ppo import (TrainConfig, TrajectoryBatch, clipped_surrogate, compute_gae,
                  joint_log_prob, ppo_update)
from .train import collect_batch, load_checkpoint, save_checkpoint, train

__version__ = "0.1.0"
