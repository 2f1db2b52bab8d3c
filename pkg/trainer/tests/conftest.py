"""Shared fixtures: a simulator server subprocess driven via its public CLI."""

import json
import subprocess
import sys

import pytest

from jcnsra_trainer import ServerProcess

DESK_CONFIG = {
    "sample": {"target_size": 20},
    "episode_length": 3,
    "flow": {"count_per_amount": 50},
}


@pytest.fixture(scope="session")
def snapshot_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("sim") / "snapshot.json"
    subprocess.run([sys.executable, "-m", "pcnsim.cli", "synth", "--nodes",
                    "300", "--seed", "3", "-o", str(path)],
                   check=True, timeout=120)
    return str(path)


@pytest.fixture(scope="session")
def desk_config_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("sim") / "desk.json"
    path.write_text(json.dumps(DESK_CONFIG))
    return str(path)


@pytest.fixture(scope="session")
def server(snapshot_path, desk_config_path):
    with ServerProcess(snapshot_path, nodes=20, channels=3,
                       config_path=desk_config_path) as srv:
        yield srv
