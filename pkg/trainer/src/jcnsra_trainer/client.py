"""Client side of the jcnsra/1 environment protocol.

The trainer talks to the simulator exclusively through this line-delimited
JSON protocol over TCP; `ServerProcess` can launch the simulator CLI as a
subprocess for self-contained runs.
"""

from __future__ import annotations

import json
import re
import socket
import subprocess
import sys
import time

import numpy as np

PROTOCOL_VERSION = "jcnsra/1"


class ProtocolError(RuntimeError):
    pass


class RemoteEnv:
    """One protocol connection = one remote environment."""

    def __init__(self, host: str, port: int, timeout: float = 120.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._reader = self._sock.makefile("rb")
        ack = self._request({"type": "hello"})
        if ack.get("type") != "hello_ack" or \
                ack.get("protocol_version") != PROTOCOL_VERSION:
            raise ProtocolError(f"unexpected handshake: {ack}")
        self.n_nodes = int(ack["nodes"])
        self.n_buckets = int(ack["k"])

    def _request(self, msg: dict) -> dict:
        self._sock.sendall((json.dumps(msg) + "\n").encode())
        line = self._reader.readline()
        if not line:
            raise ProtocolError("server closed the connection")
        return json.loads(line)

    def _state(self, response: dict):
        if response.get("type") == "error":
            raise ProtocolError(f"{response['code']}: {response['detail']}")
        obs = np.asarray(response["observation"],
                         dtype=np.float64).reshape(self.n_nodes, 4)
        return obs, float(response["reward"]), bool(response["done"]), \
            response["info"]

    def reset(self, seed: int, config: dict | None = None) -> np.ndarray:
        msg = {"type": "reset", "seed": seed}
        if config:
            msg["config"] = config
        obs, _, _, _ = self._state(self._request(msg))
        return obs

    def step(self, node: int, bucket: int):
        return self._state(self._request(
            {"type": "step", "node": int(node), "bucket": int(bucket)}))

    def close(self) -> None:
        try:
            self._request({"type": "close"})
        except (ProtocolError, OSError):
            pass
        self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class ServerProcess:
    """Run the simulator CLI (`pcnsim serve`) as a child process."""

    def __init__(self, snapshot_path: str, *, nodes: int, channels: int,
                 config_path: str | None = None, extra_args=()):
        cmd = [sys.executable, "-m", "pcnsim.cli", "serve",
               "--snapshot", snapshot_path, "--port", "0",
               "--nodes", str(nodes), "--channels", str(channels)]
        if config_path:
            cmd += ["--config", config_path]
        cmd += list(extra_args)
        self.proc = subprocess.Popen(cmd, stderr=subprocess.PIPE)
        line = self.proc.stderr.readline().decode()
        match = re.search(r"listening on (\d+)", line)
        if not match:
            self.proc.kill()
            raise ProtocolError(f"server did not report a port: {line!r}")
        self.port = int(match.group(1))
        self.host = "127.0.0.1"
        deadline = time.time() + 30
        while time.time() < deadline:
            try:
                socket.create_connection((self.host, self.port), 1).close()
                return
            except OSError:
                time.sleep(0.05)
        raise ProtocolError("server never accepted connections")

    def connect(self) -> RemoteEnv:
        return RemoteEnv(self.host, self.port)

    def stop(self) -> None:
        self.proc.terminate()
        try:
            self.proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            self.proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.stop()
