"""Line-delimited JSON wire protocol for driving environments remotely.

Protocol version ``jcnsra/1``.  Requests, one JSON object per line:

    {"type": "hello"}
    {"type": "reset", "seed": 7, "config": {...optional overrides...}}
    {"type": "step", "node": 12, "bucket": 3}
    {"type": "close"}

Responses, exactly one line per request:

    {"type": "hello_ack", "protocol_version": "jcnsra/1", "nodes": N, "k": K}
    {"type": "state", "observation": [...], "reward": r, "done": d, "info": {...}}
    {"type": "error", "code": "...", "detail": "..."}
    {"type": "bye"}                      # acknowledges close

The observation is the candidates x 4 matrix flattened row-major, every
number rounded to 9 significant digits so transcripts are byte-stable.
Each connection owns one isolated environment; a malformed or out-of-order
message yields an error response and the session continues.
"""

from __future__ import annotations

import json
import socket
import socketserver
import threading
from typing import Callable, IO

from .env import EnvConfig, JcnsraEnv
from .graph import ChannelGraph

PROTOCOL_VERSION = "jcnsra/1"


def _round9(x: float) -> float:
    return float(f"{x:.9g}")


def encode_message(msg: dict) -> str:
    return json.dumps(msg, sort_keys=True, separators=(",", ":")) + "\n"


def _error(code: str, detail: str) -> dict:
    return {"type": "error", "code": code, "detail": detail}


class Session:
    """One environment per connection; messages handled strictly in order."""

    def __init__(self, snapshot: ChannelGraph, base_config: EnvConfig,
                 on_final_step: Callable[[float], None] | None = None):
        self.snapshot = snapshot
        self.base_config = base_config
        self.config = base_config
        self.env: JcnsraEnv | None = None
        self.on_final_step = on_final_step
        self.closed = False

    def _state_response(self, observation, reward: float, done: bool,
                        info: dict) -> dict:
        flat = [_round9(v) for v in observation.reshape(-1)]
        return {"type": "state", "observation": flat,
                "reward": _round9(reward), "done": done, "info": info}

    def handle_line(self, line: str) -> dict | None:
        """Process one request line; returns the response object.

        Returns None only for blank lines.  Sets ``self.closed`` after a
        close request.
        """
        line = line.strip()
        if not line:
            return None
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            return _error("bad_request", f"not valid JSON: {exc}")
        if not isinstance(msg, dict) or "type" not in msg:
            return _error("bad_request", "message must be an object with a type")
        kind = msg["type"]
        if kind == "hello":
            return {"type": "hello_ack",
                    "protocol_version": PROTOCOL_VERSION,
                    "nodes": self.config.sample.target_size,
                    "k": self.config.buckets}
        if kind == "reset":
            try:
                cfg = EnvConfig.from_dict(msg.get("config") or {},
                                          base=self.base_config)
                seed = msg.get("seed")
                seed = cfg.sample.seed if seed is None else int(seed)
                env = JcnsraEnv(self.snapshot, cfg)
                obs = env.reset(seed)
            except Exception as exc:
                return _error("bad_reset", str(exc))
            self.config = cfg
            self.env = env
            info = {"revenue_msat": 0, "failed": env.last_flow.failed,
                    "channels_open": 0}
            return self._state_response(obs, 0.0, False, info)
        if kind == "step":
            if self.env is None:
                return _error("bad_state", "step before reset")
            try:
                node = int(msg["node"])
                bucket = int(msg["bucket"])
            except (KeyError, TypeError, ValueError):
                return _error("bad_request", "step needs integer node and bucket")
            try:
                out = self.env.step((node, bucket))
            except (IndexError, ValueError) as exc:
                return _error("bad_action", str(exc))
            except RuntimeError as exc:
                return _error("bad_state", str(exc))
            if out.done and self.on_final_step is not None:
                self.on_final_step(out.reward)
            return self._state_response(out.observation, out.reward,
                                        out.done, out.info)
        if kind == "close":
            self.closed = True
            return {"type": "bye"}
        return _error("bad_request", f"unknown message type {kind!r}")

    def run(self, lines: IO, out: IO) -> None:
        """Serve line-in/line-out streams until close or EOF."""
        for line in lines:
            response = self.handle_line(line)
            if response is None:
                continue
            out.write(encode_message(response))
            out.flush()
            if self.closed:
                break


def serve_stdio(snapshot: ChannelGraph, config: EnvConfig,
                stdin: IO, stdout: IO,
                on_final_step: Callable[[float], None] | None = None) -> None:
    Session(snapshot, config, on_final_step).run(stdin, stdout)


class ProtocolServer(socketserver.ThreadingTCPServer):
    """One concurrently served session per TCP connection."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, snapshot: ChannelGraph, config: EnvConfig,
                 on_final_step: Callable[[float], None] | None = None):
        self.snapshot = snapshot
        self.config = config
        self.on_final_step = on_final_step
        super().__init__(address, _SessionHandler)

    @property
    def port(self) -> int:
        return self.server_address[1]

    def serve_in_thread(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread


class _SessionHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        session = Session(self.server.snapshot, self.server.config,
                          self.server.on_final_step)
        for raw in self.rfile:
            response = session.handle_line(raw.decode("utf-8"))
            if response is None:
                continue
            self.wfile.write(encode_message(response).encode("utf-8"))
            self.wfile.flush()
            if session.closed:
                break


# ----------------------------------------------------------------------
# scripted transcript client
# ----------------------------------------------------------------------

def run_script(host: str, port: int, script_lines: list[str],
               timeout: float = 60.0) -> bytes:
    """Send request lines in order, return the raw response bytes verbatim.

    One response line is awaited per non-blank request line, so the result
    replays byte-identically against an equivalent server.
    """
    with socket.create_connection((host, port), timeout=timeout) as sock:
        reader = sock.makefile("rb")
        transcript = bytearray()
        for line in script_lines:
            line = line.strip()
            if not line:
                continue
            sock.sendall((line + "\n").encode("utf-8"))
            response = reader.readline()
            if not response:
                raise ConnectionError("server closed before responding")
            transcript.extend(response)
        return bytes(transcript)


def episode_script(seed: int, actions: list[tuple[int, int]],
                   config: dict | None = None) -> list[str]:
    """Request lines for one full scripted episode."""
    reset: dict = {"type": "reset", "seed": seed}
    if config:
        reset["config"] = config
    lines = [encode_message({"type": "hello"}).strip(),
             encode_message(reset).strip()]
    lines += [encode_message({"type": "step", "node": n, "bucket": b}).strip()
              for n, b in actions]
    return lines
