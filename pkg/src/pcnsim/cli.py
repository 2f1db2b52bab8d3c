"""Operator command line: snapshot generation, sampling, evaluation, serving.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import multiprocessing
import sys

import numpy as np

from .analysis import evolve_network
from .env import EnvConfig, JcnsraEnv
from .graph import dump_snapshot, load_snapshot_file
from .heuristics import HEURISTIC_KINDS, run_heuristic
from .protocol import ProtocolServer, run_script, serve_stdio
from .sampling import SampleConfig, forest_fire_sample
from .synthetic import synthetic_snapshot


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="pcnsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def env_flags(p):
        p.add_argument("--nodes", type=int, default=50,
                       help="sample size per episode")
        p.add_argument("--channels", type=int, default=5,
                       help="episode length (channels the agent opens)")
        p.add_argument("--k", type=int, default=10, help="allocation buckets")
        p.add_argument("--budget", type=int, default=10**10,
                       help="allocation budget in msat")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--provider-bias", type=float, default=0.8)
        p.add_argument("--config", help="EnvConfig JSON file (flags override)")

    p = sub.add_parser("synth", help="generate a synthetic scale-free snapshot")
    p.add_argument("--nodes", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--attach", type=int, default=2)
    p.add_argument("--providers", type=float, default=0.15,
                   help="provider fraction")
    p.add_argument("-o", "--output", help="write here instead of stdout")

    p = sub.add_parser("sample", help="emit one forest-fire sample")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p-forward", type=float, default=0.7)
    p.add_argument("-o", "--output")

    p = sub.add_parser("eval", help="evaluate a policy over sampled episodes")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--policy", required=True,
                   help=f"one of {', '.join(HEURISTIC_KINDS)}, or 'external'")
    p.add_argument("--episodes", type=int, default=1000)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--emit-flow", help="write the last step's flow record here")
    p.add_argument("--port", type=int, help="TCP port for --policy external")
    p.add_argument("--stdio", action="store_true",
                   help="serve --policy external over stdin/stdout")
    env_flags(p)

    p = sub.add_parser("serve", help="serve environments over the wire protocol")
    p.add_argument("--snapshot", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--port", type=int)
    group.add_argument("--stdio", action="store_true")
    env_flags(p)

    p = sub.add_parser("analyze", help="run the network-evolution experiment")
    p.add_argument("--base", required=True, help="base snapshot path")
    p.add_argument("--policy", default="bottom-k-degree",
                   choices=HEURISTIC_KINDS)
    p.add_argument("--episodes", type=int, default=50)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--alpha", type=float, default=2.0, help="Renyi order")
    p.add_argument("-o", "--output")
    env_flags(p)

    p = sub.add_parser("client", help="replay a request script, record responses")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--script", required=True, help="request lines, one per line")
    p.add_argument("-o", "--output")
    return parser


def _write(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _env_config(args) -> EnvConfig:
    doc = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
    base = EnvConfig.from_dict(doc)
    overrides = {
        "sample": {"target_size": args.nodes, "seed": args.seed},
        "flow": {"provider_bias": args.provider_bias},
        "episode_length": args.channels,
        "buckets": args.k,
        "budget_msat": args.budget,
    }
    return EnvConfig.from_dict(overrides, base=base)


# module-level state so forked evaluation workers inherit the parent graph
_SHARED: dict = {}


def _episode_worker(task):
    kind, seed = task
    env = JcnsraEnv(_SHARED["graph"], _SHARED["cfg"])
    return run_heuristic(env, kind, seed)


def evaluate_heuristic(graph, cfg: EnvConfig, kind: str, seeds,
                       jobs: int = 1) -> list[float]:
    """Final-step rewards of one heuristic over the given episode seeds.

    jobs > 1 forks worker processes (episodes are independent, so results
    are identical to the sequential run, in seed order).
    """
    _SHARED["graph"] = graph
    _SHARED["cfg"] = cfg
    tasks = [(kind, s) for s in seeds]
    if jobs <= 1:
        return [_episode_worker(t) for t in tasks]
    ctx = multiprocessing.get_context("fork")
    chunk = max(1, len(tasks) // (jobs * 8))
    with ctx.Pool(jobs) as pool:
        return pool.map(_episode_worker, tasks, chunksize=chunk)


def _cmd_synth(args) -> int:
    graph = synthetic_snapshot(args.nodes, seed=args.seed, attach=args.attach,
                               provider_fraction=args.providers)
    _write(dump_snapshot(graph), args.output)
    return 0


def _cmd_sample(args) -> int:
    graph = load_snapshot_file(args.snapshot)
    cfg = SampleConfig(target_size=args.size, p_forward=args.p_forward,
                       seed=args.seed)
    _write(dump_snapshot(forest_fire_sample(graph, cfg)), args.output)
    return 0


def _cmd_eval(args) -> int:
    if args.policy not in HEURISTIC_KINDS and args.policy != "external":
        raise UsageError(f"unknown policy {args.policy!r}")
    graph = load_snapshot_file(args.snapshot)
    cfg = _env_config(args)
    if args.policy == "external":
        rewards: list[float] = []
        done_count = {"n": 0}

        def record(reward: float) -> None:
            rewards.append(reward)
            done_count["n"] += 1

        if args.stdio:
            serve_stdio(graph, cfg, sys.stdin, sys.stdout, on_final_step=record)
        elif args.port is not None:
            server = ProtocolServer(("127.0.0.1", args.port), graph, cfg,
                                    on_final_step=record)
            sys.stderr.write(f"serving external policy on port {server.port}\n")
            try:
                server.serve_forever()
            except KeyboardInterrupt:
                pass
        else:
            raise UsageError("--policy external needs --port or --stdio")
    else:
        seeds = range(args.seed, args.seed + args.episodes)
        rewards = evaluate_heuristic(graph, cfg, args.policy, seeds,
                                     jobs=args.jobs)
        if args.emit_flow:
            with open(args.emit_flow, "w", encoding="utf-8") as fh:
                env_last = JcnsraEnv(graph, cfg)
                run_heuristic(env_last, args.policy, args.seed + args.episodes - 1)
                json.dump(env_last.last_flow.to_report(env_last.graph), fh,
                          indent=2, sort_keys=True)
                fh.write("\n")
    arr = np.asarray(rewards, dtype=np.float64)
    mean = arr.mean() if arr.size else float("nan")
    std = arr.std(ddof=1) if arr.size > 1 else 0.0
    print(f"policy={args.policy} count={arr.size} mean={mean:.6f} std={std:.6f}")
    return 0


def _cmd_serve(args) -> int:
    graph = load_snapshot_file(args.snapshot)
    cfg = _env_config(args)
    if args.stdio:
        serve_stdio(graph, cfg, sys.stdin, sys.stdout)
        return 0
    server = ProtocolServer(("127.0.0.1", args.port), graph, cfg)
    sys.stderr.write(f"listening on {server.port} ({cfg.sample.target_size} "
                     f"nodes, {cfg.episode_length} channels)\n")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def _cmd_analyze(args) -> int:
    base = load_snapshot_file(args.base)
    cfg = _env_config(args)
    report = evolve_network(base, args.policy, args.episodes, cfg,
                            seed=args.seed, bin_count=args.bins,
                            renyi_alpha=args.alpha)
    _write(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
           args.output)
    return 0


def _cmd_client(args) -> int:
    with open(args.script, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    transcript = run_script(args.host, args.port, lines)
    if args.output:
        with open(args.output, "wb") as fh:
            fh.write(transcript)
    else:
        sys.stdout.buffer.write(transcript)
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "sample": _cmd_sample,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
    "analyze": _cmd_analyze,
    "client": _cmd_client,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 1
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 1
    except Exception as exc:  # runtime failures map to exit code 2
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
