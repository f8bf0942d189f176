"""Command line entry point.

Subcommands: ``train``, ``eval``, ``replay``, ``bench``, ``list-tracks``.
Every run resolves its configuration from built-in defaults, an optional
YAML file (``-c``), and ``--set key.path=value`` overrides, then writes the
resolved snapshot next to its outputs. Exit codes: 0 success, 1 config or
validation error, 2 runtime error (including a failed replay comparison).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import config as cfgmod
from .env import VecEnv
from .errors import ConfigError, SlungloadError, TrackError
from .evaluator import (aggregate, compute_metrics, export_log_csv, export_log_json,
                        load_log, replay_log, run_rollout)
from .learner import train
from .nets import init_policy, load_checkpoint, policy_forward
from .scenario import get_track, list_tracks


class _Parser(argparse.ArgumentParser):
    # route usage errors through the config-error exit path
    def error(self, message):
        raise ConfigError(message)


def _add_common(sub):
    sub.add_argument("-c", "--config", default=None, help="YAML config file")
    sub.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="KEY=VALUE", help="override a config entry (dotted path)")
    sub.add_argument("--seed", type=int, default=None, help="override the config seed")
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument("--track", default=None,
                     help="track preset name (shorthand for --set track=NAME)")
    sub.add_argument("--scenario", default=None, choices=("wp", "pt", "gt"),
                     help="expected scenario kind; must match the resolved track")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slungload",
                     description="Quadrotor slung-payload simulator, trainer, and evaluator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a policy with PPO")
    _add_common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint over several trials")
    p_eval.add_argument("checkpoint", help="policy checkpoint file")
    _add_common(p_eval)
    p_eval.add_argument("--trials", type=int, default=None)
    p_eval.add_argument("--stochastic", action="store_true",
                        help="sample actions instead of using the mean")
    p_eval.set_defaults(func=cmd_eval)

    p_replay = sub.add_parser("replay", help="re-simulate a JSON rollout log and compare")
    p_replay.add_argument("log", help="rollout log (JSON)")
    p_replay.set_defaults(func=cmd_replay)

    p_bench = sub.add_parser("bench", help="measure step throughput and inference latency")
    _add_common(p_bench)
    p_bench.add_argument("--batch", type=int, action="append", default=None,
                         help="batch size to time (repeatable; default 1 and 256)")
    p_bench.add_argument("--steps", type=int, default=2000, help="env steps per batch size")
    p_bench.add_argument("--samples", type=int, default=10000,
                         help="single-observation inference samples")
    p_bench.set_defaults(func=cmd_bench)

    p_list = sub.add_parser("list-tracks", help="show the shipped track presets")
    p_list.set_defaults(func=cmd_list_tracks)
    return parser


def _load(args) -> dict:
    cfg = cfgmod.load_config(args.config, tuple(args.overrides))
    if getattr(args, "track", None) is not None:
        cfg["track"] = args.track
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be >= 0")
        cfg["seed"] = args.seed
    if args.out is not None:
        cfg["out_dir"] = args.out
    if getattr(args, "scenario", None) is not None:
        try:
            kind = cfgmod.build_env_config(cfg).kind
        except TrackError as exc:
            raise ConfigError(str(exc)) from exc
        if kind != args.scenario:
            raise ConfigError(
                f"--scenario {args.scenario} does not match track kind '{kind}'")
    return cfg


def cmd_train(args) -> int:
    cfg = _load(args)
    out_dir = cfgmod.resolve_out_dir(cfg, "train")
    os.makedirs(out_dir, exist_ok=True)
    cfgmod.save_snapshot(cfg, os.path.join(out_dir, "config.yaml"))
    env_cfg = cfgmod.build_env_config(cfg)
    ppo = cfgmod.build_ppo_config(cfg)

    def show(row):
        print(f"iter {row['iteration']:4d}  steps {row['timesteps']:>10d}  "
              f"return {row['mean_return']:9.2f}  success {row['success_rate']:5.2f}  "
              f"speed {row['mean_speed']:5.2f}  kl {row['approx_kl']:.4f}", flush=True)

    result = train(env_cfg, ppo, seed=cfg["seed"], out_dir=out_dir, log_fn=show)
    print(f"trained {result.timesteps} timesteps")
    print(f"checkpoint: {result.checkpoint_path}")
    print(f"curve: {result.curve_path}")
    return 0


def cmd_eval(args) -> int:
    cfg = _load(args)
    env_cfg = cfgmod.build_env_config(cfg)
    params = load_checkpoint(args.checkpoint, expect_kind=env_cfg.kind,
                             expect_obs_dim=env_cfg.obs_dim)
    trials = args.trials if args.trials is not None else cfg["eval"]["trials"]
    if trials < 1:
        raise ConfigError("--trials must be >= 1")
    deterministic = cfg["eval"]["deterministic"] and not args.stochastic
    out_dir = cfgmod.resolve_out_dir(cfg, "eval")
    os.makedirs(out_dir, exist_ok=True)
    cfgmod.save_snapshot(cfg, os.path.join(out_dir, "config.yaml"))

    reports = []
    for i in range(trials):
        log = run_rollout(params, env_cfg, seed=cfg["seed"] + i, deterministic=deterministic)
        export_log_json(log, os.path.join(out_dir, f"trial_{i:03d}.json"))
        export_log_csv(log, os.path.join(out_dir, f"trial_{i:03d}.csv"))
        report = compute_metrics(log, env_cfg)
        reports.append(report)
        status = "success" if report.success else ("crash" if report.crashed else
                                                   "collision" if report.collided else "timeout")
        t_done = f"{report.completion_time:.2f}s" if report.completion_time else "-"
        print(f"trial {i:3d}  {status:9s}  time {t_done:>8s}  "
              f"max|v| {report.max_speed:5.2f}  mean|v| {report.mean_speed:5.2f}", flush=True)
    summary = aggregate(reports)
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    print(f"success rate {summary['success_rate']:.2f} "
          f"({summary['successes']}/{summary['trials']})")
    if summary["quad_gate_deviation"]["n"]:
        q, p = summary["quad_gate_deviation"], summary["payload_gate_deviation"]
        print(f"gate deviation quad {q['mean']:.3f}+-{q['std']:.3f} m, "
              f"payload {p['mean']:.3f}+-{p['std']:.3f} m")
    print(f"logs in {out_dir}")
    return 0


def cmd_replay(args) -> int:
    log = load_log(args.log)
    report = replay_log(log)
    verdict = "PASS" if report.match else "FAIL"
    where = "" if report.first_divergence is None else \
        f", first divergence at step {report.first_divergence}"
    print(f"replayed {report.steps} steps: {verdict} "
          f"(max |diff| {report.max_abs_diff:.3e}{where})")
    return 0 if report.match else 2


def run_benchmark(env_cfg, batch_sizes=(1, 256), env_steps=2000,
                  inference_samples=10000, seed=0) -> dict:
    """Wall-clock throughput of the vectorized env and policy inference latency."""
    rng = np.random.Generator(np.random.Philox(seed))
    hover = 2.0 * (env_cfg.params.total_mass / env_cfg.params.quad_mass
                   / env_cfg.params.thrust_to_weight_max) - 1.0
    report = {"env_steps": int(env_steps), "inference_samples": int(inference_samples),
              "env_steps_per_s": {}, "inference_ms": {}}
    for b in batch_sizes:
        env = VecEnv(env_cfg, b, seed=seed)
        env.reset()
        acts = rng.uniform(-0.1, 0.1, size=(64, b, 4))
        acts[..., 0] += hover
        np.clip(acts, -1.0, 1.0, out=acts)
        for k in range(20):  # warmup
            env.step(acts[k % 64])
        tic = time.perf_counter()
        for k in range(env_steps):
            env.step(acts[k % 64])
        wall = time.perf_counter() - tic
        report["env_steps_per_s"][str(b)] = b * env_steps / wall
    params = init_policy(env_cfg.obs_dim, env_cfg.kind, rng)
    obs = rng.standard_normal(env_cfg.obs_dim)
    for _ in range(200):  # warmup
        policy_forward(params, obs)
    lat = np.empty(inference_samples)
    for i in range(inference_samples):
        tic = time.perf_counter()
        policy_forward(params, obs)
        lat[i] = time.perf_counter() - tic
    lat *= 1e3
    report["inference_ms"] = {
        "mean": float(lat.mean()), "p50": float(np.percentile(lat, 50)),
        "p99": float(np.percentile(lat, 99)), "max": float(lat.max()),
    }
    return report


def cmd_bench(args) -> int:
    cfg = _load(args)
    env_cfg = cfgmod.build_env_config(cfg)
    batches = tuple(args.batch) if args.batch else (1, 256)
    report = run_benchmark(env_cfg, batch_sizes=batches, env_steps=args.steps,
                           inference_samples=args.samples, seed=cfg["seed"])
    text = json.dumps(report, indent=2)
    print(text)
    if cfg.get("out_dir"):
        os.makedirs(cfg["out_dir"], exist_ok=True)
        path = os.path.join(cfg["out_dir"], "bench.json")
        with open(path, "w") as fh:
            fh.write(text + "\n")
        print(f"written to {path}", file=sys.stderr)
    return 0


def cmd_list_tracks(args) -> int:
    for name in list_tracks():
        t = get_track(name)
        print(f"{name:12s} kind={t.kind}  waypoints={t.num_waypoints}  laps={t.laps}  "
              f"gates={len(t.gates)}  threshold={t.threshold:.2f}  start={t.start_pos}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ConfigError, TrackError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SlungloadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
