"""Policy evaluation: logged rollouts, trajectory metrics, export, replay.

A rollout log is self-contained: it embeds the environment snapshot, the
seed, the initial state, and every applied action, so the trajectory can be
re-simulated later and compared bit for bit. Two export formats exist:

* JSON - full fidelity (floats keep their shortest exact representation);
  this is the format ``replay_log``/``load_log`` consume,
* CSV  - one flat table for plotting, columns
  ``t,px,py,pz,vx,vy,vz,qw,qx,qy,qz,wx,wy,wz,lx,ly,lz,lvx,lvy,lvz,mode,
  a0,a1,a2,a3,r_safe,r_crash,r_smooth,r_target,r_gate,r_total,event``.
  The first row is the initial state at t=0 with zero action and rewards;
  row k > 0 holds the state after step k. ``mode`` is 1 taut / 0 slack and
  ``event`` joins event strings with ";".

Event strings: ``WaypointPassed(i)``, ``GatePassed(j)``, ``GateCollided(j)``,
``Crash``, ``SafetyViolation``.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .config import env_config_from_dict, env_config_to_dict
from .env import Env, EnvConfig
from .errors import EmptyLog, FormatError
from .learner import sample_action
from .nets import PolicyParams, policy_forward
from .scenario import GateSpec

LOG_SCHEMA = "slungload-rollout-v1"

CSV_COLUMNS = ("t", "px", "py", "pz", "vx", "vy", "vz", "qw", "qx", "qy", "qz",
               "wx", "wy", "wz", "lx", "ly", "lz", "lvx", "lvy", "lvz", "mode",
               "a0", "a1", "a2", "a3", "r_safe", "r_crash", "r_smooth",
               "r_target", "r_gate", "r_total", "event")

REWARD_FIELDS = ("safe", "crash", "smooth", "target", "gate", "total")


@dataclass
class RolloutLog:
    """One episode: environment snapshot, seed, initial state, step records."""

    config: dict                 # env snapshot (see config.env_config_to_dict)
    seed: int
    kind: str
    dt: float
    initial: dict                # state field name -> list
    action: np.ndarray           # (T, 4)
    quad_pos: np.ndarray         # (T, 3)
    quad_vel: np.ndarray
    attitude: np.ndarray         # (T, 4)
    body_rates: np.ndarray
    payload_pos: np.ndarray
    payload_vel: np.ndarray
    mode: np.ndarray             # (T,) 1 taut / 0 slack
    rewards: np.ndarray          # (T, 6) safe, crash, smooth, target, gate, total
    wp_index: np.ndarray         # (T,)
    events: list[list[str]]
    success: bool
    terminated: bool
    truncated: bool
    inference_s: np.ndarray      # (T,) policy forward wall time

    @property
    def length(self) -> int:
        return self.action.shape[0]

    @property
    def final_time(self) -> float:
        return self.length * self.dt

    def times(self) -> np.ndarray:
        return self.dt * np.arange(1, self.length + 1)


def _event_strings(ev: dict) -> list[str]:
    out = []
    if ev["waypoint_passed"] >= 0:
        out.append(f"WaypointPassed({int(ev['waypoint_passed'])})")
    if ev["gate_passed"] >= 0:
        out.append(f"GatePassed({int(ev['gate_passed'])})")
    if ev["gate_collided"] >= 0:
        out.append(f"GateCollided({int(ev['gate_collided'])})")
    if ev["crash"]:
        out.append("Crash")
    if ev["safety"]:
        out.append("SafetyViolation")
    return out


def _state_dict(state) -> dict:
    return {
        "quad_pos": state.quad_pos.tolist(), "quad_vel": state.quad_vel.tolist(),
        "attitude": state.attitude.tolist(), "body_rates": state.body_rates.tolist(),
        "payload_pos": state.payload_pos.tolist(), "payload_vel": state.payload_vel.tolist(),
        "taut": bool(state.taut), "time": float(state.time),
    }


def run_rollout(params: PolicyParams, env_cfg: EnvConfig, seed: int = 0,
                deterministic: bool = True, max_steps: int | None = None) -> RolloutLog:
    """Play one episode with the policy and record everything.

    The policy runs on the live observation each step; its wall time is
    recorded per step. ``deterministic`` uses the squashed mean action,
    otherwise actions are sampled from a stream derived from ``seed``.
    """
    env = Env(env_cfg, seed=seed)
    obs = env.reset()
    initial = _state_dict(env.state)
    rng = None
    if not deterministic:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed).spawn(1)[0]))
    limit = env_cfg.episode_steps if max_steps is None else min(max_steps, env_cfg.episode_steps)

    actions, states, rew_rows, wp_rows, modes = [], [], [], [], []
    events: list[list[str]] = []
    inf_times = []
    success = terminated = truncated = False
    for _ in range(limit):
        tic = time.perf_counter()
        if deterministic:
            action, _, _ = policy_forward(params, obs)
        else:
            action, _ = sample_action(params, obs, rng)
        inf_times.append(time.perf_counter() - tic)
        obs, rb, term, trunc, info = env.step(action)
        st = env.state
        actions.append(action)
        states.append((st.quad_pos, st.quad_vel, st.attitude, st.body_rates,
                       st.payload_pos, st.payload_vel))
        modes.append(int(st.taut))
        rew_rows.append([float(getattr(rb, f)) for f in REWARD_FIELDS])
        wp_rows.append(int(info["wp_index"]))
        events.append(_event_strings(info["events"]))
        if term or trunc:
            success = bool(info["success"])
            terminated, truncated = term, trunc
            break
    stacked = [np.array([s[i] for s in states]) for i in range(6)]
    return RolloutLog(
        config=env_config_to_dict(env_cfg), seed=int(seed), kind=env_cfg.kind,
        dt=env_cfg.params.dt, initial=initial,
        action=np.array(actions), quad_pos=stacked[0], quad_vel=stacked[1],
        attitude=stacked[2], body_rates=stacked[3], payload_pos=stacked[4],
        payload_vel=stacked[5], mode=np.array(modes, dtype=np.int8),
        rewards=np.array(rew_rows), wp_index=np.array(wp_rows, dtype=np.int64),
        events=events, success=success, terminated=terminated, truncated=truncated,
        inference_s=np.array(inf_times))


# ---------------------------------------------------------------------------
# export / import

def export_log_json(log: RolloutLog, path) -> None:
    doc = {
        "schema": LOG_SCHEMA,
        "kind": log.kind, "seed": log.seed, "dt": log.dt,
        "config": log.config, "initial": log.initial,
        "success": log.success, "terminated": log.terminated, "truncated": log.truncated,
        "steps": {
            "action": log.action.tolist(),
            "quad_pos": log.quad_pos.tolist(), "quad_vel": log.quad_vel.tolist(),
            "attitude": log.attitude.tolist(), "body_rates": log.body_rates.tolist(),
            "payload_pos": log.payload_pos.tolist(), "payload_vel": log.payload_vel.tolist(),
            "mode": log.mode.tolist(), "rewards": log.rewards.tolist(),
            "wp_index": log.wp_index.tolist(), "events": log.events,
            "inference_s": log.inference_s.tolist(),
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_log(path) -> RolloutLog:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"rollout log {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema") != LOG_SCHEMA:
        raise FormatError(f"rollout log {path} has schema {doc.get('schema')!r}, "
                          f"expected {LOG_SCHEMA!r}")
    s = doc["steps"]
    return RolloutLog(
        config=doc["config"], seed=int(doc["seed"]), kind=doc["kind"], dt=float(doc["dt"]),
        initial=doc["initial"],
        action=np.asarray(s["action"], dtype=np.float64).reshape(-1, 4),
        quad_pos=np.asarray(s["quad_pos"], dtype=np.float64).reshape(-1, 3),
        quad_vel=np.asarray(s["quad_vel"], dtype=np.float64).reshape(-1, 3),
        attitude=np.asarray(s["attitude"], dtype=np.float64).reshape(-1, 4),
        body_rates=np.asarray(s["body_rates"], dtype=np.float64).reshape(-1, 3),
        payload_pos=np.asarray(s["payload_pos"], dtype=np.float64).reshape(-1, 3),
        payload_vel=np.asarray(s["payload_vel"], dtype=np.float64).reshape(-1, 3),
        mode=np.asarray(s["mode"], dtype=np.int8),
        rewards=np.asarray(s["rewards"], dtype=np.float64).reshape(-1, 6),
        wp_index=np.asarray(s["wp_index"], dtype=np.int64),
        events=[list(e) for e in s["events"]],
        success=bool(doc["success"]), terminated=bool(doc["terminated"]),
        truncated=bool(doc["truncated"]),
        inference_s=np.asarray(s["inference_s"], dtype=np.float64))


def _fmt(x: float) -> str:
    return repr(float(x))


def export_log_csv(log: RolloutLog, path) -> None:
    ini = log.initial
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        first = ([_fmt(0.0)] + [_fmt(v) for v in ini["quad_pos"]]
                 + [_fmt(v) for v in ini["quad_vel"]] + [_fmt(v) for v in ini["attitude"]]
                 + [_fmt(v) for v in ini["body_rates"]] + [_fmt(v) for v in ini["payload_pos"]]
                 + [_fmt(v) for v in ini["payload_vel"]] + [str(int(ini["taut"]))]
                 + [_fmt(0.0)] * 4 + [_fmt(0.0)] * 6 + [""])
        writer.writerow(first)
        times = log.times()
        for k in range(log.length):
            row = ([_fmt(times[k])]
                   + [_fmt(v) for v in log.quad_pos[k]] + [_fmt(v) for v in log.quad_vel[k]]
                   + [_fmt(v) for v in log.attitude[k]] + [_fmt(v) for v in log.body_rates[k]]
                   + [_fmt(v) for v in log.payload_pos[k]] + [_fmt(v) for v in log.payload_vel[k]]
                   + [str(int(log.mode[k]))]
                   + [_fmt(v) for v in log.action[k]]
                   + [_fmt(v) for v in log.rewards[k]]
                   + [";".join(log.events[k])])
            writer.writerow(row)


# ---------------------------------------------------------------------------
# replay

@dataclass
class ReplayReport:
    match: bool
    steps: int
    first_divergence: int | None   # 0 = initial state, k = after step k
    max_abs_diff: float


def replay_log(log: RolloutLog) -> ReplayReport:
    """Re-simulate the logged actions and compare states bit for bit."""
    env_cfg = env_config_from_dict(log.config)
    env = Env(env_cfg, seed=log.seed)
    env.reset()
    first = None
    max_diff = 0.0

    def compare(state, ref_fields, step_idx):
        nonlocal first, max_diff
        diffs = [np.max(np.abs(state.quad_pos - ref_fields[0])),
                 np.max(np.abs(state.quad_vel - ref_fields[1])),
                 np.max(np.abs(state.attitude - ref_fields[2])),
                 np.max(np.abs(state.body_rates - ref_fields[3])),
                 np.max(np.abs(state.payload_pos - ref_fields[4])),
                 np.max(np.abs(state.payload_vel - ref_fields[5]))]
        d = float(max(diffs))
        max_diff = max(max_diff, d)
        if d != 0.0 and first is None:
            first = step_idx

    ini = log.initial
    compare(env.state, (np.asarray(ini["quad_pos"]), np.asarray(ini["quad_vel"]),
                        np.asarray(ini["attitude"]), np.asarray(ini["body_rates"]),
                        np.asarray(ini["payload_pos"]), np.asarray(ini["payload_vel"])), 0)
    for k in range(log.length):
        env.step(log.action[k])
        st = env.state
        compare(st, (log.quad_pos[k], log.quad_vel[k], log.attitude[k],
                     log.body_rates[k], log.payload_pos[k], log.payload_vel[k]), k + 1)
        if int(st.taut) != int(log.mode[k]) and first is None:
            first = k + 1
            max_diff = max(max_diff, 1.0)
    return ReplayReport(match=first is None, steps=log.length,
                        first_divergence=first, max_abs_diff=max_diff)


# ---------------------------------------------------------------------------
# metrics

@dataclass
class MetricsReport:
    success: bool
    crashed: bool
    collided: bool
    completion_time: float | None
    max_speed: float
    mean_speed: float
    quad_gate_deviation: list[float | None] = field(default_factory=list)
    payload_gate_deviation: list[float | None] = field(default_factory=list)
    target_errors: list[float] = field(default_factory=list)
    inference_mean_ms: float = 0.0
    inference_p99_ms: float = 0.0


def _crossing_offset(points: np.ndarray, gate: GateSpec) -> float | None:
    """In-plane offset at the first forward plane crossing of a polyline."""
    center, normal = gate.center_arr(), gate.normal_arr()
    s = (points - center) @ normal
    for k in range(len(points) - 1):
        if s[k] < 0.0 <= s[k + 1]:
            alpha = -s[k] / (s[k + 1] - s[k])
            p = points[k] + alpha * (points[k + 1] - points[k])
            radial = p - center - np.dot(p - center, normal) * normal
            return float(np.linalg.norm(radial))
    return None


def compute_metrics(log: RolloutLog, env_cfg: EnvConfig | None = None) -> MetricsReport:
    """Trajectory statistics recomputed from the log itself.

    Speeds cover the active phase (reset through the final logged step).
    Gate deviations are the in-plane offsets at the first forward crossing of
    each gate plane, recomputed from the logged polyline for the quadrotor
    and the payload separately. Payload target errors (pt) are the minimum
    sampled payload distance to each target while it was active.
    """
    if log.length == 0:
        raise EmptyLog("rollout log contains no steps")
    if env_cfg is None:
        env_cfg = env_config_from_dict(log.config)
    flat = " ".join(" ".join(e) for e in log.events)
    crashed = "Crash" in flat
    collided = "GateCollided" in flat
    speeds = np.linalg.norm(log.quad_vel, axis=-1)
    completion = log.final_time if log.success else None

    quad_dev: list[float | None] = []
    pay_dev: list[float | None] = []
    if env_cfg.track.gates:
        q_path = np.vstack([np.asarray(log.initial["quad_pos"])[None, :], log.quad_pos])
        p_path = np.vstack([np.asarray(log.initial["payload_pos"])[None, :], log.payload_pos])
        for gate in env_cfg.track.gates:
            quad_dev.append(_crossing_offset(q_path, gate))
            pay_dev.append(_crossing_offset(p_path, gate))

    target_errors: list[float] = []
    if log.kind == "pt":
        track = env_cfg.track
        active = np.concatenate(([0], log.wp_index[:-1]))  # target active during each step
        for k in range(track.total_targets):
            rows = active == k
            if not np.any(rows):
                break
            target = track.waypoint_at(k)
            d = np.linalg.norm(log.payload_pos[rows] - target, axis=-1)
            target_errors.append(float(d.min()))

    inf_ms = log.inference_s * 1e3
    return MetricsReport(
        success=log.success, crashed=crashed, collided=collided,
        completion_time=completion,
        max_speed=float(speeds.max()) if speeds.size else 0.0,
        mean_speed=float(speeds.mean()) if speeds.size else 0.0,
        quad_gate_deviation=quad_dev, payload_gate_deviation=pay_dev,
        target_errors=target_errors,
        inference_mean_ms=float(inf_ms.mean()) if inf_ms.size else 0.0,
        inference_p99_ms=float(np.percentile(inf_ms, 99)) if inf_ms.size else 0.0)


def _mean_std(values: list[float]) -> dict:
    if not values:
        return {"mean": None, "std": None, "n": 0}
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return {"mean": float(arr.mean()), "std": std, "n": int(arr.size)}


def aggregate(reports: list[MetricsReport]) -> dict:
    """Cross-trial summary: success rate plus mean/sample-std of the metrics."""
    n = len(reports)
    succ = [r for r in reports if r.success]
    out = {
        "trials": n,
        "successes": len(succ),
        "success_rate": len(succ) / n if n else float("nan"),
        "collisions": sum(r.collided for r in reports),
        "crashes": sum(r.crashed for r in reports),
        "max_speed": _mean_std([r.max_speed for r in reports]),
        "mean_speed": _mean_std([r.mean_speed for r in reports]),
        "completion_time": _mean_std([r.completion_time for r in reports
                                      if r.completion_time is not None]),
        "quad_gate_deviation": _mean_std(
            [d for r in reports for d in r.quad_gate_deviation if d is not None]),
        "payload_gate_deviation": _mean_std(
            [d for r in reports for d in r.payload_gate_deviation if d is not None]),
        "target_error": _mean_std([e for r in reports for e in r.target_errors]),
        "inference_mean_ms": _mean_std([r.inference_mean_ms for r in reports]),
    }
    return out
