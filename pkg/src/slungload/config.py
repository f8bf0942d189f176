"""Run configuration: defaults, YAML loading, validation, and overrides.

A run config is a plain nested dict with a fixed schema. Values merge in
three layers: built-in defaults, then an optional YAML file, then dotted
``key.path=value`` override strings. Unknown keys anywhere are a hard error,
as are type mismatches, so a typo cannot silently fall back to a default.

The resolved dict converts to the runtime dataclasses via
``build_env_config`` / ``build_ppo_config``; ``env_config_to_dict`` embeds a
self-contained environment snapshot into rollout logs so a log can be
replayed without the original YAML file.
"""

from __future__ import annotations

import copy
import os

import yaml

from .dynamics import PhysicalParams
from .env import DomainRandomization, EnvConfig, NormalizationConstants, RewardConfig
from .errors import ConfigError, TrackError
from .learner import PpoConfig
from .scenario import GateSpec, TrackSpec, Workspace, get_track

ENV_OUT_ROOT = "SLUNGLOAD_OUT"

_DEFAULTS: dict = {
    "track": "zigzag",
    "seed": 0,
    "out_dir": None,
    "physics": {
        "quad_mass": 0.305,
        "payload_mass": 0.070,
        "cable_length": 0.6,
        "gravity": 9.81,
        "inertia_diag": [1.4e-3, 1.4e-3, 2.2e-3],
        "thrust_to_weight_max": 3.5,
        "rate_tau": 0.05,
        "dt": 0.01,
    },
    "limits": {
        "omega_max": [15.0, 15.0, 5.0],
        "episode_steps": 1500,
        "body_radius": 0.12,
    },
    "normalization": {
        "offset_quad": [5.0, 5.0, 1.0],
        "offset_payload": [5.0, 5.0, 1.0],
        "velocity": [10.0, 10.0, 3.0],
        "gate_offset": [3.0, 3.0, 1.0],
        "angle": [1.5, 1.5],
    },
    "reward": {
        "bound_penalty": 10.0,
        "excess_penalty": 3.0,
        "arrival_bonus": 20.0,
        "action_smooth_weight": 1.0e-4,
        "target_weight": 10.0,
        "gate_weight": 5.0e-3,
        "angle_limit": 1.5,
    },
    "randomization": {
        "initial_angle": 0.0873,
    },
    "ppo": {
        "total_timesteps": 2_000_000,
        "num_envs": 256,
        "rollout_steps": 128,
        "minibatch_size": 1024,
        "epochs": 4,
        "gamma": 0.99,
        "gae_lambda": 0.95,
        "clip_range": 0.2,
        "learning_rate": 3.0e-4,
        "entropy_coef": 0.003,
        "value_coef": 0.5,
        "max_grad_norm": 1.0,
        "normalize_advantage": True,
        "checkpoint_every": 0,
    },
    "eval": {
        "trials": 8,
        "deterministic": True,
    },
}

# inline track schema, used when "track" is a mapping instead of a preset name
_TRACK_KEYS = {"name", "kind", "waypoints", "start_pos", "threshold", "laps",
               "gates", "workspace"}
_GATE_KEYS = {"center", "normal", "radius", "collision_band"}
_WORKSPACE_KEYS = {"min_corner", "max_corner"}


def default_config() -> dict:
    return copy.deepcopy(_DEFAULTS)


def _check_known_keys(cfg: dict, ref: dict, prefix: str = "") -> None:
    for key, val in cfg.items():
        path = f"{prefix}{key}"
        if key not in ref:
            raise ConfigError(f"unknown config key {path!r}")
        if isinstance(ref[key], dict) and key != "track":
            if not isinstance(val, dict):
                raise ConfigError(f"config key {path!r} must be a mapping")
            _check_known_keys(val, ref[key], prefix=path + ".")


def _check_types(cfg: dict) -> None:
    def num(path, v, positive=False):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"config key {path!r} must be a number, got {type(v).__name__}")
        if positive and v <= 0:
            raise ConfigError(f"config key {path!r} must be positive")

    def vec(path, v, n):
        if not isinstance(v, (list, tuple)) or len(v) != n:
            raise ConfigError(f"config key {path!r} must be a list of {n} numbers")
        for x in v:
            num(path, x)

    def integer(path, v, positive=True):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"config key {path!r} must be an integer")
        if positive and v <= 0:
            raise ConfigError(f"config key {path!r} must be positive")

    p = cfg["physics"]
    for k in ("quad_mass", "cable_length", "gravity", "thrust_to_weight_max",
              "rate_tau", "dt"):
        num(f"physics.{k}", p[k], positive=True)
    num("physics.payload_mass", p["payload_mass"])
    vec("physics.inertia_diag", p["inertia_diag"], 3)
    lim = cfg["limits"]
    vec("limits.omega_max", lim["omega_max"], 3)
    integer("limits.episode_steps", lim["episode_steps"])
    num("limits.body_radius", lim["body_radius"])
    norm = cfg["normalization"]
    for k, n in (("offset_quad", 3), ("offset_payload", 3), ("velocity", 3),
                 ("gate_offset", 3), ("angle", 2)):
        vec(f"normalization.{k}", norm[k], n)
    for k, v in cfg["reward"].items():
        num(f"reward.{k}", v)
    num("randomization.initial_angle", cfg["randomization"]["initial_angle"])
    ppo = cfg["ppo"]
    for k in ("total_timesteps", "num_envs", "rollout_steps", "minibatch_size", "epochs"):
        integer(f"ppo.{k}", ppo[k])
    integer("ppo.checkpoint_every", ppo["checkpoint_every"], positive=False)
    if ppo["checkpoint_every"] < 0:
        raise ConfigError("config key 'ppo.checkpoint_every' must be >= 0")
    for k in ("gamma", "gae_lambda", "clip_range", "learning_rate",
              "entropy_coef", "value_coef", "max_grad_norm"):
        num(f"ppo.{k}", ppo[k])
    if not isinstance(ppo["normalize_advantage"], bool):
        raise ConfigError("config key 'ppo.normalize_advantage' must be a boolean")
    ev = cfg["eval"]
    integer("eval.trials", ev["trials"])
    if not isinstance(ev["deterministic"], bool):
        raise ConfigError("config key 'eval.deterministic' must be a boolean")
    integer("seed", cfg["seed"], positive=False)
    if cfg["seed"] < 0:
        raise ConfigError("config key 'seed' must be >= 0")
    if cfg["out_dir"] is not None and not isinstance(cfg["out_dir"], str):
        raise ConfigError("config key 'out_dir' must be a string or null")
    track = cfg["track"]
    if isinstance(track, dict):
        _check_track_dict(track)
    elif not isinstance(track, str):
        raise ConfigError("config key 'track' must be a preset name or a mapping")


def _check_track_dict(track: dict) -> None:
    for key in track:
        if key not in _TRACK_KEYS:
            raise ConfigError(f"unknown config key 'track.{key}'")
    for key in ("name", "kind", "waypoints", "start_pos"):
        if key not in track:
            raise ConfigError(f"inline track is missing required key 'track.{key}'")
    gates = track.get("gates", [])
    if not isinstance(gates, list):
        raise ConfigError("config key 'track.gates' must be a list")
    for i, gate in enumerate(gates):
        if not isinstance(gate, dict):
            raise ConfigError(f"config key 'track.gates[{i}]' must be a mapping")
        for key in gate:
            if key not in _GATE_KEYS:
                raise ConfigError(f"unknown config key 'track.gates[{i}].{key}'")
        if "center" not in gate:
            raise ConfigError(f"config key 'track.gates[{i}]' needs a center")
    ws = track.get("workspace")
    if ws is not None:
        if not isinstance(ws, dict):
            raise ConfigError("config key 'track.workspace' must be a mapping")
        for key in ws:
            if key not in _WORKSPACE_KEYS:
                raise ConfigError(f"unknown config key 'track.workspace.{key}'")


def _deep_merge(base: dict, extra: dict, prefix: str = "") -> None:
    for key, val in extra.items():
        path = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {path!r}")
        if isinstance(base[key], dict) and isinstance(val, dict) and key != "track":
            _deep_merge(base[key], val, prefix=path + ".")
        else:
            base[key] = copy.deepcopy(val)


def apply_override(cfg: dict, assignment: str) -> None:
    """Apply one ``dotted.path=value`` override; the value parses as YAML."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    path, raw = assignment.split("=", 1)
    keys = path.strip().split(".")
    if not all(keys):
        raise ConfigError(f"override {assignment!r} has an empty key segment")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"override value {raw!r} is not valid YAML: {exc}") from exc
    node = cfg
    for key in keys[:-1]:
        if not isinstance(node.get(key), dict):
            raise ConfigError(f"unknown config key {path.strip()!r}")
        node = node[key]
    if keys[-1] not in node:
        raise ConfigError(f"unknown config key {path.strip()!r}")
    node[keys[-1]] = value


def load_config(path: str | None = None, overrides: tuple[str, ...] = ()) -> dict:
    """Defaults <- YAML file <- overrides, fully validated."""
    cfg = default_config()
    if path is not None:
        try:
            with open(path) as fh:
                loaded = yaml.safe_load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must contain a mapping")
        _check_known_keys(loaded, _DEFAULTS)
        _deep_merge(cfg, loaded)
    for assignment in overrides:
        apply_override(cfg, assignment)
    _check_types(cfg)
    return cfg


def save_snapshot(cfg: dict, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(cfg, fh, sort_keys=True)


# ---------------------------------------------------------------------------
# dict -> runtime dataclasses

def _track_from_value(value, workspace_default=None) -> TrackSpec:
    if isinstance(value, str):
        try:
            return get_track(value)
        except TrackError as exc:
            raise ConfigError(str(exc)) from exc
    gates = tuple(
        GateSpec(center=tuple(g["center"]),
                 normal=tuple(g.get("normal", (1.0, 0.0, 0.0))),
                 radius=float(g.get("radius", 0.3)),
                 collision_band=float(g.get("collision_band", 0.15)))
        for g in value.get("gates", []))
    ws_dict = value.get("workspace")
    workspace = (Workspace(min_corner=tuple(ws_dict["min_corner"]),
                           max_corner=tuple(ws_dict["max_corner"]))
                 if ws_dict else Workspace())
    try:
        return TrackSpec(
            name=str(value["name"]), kind=str(value["kind"]),
            waypoints=tuple(tuple(map(float, wp)) for wp in value["waypoints"]),
            start_pos=tuple(map(float, value["start_pos"])),
            threshold=float(value.get("threshold", 0.3)),
            laps=int(value.get("laps", 1)),
            gates=gates, workspace=workspace)
    except TrackError as exc:
        raise ConfigError(str(exc)) from exc


def build_env_config(cfg: dict) -> EnvConfig:
    p = cfg["physics"]
    params = PhysicalParams(
        quad_mass=float(p["quad_mass"]), payload_mass=float(p["payload_mass"]),
        cable_length=float(p["cable_length"]), gravity=float(p["gravity"]),
        inertia_diag=tuple(map(float, p["inertia_diag"])),
        thrust_to_weight_max=float(p["thrust_to_weight_max"]),
        rate_tau=float(p["rate_tau"]), dt=float(p["dt"]))
    n = cfg["normalization"]
    norms = NormalizationConstants(
        offset_quad=tuple(map(float, n["offset_quad"])),
        offset_payload=tuple(map(float, n["offset_payload"])),
        velocity=tuple(map(float, n["velocity"])),
        gate_offset=tuple(map(float, n["gate_offset"])),
        angle=tuple(map(float, n["angle"])))
    r = cfg["reward"]
    rewards = RewardConfig(
        bound_penalty=float(r["bound_penalty"]), excess_penalty=float(r["excess_penalty"]),
        arrival_bonus=float(r["arrival_bonus"]),
        action_smooth_weight=float(r["action_smooth_weight"]),
        target_weight=float(r["target_weight"]), gate_weight=float(r["gate_weight"]),
        angle_limit=float(r["angle_limit"]))
    lim = cfg["limits"]
    return EnvConfig(
        track=_track_from_value(cfg["track"]),
        params=params, norms=norms, rewards=rewards,
        randomization=DomainRandomization(initial_angle=float(cfg["randomization"]["initial_angle"])),
        omega_max=tuple(map(float, lim["omega_max"])),
        episode_steps=int(lim["episode_steps"]),
        body_radius=float(lim["body_radius"]))


def build_ppo_config(cfg: dict) -> PpoConfig:
    p = cfg["ppo"]
    return PpoConfig(
        total_timesteps=int(p["total_timesteps"]), num_envs=int(p["num_envs"]),
        rollout_steps=int(p["rollout_steps"]), minibatch_size=int(p["minibatch_size"]),
        epochs=int(p["epochs"]), gamma=float(p["gamma"]),
        gae_lambda=float(p["gae_lambda"]), clip_range=float(p["clip_range"]),
        learning_rate=float(p["learning_rate"]), entropy_coef=float(p["entropy_coef"]),
        value_coef=float(p["value_coef"]), max_grad_norm=float(p["max_grad_norm"]),
        normalize_advantage=bool(p["normalize_advantage"]),
        checkpoint_every=int(p["checkpoint_every"]))


# ---------------------------------------------------------------------------
# EnvConfig <-> dict, for self-contained rollout logs

def track_to_dict(track: TrackSpec) -> dict:
    out = {
        "name": track.name, "kind": track.kind,
        "waypoints": [list(wp) for wp in track.waypoints],
        "start_pos": list(track.start_pos),
        "threshold": track.threshold, "laps": track.laps,
        "workspace": {"min_corner": list(track.workspace.min_corner),
                      "max_corner": list(track.workspace.max_corner)},
    }
    if track.gates:
        out["gates"] = [{"center": list(g.center), "normal": list(g.normal),
                         "radius": g.radius, "collision_band": g.collision_band}
                        for g in track.gates]
    return out


def env_config_to_dict(env_cfg: EnvConfig) -> dict:
    p, n, r = env_cfg.params, env_cfg.norms, env_cfg.rewards
    return {
        "track": track_to_dict(env_cfg.track),
        "physics": {
            "quad_mass": p.quad_mass, "payload_mass": p.payload_mass,
            "cable_length": p.cable_length, "gravity": p.gravity,
            "inertia_diag": list(p.inertia_diag),
            "thrust_to_weight_max": p.thrust_to_weight_max,
            "rate_tau": p.rate_tau, "dt": p.dt,
        },
        "limits": {"omega_max": list(env_cfg.omega_max),
                   "episode_steps": env_cfg.episode_steps,
                   "body_radius": env_cfg.body_radius},
        "normalization": {
            "offset_quad": list(n.offset_quad), "offset_payload": list(n.offset_payload),
            "velocity": list(n.velocity), "gate_offset": list(n.gate_offset),
            "angle": list(n.angle)},
        "reward": {
            "bound_penalty": r.bound_penalty, "excess_penalty": r.excess_penalty,
            "arrival_bonus": r.arrival_bonus,
            "action_smooth_weight": r.action_smooth_weight,
            "target_weight": r.target_weight, "gate_weight": r.gate_weight,
            "angle_limit": r.angle_limit},
        "randomization": {"initial_angle": env_cfg.randomization.initial_angle},
    }


def env_config_from_dict(d: dict) -> EnvConfig:
    cfg = default_config()
    for key in ("track", "physics", "limits", "normalization", "reward", "randomization"):
        if key in d:
            if key == "track":
                cfg["track"] = copy.deepcopy(d["track"])
            else:
                _deep_merge(cfg[key], d[key], prefix=key + ".")
    return build_env_config(cfg)


def resolve_out_dir(cfg: dict, command: str) -> str:
    """Explicit out_dir wins; otherwise <root>/<command>_<track>_s<seed>."""
    if cfg.get("out_dir"):
        return cfg["out_dir"]
    root = os.environ.get(ENV_OUT_ROOT, "runs")
    track = cfg["track"] if isinstance(cfg["track"], str) else cfg["track"].get("name", "custom")
    return os.path.join(root, f"{command}_{track}_s{cfg['seed']}")
