"""RL environments wrapping the slung-payload simulator.

Three task kinds share one implementation:

* ``wp`` - steer the quadrotor through an ordered waypoint sequence,
* ``pt`` - bring the hanging payload to a sequence of targets,
* ``gt`` - traverse circular gates on the way to a final waypoint.

``VecEnv`` advances N independent systems at once with auto-reset (done rows
are replaced by freshly reset ones and the terminal observation is handed
back via ``info["final_observation"]``). ``Env`` is the single-system
variant without auto-reset; stepping it past termination raises.

Actions are 4-vectors in [-1, 1]: normalized collective thrust followed by
three body-rate setpoints. Observations are flat float64 vectors laid out as

    [ v_quad/k_v (3) | R row-major (9) | (phi, theta)/k_phi (2) |
      task block (6) | gate offset/k_g (3, gt only) | previous action (4) ]

where the task block is the offsets to the next two waypoints for ``wp`` and
``gt`` (final waypoint duplicated at the end of the track), and the target
offset from the quadrotor plus the target offset from the payload for
``pt``. Sizes: 24 for ``wp``/``pt``, 27 for ``gt``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar, Sequence

import numpy as np

from .dynamics import (Command, PhysicalParams, SystemState, hybrid_step,
                       quat_normalize, quat_rotate_inv, quat_to_matrix)
from .errors import ContextMismatch, DegenerateGeometry, DimensionMismatch, SteppedAfterDone
from .scenario import (GateEvent, GateSpec, TrackSpec, Workspace, cable_gate_collision,
                       gate_crossing, segment_point_distance, workspace_violation)

ACTION_DIM = 4
OBS_DIM = {"wp": 24, "pt": 24, "gt": 27}


@dataclass(frozen=True)
class NormalizationConstants:
    """Per-axis scales dividing raw observation blocks."""

    offset_quad: tuple[float, float, float] = (5.0, 5.0, 1.0)      # m
    offset_payload: tuple[float, float, float] = (5.0, 5.0, 1.0)   # m
    velocity: tuple[float, float, float] = (10.0, 10.0, 3.0)       # m/s
    gate_offset: tuple[float, float, float] = (3.0, 3.0, 1.0)      # m
    angle: tuple[float, float] = (1.5, 1.5)                        # rad

    def __post_init__(self) -> None:
        for name in ("offset_quad", "offset_payload", "velocity", "gate_offset", "angle"):
            if np.any(np.asarray(getattr(self, name)) <= 0):
                raise ValueError(f"normalization constant {name} must be positive")


@dataclass(frozen=True)
class RewardConfig:
    bound_penalty: float = 10.0          # charged once when leaving the workspace
    excess_penalty: float = 3.0          # charged while a deviation angle exceeds the limit
    arrival_bonus: float = 20.0          # gate pass, before gate-term scaling
    action_smooth_weight: float = 1e-4   # penalty per unit action change
    target_weight: float = 10.0          # scales the squared-distance progress term
    gate_weight: float = 5e-3            # scales the gate term inside the target weight
    angle_limit: float = 1.5             # rad, safety limit on |phi|, |theta|


@dataclass(frozen=True)
class DomainRandomization:
    """Reset-time randomization: payload hang angles drawn U(-a, a) each."""

    initial_angle: float = 0.0873  # rad


@dataclass(frozen=True)
class EnvConfig:
    track: TrackSpec
    params: PhysicalParams = PhysicalParams()
    norms: NormalizationConstants = NormalizationConstants()
    rewards: RewardConfig = RewardConfig()
    randomization: DomainRandomization = DomainRandomization()
    omega_max: tuple[float, float, float] = (15.0, 15.0, 5.0)  # rad/s
    episode_steps: int = 1500
    body_radius: float = 0.12  # m, shrinks gate apertures for the quadrotor

    @property
    def kind(self) -> str:
        return self.track.kind

    @property
    def obs_dim(self) -> int:
        return OBS_DIM[self.track.kind]


@dataclass
class RewardBreakdown:
    """Per-term rewards; ``target`` and ``gate`` are stored unweighted."""

    safe: np.ndarray
    crash: np.ndarray
    smooth: np.ndarray
    target: np.ndarray
    gate: np.ndarray
    total: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.stack((self.safe, self.crash, self.smooth,
                         self.target, self.gate, self.total), axis=-1)


# ---------------------------------------------------------------------------
# pure functions shared by both env classes and the tests

def denormalize_action(action: np.ndarray, params: PhysicalParams,
                       omega_max: Sequence[float]) -> Command:
    """Map [-1, 1]^4 actions to a thrust plus body-rate command.

    Thrust spans [0, thrust_to_weight_max] in weight-normalized units; each
    rate channel spans [-omega_max_i, omega_max_i].
    """
    a = np.asarray(action, dtype=np.float64)
    if a.shape[-1] != ACTION_DIM:
        raise DimensionMismatch("action must have trailing dim 4")
    thrust = 0.5 * (a[..., 0] + 1.0) * params.thrust_to_weight_max
    rates = a[..., 1:4] * np.asarray(omega_max, dtype=np.float64)
    return Command(thrust=thrust, rate_setpoint=rates)


def _deviation_raw(quad_pos, payload_pos, attitude):
    rel = quat_rotate_inv(quat_normalize(attitude), payload_pos - quad_pos)
    # 0.0 - z instead of -z keeps the exactly-horizontal zero-numerator case
    # at angle 0 (atan2(0, +0) = 0) rather than pi (atan2(0, -0) = pi)
    down = 0.0 - rel[..., 2]
    phi = np.arctan2(rel[..., 1], down)
    theta = np.arctan2(rel[..., 0], down)
    return phi, theta


def deviation_angles(state: SystemState) -> tuple[np.ndarray, np.ndarray]:
    """Payload swing angles seen from the body frame.

    ``phi`` is the angle of the cable in the body y-z plane, ``theta`` in the
    body x-z plane; both are zero when the payload hangs along body -z.
    """
    rel = state.payload_pos - state.quad_pos
    if np.any(np.sqrt(np.sum(rel * rel, axis=-1)) < 1e-9):
        raise DegenerateGeometry("payload coincides with the quadrotor")
    return _deviation_raw(state.quad_pos, state.payload_pos, state.attitude)


def reward_general(state: SystemState, action: np.ndarray, prev_action: np.ndarray,
                   cfg: RewardConfig, workspace: Workspace):
    """Task-independent terms: safety angle penalty, crash penalty, smoothness.

    The safety term penalizes without terminating; the crash term fires when
    either body leaves the workspace (the episode then ends).
    """
    phi, theta = _deviation_raw(state.quad_pos, state.payload_pos, state.attitude)
    unsafe = (np.abs(phi) > cfg.angle_limit) | (np.abs(theta) > cfg.angle_limit)
    safe = np.where(unsafe, -cfg.excess_penalty, 0.0)
    violated = workspace_violation(state.quad_pos, state.payload_pos, workspace)
    crash = np.where(violated, -cfg.bound_penalty, 0.0)
    diff = np.asarray(action) - np.asarray(prev_action)
    smooth = -cfg.action_smooth_weight * np.sqrt(np.sum(diff * diff, axis=-1))
    return safe, crash, smooth


def reward_target(delta_prev: np.ndarray, delta_cur: np.ndarray) -> np.ndarray:
    """Squared-distance progress toward the active target, telescoping."""
    p = np.asarray(delta_prev, dtype=np.float64)
    c = np.asarray(delta_cur, dtype=np.float64)
    return np.sum(p * p, axis=-1) - np.sum(c * c, axis=-1)


def reward_gate(state: SystemState, gate: GateSpec, final_waypoint: np.ndarray,
                passed: np.ndarray, cfg: RewardConfig) -> np.ndarray:
    """Arrival bonus on the pass step, else velocity toward the final waypoint
    as seen from the gate (both unweighted)."""
    guide_dir = np.asarray(final_waypoint, dtype=np.float64) - gate.center_arr()
    guide_dir = guide_dir / max(float(np.linalg.norm(guide_dir)), 1e-12)
    guide = np.sum(state.quad_vel * guide_dir, axis=-1)
    return np.where(np.asarray(passed, dtype=bool), cfg.arrival_bonus, guide)


@dataclass
class WaypointContext:
    kind: ClassVar[str] = "wp"
    wp1: np.ndarray  # (..., 3) next waypoint
    wp2: np.ndarray  # (..., 3) the one after (final duplicated at track end)


@dataclass
class TargetContext:
    kind: ClassVar[str] = "pt"
    target: np.ndarray  # (..., 3) active payload target


@dataclass
class GateContext:
    kind: ClassVar[str] = "gt"
    wp1: np.ndarray
    wp2: np.ndarray
    gate_center: np.ndarray  # (..., 3) active gate center


def build_observation(state: SystemState, ctx, prev_action: np.ndarray,
                      norms: NormalizationConstants, kind: str | None = None) -> np.ndarray:
    """Assemble the flat normalized observation for one scenario context."""
    if kind is not None and ctx.kind != kind:
        raise ContextMismatch(f"expected a {kind!r} context, got {ctx.kind!r}")
    k_v = np.asarray(norms.velocity)
    k_q = np.asarray(norms.offset_quad)
    k_phi = np.asarray(norms.angle)
    vel = state.quad_vel / k_v
    rot = quat_to_matrix(quat_normalize(state.attitude))
    rot9 = rot.reshape(rot.shape[:-2] + (9,))
    phi, theta = _deviation_raw(state.quad_pos, state.payload_pos, state.attitude)
    ang = np.stack((phi, theta), axis=-1) / k_phi
    pa = np.broadcast_to(np.asarray(prev_action, dtype=np.float64),
                         state.batch_shape + (ACTION_DIM,))
    if ctx.kind == "wp":
        blocks = (vel, rot9, ang, (ctx.wp1 - state.quad_pos) / k_q,
                  (ctx.wp2 - state.quad_pos) / k_q, pa)
    elif ctx.kind == "pt":
        k_p = np.asarray(norms.offset_payload)
        blocks = (vel, rot9, ang, (ctx.target - state.quad_pos) / k_q,
                  (ctx.target - state.payload_pos) / k_p, pa)
    elif ctx.kind == "gt":
        k_g = np.asarray(norms.gate_offset)
        blocks = (vel, rot9, ang, (ctx.wp1 - state.quad_pos) / k_q,
                  (ctx.wp2 - state.quad_pos) / k_q,
                  (ctx.gate_center - state.quad_pos) / k_g, pa)
    else:
        raise ContextMismatch(f"unknown context kind {ctx.kind!r}")
    return np.concatenate(blocks, axis=-1)


def _as_seed_sequences(seed, n: int) -> list[np.random.SeedSequence]:
    """Per-env seed derivation.

    An int or SeedSequence master spawns one child per env; an explicit list
    of SeedSequences is used as-is, which is how a batched env and a bank of
    single envs are made to draw identical streams.
    """
    if isinstance(seed, (list, tuple)):
        if len(seed) != n:
            raise DimensionMismatch(f"need {n} seed sequences, got {len(seed)}")
        return [s if isinstance(s, np.random.SeedSequence) else np.random.SeedSequence(s)
                for s in seed]
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return seed.spawn(n)


class VecEnv:
    """N independent systems stepped in lockstep with auto-reset."""

    def __init__(self, cfg: EnvConfig, num_envs: int, seed=0):
        if num_envs < 1:
            raise DimensionMismatch("num_envs must be >= 1")
        self.cfg = cfg
        self.num_envs = int(num_envs)
        track = cfg.track
        self._wp_table = track.waypoint_array()
        self._n_wp = track.num_waypoints
        self._total = track.total_targets
        self._final_wp = track.waypoint_at(self._total - 1)
        self._tracked_payload = track.kind == "pt"
        if track.kind == "gt":
            self._gates = track.gates
            self._gates_eff = tuple(g.shrunk(cfg.body_radius) for g in track.gates)
            centers = np.stack([g.center_arr() for g in self._gates])
            dirs = self._final_wp - centers
            self._gate_centers = centers
            self._guide_dirs = dirs / np.linalg.norm(dirs, axis=-1, keepdims=True)
        else:
            self._gates = ()
        self._rngs = [np.random.Generator(np.random.Philox(s))
                      for s in _as_seed_sequences(seed, num_envs)]
        n = self.num_envs
        self._state = SystemState(
            quad_pos=np.zeros((n, 3)), quad_vel=np.zeros((n, 3)),
            attitude=np.tile([1.0, 0.0, 0.0, 0.0], (n, 1)), body_rates=np.zeros((n, 3)),
            payload_pos=np.zeros((n, 3)), payload_vel=np.zeros((n, 3)),
            taut=np.ones(n, dtype=bool), time=np.zeros(n))
        self._wp_index = np.zeros(n, dtype=np.int64)
        self._prev_delta = np.zeros((n, 3))
        self._prev_action = np.zeros((n, ACTION_DIM))
        self._steps = np.zeros(n, dtype=np.int64)
        self._ep_return = np.zeros(n)
        n_g = len(self._gates)
        self._quad_gate = np.zeros((n, n_g), dtype=bool)
        self._pl_gate = np.zeros((n, n_g), dtype=bool)
        self._reset_rows(np.arange(n))

    # -- properties ---------------------------------------------------------

    @property
    def kind(self) -> str:
        return self.cfg.kind

    @property
    def obs_dim(self) -> int:
        return self.cfg.obs_dim

    @property
    def state(self) -> SystemState:
        return self._state.copy()

    @property
    def wp_index(self) -> np.ndarray:
        return self._wp_index.copy()

    # -- reset --------------------------------------------------------------

    def _reset_rows(self, idx: np.ndarray) -> None:
        cfg = self.cfg
        track = cfg.track
        length = cfg.params.cable_length
        start = track.start_arr()
        delta = cfg.randomization.initial_angle
        for i in idx:
            phi, theta = self._rngs[i].uniform(-delta, delta, size=2)
            hang = np.array([np.tan(theta), np.tan(phi), -1.0])
            hang /= np.linalg.norm(hang)
            self._state.quad_pos[i] = start
            self._state.quad_vel[i] = 0.0
            self._state.attitude[i] = (1.0, 0.0, 0.0, 0.0)
            self._state.body_rates[i] = 0.0
            self._state.payload_pos[i] = start + length * hang
            self._state.payload_vel[i] = 0.0
            self._state.taut[i] = True
            self._state.time[i] = 0.0
        self._wp_index[idx] = 0
        self._steps[idx] = 0
        self._ep_return[idx] = 0.0
        self._prev_action[idx] = 0.0
        if len(self._gates):
            self._quad_gate[idx] = False
            self._pl_gate[idx] = False
        tracked = self._state.payload_pos if self._tracked_payload else self._state.quad_pos
        self._prev_delta[idx] = self._wp_table[0] - tracked[idx]

    def reset(self, seed=None) -> np.ndarray:
        """Reset every env; with ``seed`` the per-env streams are rebuilt."""
        if seed is not None:
            self._rngs = [np.random.Generator(np.random.Philox(s))
                          for s in _as_seed_sequences(seed, self.num_envs)]
        self._reset_rows(np.arange(self.num_envs))
        return self._observe()

    # -- observation --------------------------------------------------------

    def _context(self):
        st = self._state
        idx1 = np.minimum(self._wp_index, self._total - 1)
        c1 = self._wp_table[idx1 % self._n_wp]
        if self.kind == "pt":
            return TargetContext(target=c1)
        idx2 = np.minimum(self._wp_index + 1, self._total - 1)
        c2 = self._wp_table[idx2 % self._n_wp]
        if self.kind == "wp":
            return WaypointContext(wp1=c1, wp2=c2)
        act_gate = np.minimum(self._quad_gate.sum(axis=1), len(self._gates) - 1)
        return GateContext(wp1=c1, wp2=c2, gate_center=self._gate_centers[act_gate])

    def _observe(self) -> np.ndarray:
        return build_observation(self._state, self._context(), self._prev_action,
                                 self.cfg.norms, kind=self.kind)

    # -- step ---------------------------------------------------------------

    def step(self, actions: np.ndarray, auto_reset: bool = True):
        """Advance every env one control step.

        Returns ``(obs, rewards, terminated, truncated, info)`` where
        ``rewards`` is a RewardBreakdown of (N,) arrays.
        """
        cfg = self.cfg
        n = self.num_envs
        a_in = np.asarray(actions, dtype=np.float64)
        if a_in.shape != (n, ACTION_DIM):
            raise DimensionMismatch(f"actions must have shape ({n}, {ACTION_DIM})")
        clipped = np.any(np.abs(a_in) > 1.0, axis=-1)
        act = np.clip(a_in, -1.0, 1.0)
        cmd = denormalize_action(act, cfg.params, cfg.omega_max)

        prev_quad = self._state.quad_pos.copy()
        prev_pay = self._state.payload_pos.copy()
        st = hybrid_step(self._state, cmd, cfg.params)
        self._state = st

        # waypoint progress judged on the tracked body's step segment
        tracked_prev = prev_pay if self._tracked_payload else prev_quad
        tracked_cur = st.payload_pos if self._tracked_payload else st.quad_pos
        active = np.minimum(self._wp_index, self._total - 1)
        centers = self._wp_table[active % self._n_wp]
        near = segment_point_distance(tracked_prev, tracked_cur, centers)
        hit = (near <= cfg.track.threshold) & (self._wp_index < self._total)
        r_target = reward_target(self._prev_delta, centers - tracked_cur)
        self._wp_index = self._wp_index + hit
        wp_passed = np.where(hit, active, -1).astype(np.int64)
        task_done = self._wp_index >= self._total
        active2 = np.minimum(self._wp_index, self._total - 1)
        self._prev_delta = self._wp_table[active2 % self._n_wp] - tracked_cur

        # gate events
        r_gate = np.zeros(n)
        gate_passed = np.full(n, -1, dtype=np.int64)
        pl_gate_passed = np.full(n, -1, dtype=np.int64)
        gate_collided = np.full(n, -1, dtype=np.int64)
        if self._gates:
            gate_passed, pl_gate_passed, gate_collided, passed_now, act_gate = gate_events(
                prev_quad, st.quad_pos, prev_pay, st.payload_pos,
                self._quad_gate, self._pl_gate, self._gates, self._gates_eff)
            guide = np.sum(self._guide_dirs[act_gate] * st.quad_vel, axis=-1)
            r_gate = np.where(passed_now, cfg.rewards.arrival_bonus, guide)
        collide = gate_collided >= 0

        safe, crash, smooth = reward_general(st, act, self._prev_action,
                                             cfg.rewards, cfg.track.workspace)
        violated = crash < 0.0
        w = cfg.rewards
        total = safe + crash + smooth + w.target_weight * (r_target + w.gate_weight * r_gate)

        self._steps += 1
        self._ep_return += total
        self._prev_action = act.copy()

        terminated = violated | collide | task_done
        truncated = (self._steps >= cfg.episode_steps) & ~terminated
        success = task_done & ~violated & ~collide
        if self._gates:
            success &= np.all(self._quad_gate, axis=1) & np.all(self._pl_gate, axis=1)

        obs = self._observe()
        info = {
            "mode": st.taut.copy(),
            "wp_index": self._wp_index.copy(),
            "quad_vel": st.quad_vel.copy(),
            "action_clipped": clipped,
            "events": {
                "waypoint_passed": wp_passed,
                "gate_passed": gate_passed,
                "payload_gate_passed": pl_gate_passed,
                "gate_collided": gate_collided,
                "crash": violated,
                "safety": safe < 0.0,
            },
            "success": success,
            "episode_return": self._ep_return.copy(),
            "episode_length": self._steps.copy(),
        }
        done = terminated | truncated
        if auto_reset and np.any(done):
            info["final_observation"] = obs.copy()
            self._reset_rows(np.nonzero(done)[0])
            fresh = self._observe()
            obs = np.where(done[:, None], fresh, obs)

        rewards = RewardBreakdown(safe=safe, crash=crash, smooth=smooth,
                                  target=r_target, gate=r_gate, total=total)
        return obs, rewards, terminated, truncated, info


def _cable_hits_gate(quad_pos, payload_pos, gate: GateSpec) -> np.ndarray:
    return np.asarray(cable_gate_collision(quad_pos, payload_pos, gate), dtype=bool)


def gate_events(prev_quad: np.ndarray, cur_quad: np.ndarray, prev_pay: np.ndarray,
                cur_pay: np.ndarray, quad_latch: np.ndarray, pl_latch: np.ndarray,
                gates_raw, gates_eff):
    """One step of per-gate crossing bookkeeping; updates the latches in place.

    The quadrotor is tested against the body-radius-shrunk gates, the payload
    and the cable segment against the raw geometry. A quadrotor pass counts
    only on the active gate (the first one not yet latched, so gates must be
    taken in order) and each latch bit guarantees the pass can fire at most
    once per gate per episode. Returns ``(gate_passed, pl_gate_passed,
    gate_collided, passed_now, active_gate)`` where the first three are
    per-env gate indices (-1 where nothing happened).
    """
    n = prev_quad.shape[0]
    act_gate = np.minimum(quad_latch.sum(axis=1), len(gates_raw) - 1)
    gate_passed = np.full(n, -1, dtype=np.int64)
    pl_gate_passed = np.full(n, -1, dtype=np.int64)
    gate_collided = np.full(n, -1, dtype=np.int64)
    passed_now = np.zeros(n, dtype=bool)
    for j, (raw, eff) in enumerate(zip(gates_raw, gates_eff)):
        q_ev = gate_crossing(prev_quad, cur_quad, eff)
        p_ev = gate_crossing(prev_pay, cur_pay, raw)
        cable = _cable_hits_gate(cur_quad, cur_pay, raw)
        pass_j = (q_ev == int(GateEvent.PASSED)) & (act_gate == j) & ~quad_latch[:, j]
        quad_latch[:, j] |= pass_j
        passed_now |= pass_j
        gate_passed = np.where(pass_j, j, gate_passed)
        plp_j = (p_ev == int(GateEvent.PASSED)) & ~pl_latch[:, j]
        pl_latch[:, j] |= plp_j
        pl_gate_passed = np.where(plp_j, j, pl_gate_passed)
        col_j = (q_ev == int(GateEvent.COLLIDED)) | (p_ev == int(GateEvent.COLLIDED)) | cable
        gate_collided = np.where(col_j & (gate_collided < 0), j, gate_collided)
    return gate_passed, pl_gate_passed, gate_collided, passed_now, act_gate


class Env:
    """Single-system environment; no auto-reset, raises if stepped when done."""

    def __init__(self, cfg: EnvConfig, seed=0):
        if isinstance(seed, (int, np.integer)):
            seed = np.random.SeedSequence(int(seed))
        self._vec = VecEnv(cfg, 1, seed=[seed])
        self._done = False

    @property
    def cfg(self) -> EnvConfig:
        return self._vec.cfg

    @property
    def kind(self) -> str:
        return self._vec.kind

    @property
    def obs_dim(self) -> int:
        return self._vec.obs_dim

    @property
    def state(self) -> SystemState:
        """Copy of the underlying state with the batch axis squeezed away."""
        st = self._vec.state
        return SystemState(
            quad_pos=st.quad_pos[0], quad_vel=st.quad_vel[0], attitude=st.attitude[0],
            body_rates=st.body_rates[0], payload_pos=st.payload_pos[0],
            payload_vel=st.payload_vel[0], taut=st.taut[0], time=st.time[0])

    @property
    def wp_index(self) -> int:
        return int(self._vec.wp_index[0])

    def reset(self, seed=None) -> np.ndarray:
        if seed is not None and isinstance(seed, (int, np.integer)):
            seed = [np.random.SeedSequence(int(seed))]
        elif isinstance(seed, np.random.SeedSequence):
            seed = [seed]
        self._done = False
        return self._vec.reset(seed=seed)[0]

    def step(self, action: np.ndarray):
        """Returns (obs, RewardBreakdown of floats, terminated, truncated, info)."""
        if self._done:
            raise SteppedAfterDone("call reset() before stepping a finished episode")
        a = np.asarray(action, dtype=np.float64)
        if a.shape != (ACTION_DIM,):
            raise DimensionMismatch(f"action must have shape ({ACTION_DIM},)")
        obs, rb, term, trunc, info = self._vec.step(a[None, :], auto_reset=False)
        self._done = bool(term[0] | trunc[0])
        rewards = RewardBreakdown(*(np.asarray(getattr(rb, f))[0]
                                    for f in ("safe", "crash", "smooth", "target", "gate", "total")))
        out_info = {}
        for key, val in info.items():
            if key == "events":
                out_info["events"] = {k: v[0] for k, v in val.items()}
            elif isinstance(val, np.ndarray):
                out_info[key] = val[0]
            else:
                out_info[key] = val
        return obs[0], rewards, bool(term[0]), bool(trunc[0]), out_info
