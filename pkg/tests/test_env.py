"""Unit tests for the environment layer: observations, rewards, stepping."""

from __future__ import annotations

import numpy as np
import pytest

from oracles import ks_uniform_pvalue, rotation_matrix
from slungload import (ACTION_DIM, ContextMismatch, DegenerateGeometry,
                       DimensionMismatch, DomainRandomization, Env, EnvConfig,
                       GateSpec, NormalizationConstants, PhysicalParams,
                       RewardConfig, SteppedAfterDone, SystemState, VecEnv,
                       build_observation, denormalize_action, deviation_angles,
                       gate_events, get_track, reward_gate, reward_general,
                       reward_target)
from slungload.env import GateContext, TargetContext, WaypointContext


def make_cfg(track="smoke", **kw) -> EnvConfig:
    return EnvConfig(track=get_track(track), **kw)


def single_state(quad_pos=(0.0, 0.0, 1.0), quad_vel=(0.0, 0.0, 0.0),
                 attitude=(1.0, 0.0, 0.0, 0.0), payload_rel=(0.0, 0.0, -0.6),
                 payload_vel=(0.0, 0.0, 0.0), taut=True) -> SystemState:
    qp = np.asarray(quad_pos, float)
    return SystemState(
        quad_pos=qp, quad_vel=np.asarray(quad_vel, float),
        attitude=np.asarray(attitude, float), body_rates=np.zeros(3),
        payload_pos=qp + np.asarray(payload_rel, float),
        payload_vel=np.asarray(payload_vel, float),
        taut=np.asarray(taut), time=np.asarray(0.0))


def hover_action(params: PhysicalParams) -> np.ndarray:
    """Normalized action whose thrust balances quadrotor plus payload weight."""
    t = (params.quad_mass + params.payload_mass) / params.quad_mass
    return np.array([2.0 * t / params.thrust_to_weight_max - 1.0, 0.0, 0.0, 0.0])


# ---------------------------------------------------------------------------
# action denormalization

def test_denormalize_full_thrust():
    cmd = denormalize_action([1.0, 0.0, 0.0, 0.0], PhysicalParams(), (15, 15, 5))
    assert float(cmd.thrust) == pytest.approx(3.5, abs=1e-12)
    assert np.allclose(cmd.rate_setpoint, 0.0)


def test_denormalize_zero_thrust():
    cmd = denormalize_action([-1.0, 0.0, 0.0, 0.0], PhysicalParams(), (15, 15, 5))
    assert float(cmd.thrust) == 0.0


def test_denormalize_mixed():
    cmd = denormalize_action([0.0, 0.5, -1.0, 0.0], PhysicalParams(), (15, 15, 5))
    assert float(cmd.thrust) == pytest.approx(1.75, abs=1e-12)
    assert np.allclose(cmd.rate_setpoint, [7.5, -15.0, 0.0], atol=1e-12)


def test_denormalize_batched_and_shape_checked():
    cmds = denormalize_action(np.zeros((7, 4)), PhysicalParams(), (15, 15, 5))
    assert cmds.thrust.shape == (7,) and cmds.rate_setpoint.shape == (7, 3)
    with pytest.raises(DimensionMismatch):
        denormalize_action(np.zeros(3), PhysicalParams(), (15, 15, 5))


# ---------------------------------------------------------------------------
# deviation angles

def test_deviation_straight_down_zero():
    phi, theta = deviation_angles(single_state())
    assert float(phi) == 0.0 and float(theta) == 0.0


def test_deviation_forward_tilt():
    st = single_state(payload_rel=(0.1, 0.0, -0.1))
    phi, theta = deviation_angles(st)
    assert float(theta) == pytest.approx(np.pi / 4, abs=1e-12)
    assert float(phi) == 0.0


def test_deviation_horizontal_payload():
    st = single_state(payload_rel=(0.0, -0.2, 0.0))
    phi, theta = deviation_angles(st)
    assert float(phi) == pytest.approx(-np.pi / 2, abs=1e-12)
    assert float(theta) == 0.0  # atan2(0, 0) convention


def test_deviation_uses_body_frame(rng):
    """Angles are invariant when the whole geometry rotates with the body."""
    from conftest import random_attitude
    from oracles import rotate_vector
    rel_body = np.array([0.12, -0.2, -0.5])
    for q in random_attitude(rng, 10):
        st = single_state(attitude=q, payload_rel=rotate_vector(q, rel_body))
        phi, theta = deviation_angles(st)
        assert float(phi) == pytest.approx(np.arctan2(rel_body[1], 0.5), abs=1e-10)
        assert float(theta) == pytest.approx(np.arctan2(rel_body[0], 0.5), abs=1e-10)


def test_deviation_degenerate_raises():
    with pytest.raises(DegenerateGeometry):
        deviation_angles(single_state(payload_rel=(0.0, 0.0, 0.0)))


# ---------------------------------------------------------------------------
# observations

def test_obs_dims_per_scenario():
    assert Env(make_cfg("smoke")).obs_dim == 24
    assert Env(make_cfg("zigzag_pt")).obs_dim == 24
    assert Env(make_cfg("gate_single")).obs_dim == 27
    for track in ("smoke", "zigzag_pt", "gate_single"):
        env = Env(make_cfg(track))
        obs = env.reset(seed=3)
        assert obs.shape == (env.obs_dim,)
        assert np.all(np.isfinite(obs))


def test_obs_unit_offset_block():
    st = single_state(quad_pos=(0.0, 0.0, 1.0))
    ctx = WaypointContext(wp1=np.array([5.0, 5.0, 2.0]), wp2=np.array([5.0, 5.0, 2.0]))
    obs = build_observation(st, ctx, np.zeros(4), NormalizationConstants())
    assert np.allclose(obs[14:17], [1.0, 1.0, 1.0], atol=1e-12)
    assert np.allclose(obs[17:20], [1.0, 1.0, 1.0], atol=1e-12)


def test_obs_identity_attitude_rotation_block():
    st = single_state()
    ctx = WaypointContext(wp1=np.zeros(3), wp2=np.zeros(3))
    obs = build_observation(st, ctx, np.zeros(4), NormalizationConstants())
    assert np.allclose(obs[3:12], np.eye(3).reshape(-1), atol=1e-15)


def test_obs_rotation_block_orthonormal(rng):
    from conftest import random_attitude
    ctx = WaypointContext(wp1=np.zeros(3), wp2=np.zeros(3))
    for q in random_attitude(rng, 20):
        st = single_state(attitude=q)
        obs = build_observation(st, ctx, np.zeros(4), NormalizationConstants())
        rot = obs[3:12].reshape(3, 3)
        assert np.allclose(rot @ rot.T, np.eye(3), atol=1e-9)
        assert np.linalg.det(rot) == pytest.approx(1.0, abs=1e-9)


def test_obs_normalization_involution(rng):
    consts = NormalizationConstants()
    st = single_state(quad_pos=rng.normal(size=3), quad_vel=rng.normal(size=3))
    wp1, wp2 = rng.normal(size=(2, 3))
    ctx = WaypointContext(wp1=wp1, wp2=wp2)
    obs = build_observation(st, ctx, np.zeros(4), consts)
    assert np.allclose(obs[0:3] * consts.velocity, st.quad_vel, atol=1e-12)
    assert np.allclose(obs[14:17] * consts.offset_quad, wp1 - st.quad_pos, atol=1e-12)
    assert np.allclose(obs[17:20] * consts.offset_quad, wp2 - st.quad_pos, atol=1e-12)


def test_obs_prev_action_block_passthrough(rng):
    prev = rng.uniform(-1, 1, size=4)
    st = single_state()
    obs = build_observation(st, WaypointContext(wp1=np.zeros(3), wp2=np.zeros(3)),
                            prev, NormalizationConstants())
    assert np.array_equal(obs[20:24], prev)
    obs_gt = build_observation(
        st, GateContext(wp1=np.zeros(3), wp2=np.zeros(3), gate_center=np.ones(3)),
        prev, NormalizationConstants())
    assert obs_gt.shape == (27,)
    assert np.array_equal(obs_gt[23:27], prev)
    assert np.allclose(obs_gt[20:23] * NormalizationConstants().gate_offset,
                       np.ones(3) - st.quad_pos, atol=1e-12)


def test_obs_pt_layout_uses_payload_offset(rng):
    consts = NormalizationConstants()
    st = single_state(quad_pos=(0.3, -0.2, 1.1))
    target = np.array([1.0, 0.5, 1.4])
    obs = build_observation(st, TargetContext(target=target), np.zeros(4), consts)
    assert obs.shape == (24,)
    assert np.allclose(obs[14:17] * consts.offset_quad, target - st.quad_pos, atol=1e-12)
    assert np.allclose(obs[17:20] * consts.offset_payload, target - st.payload_pos,
                       atol=1e-12)


def test_obs_context_kind_mismatch_raises():
    st = single_state()
    ctx = WaypointContext(wp1=np.zeros(3), wp2=np.zeros(3))
    with pytest.raises(ContextMismatch):
        build_observation(st, ctx, np.zeros(4), NormalizationConstants(), kind="pt")


def test_obs_final_waypoint_duplicated():
    env = Env(make_cfg("smoke"))  # single waypoint: duplicate from the start
    obs = env.reset(seed=0)
    assert np.array_equal(obs[14:17], obs[17:20])


# ---------------------------------------------------------------------------
# reward terms

def test_reward_safe_excess_angle():
    rel = 0.6 * np.array([0.0, np.sin(1.6), -np.cos(1.6)])
    st = single_state(payload_rel=rel)
    safe, crash, smooth = reward_general(st, np.zeros(4), np.zeros(4),
                                         RewardConfig(), get_track("smoke").workspace)
    assert float(safe) == -3.0
    assert float(crash) == 0.0


def test_reward_crash_below_floor():
    st = single_state(quad_pos=(0.0, 0.0, 0.5), payload_rel=(0.0, 0.0, -0.6))
    safe, crash, smooth = reward_general(st, np.zeros(4), np.zeros(4),
                                         RewardConfig(), get_track("smoke").workspace)
    assert float(crash) == -10.0


def test_reward_smooth_zero_when_action_repeated(rng):
    a = rng.uniform(-1, 1, size=4)
    st = single_state()
    _, _, smooth = reward_general(st, a, a.copy(), RewardConfig(),
                                  get_track("smoke").workspace)
    assert float(smooth) == 0.0
    _, _, smooth2 = reward_general(st, a, np.zeros(4), RewardConfig(),
                                   get_track("smoke").workspace)
    assert float(smooth2) == pytest.approx(-1e-4 * np.linalg.norm(a), abs=1e-15)
    assert float(smooth2) < 0.0


def test_reward_target_examples():
    assert float(reward_target([3.0, 4.0, 0.0], [3.0, 0.0, 0.0])) == 16.0
    assert float(reward_target([0.0, 0.0, 2.0], [0.0, 0.0, 1.0])) == 3.0
    d = np.array([0.3, -0.7, 0.2])
    assert float(reward_target(d, d.copy())) == 0.0


def test_reward_target_telescopes(rng):
    goal = rng.normal(size=3)
    pts = rng.normal(size=(40, 3))
    total = sum(float(reward_target(goal - pts[i], goal - pts[i + 1]))
                for i in range(39))
    exact = float(np.sum((goal - pts[0]) ** 2) - np.sum((goal - pts[-1]) ** 2))
    assert total == pytest.approx(exact, abs=1e-10)


def test_reward_gate_guide_and_arrival():
    gate = GateSpec(center=(0.0, 0.0, 1.2), normal=(1.0, 0.0, 0.0), radius=0.3)
    final_wp = np.array([2.0, 0.0, 1.2])  # p_w - p_g = [2, 0, 0]
    st = single_state(quad_vel=(3.0, 0.0, 1.0))
    r = reward_gate(st, gate, final_wp, np.asarray(False), RewardConfig())
    assert float(r) == pytest.approx(3.0, abs=1e-12)
    st_perp = single_state(quad_vel=(0.0, 2.0, -1.0))
    assert float(reward_gate(st_perp, gate, final_wp, np.asarray(False),
                             RewardConfig())) == pytest.approx(0.0, abs=1e-12)
    assert float(reward_gate(st, gate, final_wp, np.asarray(True),
                             RewardConfig())) == 20.0


# ---------------------------------------------------------------------------
# reset behavior

def test_reset_zero_randomization_exact_hang():
    cfg = make_cfg("smoke", randomization=DomainRandomization(initial_angle=0.0))
    env = Env(cfg, seed=5)
    env.reset()
    st = env.state
    assert np.array_equal(st.quad_pos, get_track("smoke").start_arr())
    assert np.allclose(st.payload_pos, st.quad_pos + [0, 0, -0.6], atol=1e-15)
    phi, theta = deviation_angles(st)
    assert float(phi) == 0.0 and float(theta) == 0.0
    assert bool(st.taut)
    assert np.all(st.quad_vel == 0.0) and np.all(st.payload_vel == 0.0)


def test_reset_angle_roundtrip():
    """The drawn hang angles are recovered exactly by deviation_angles."""
    cfg = make_cfg("smoke")
    env = Env(cfg, seed=11)
    delta = cfg.randomization.initial_angle
    for k in range(20):
        env.reset(seed=100 + k)
        phi, theta = deviation_angles(env.state)
        assert abs(float(phi)) <= delta + 1e-12
        assert abs(float(theta)) <= delta + 1e-12
        # cable stays at full length
        dist = np.linalg.norm(env.state.payload_pos - env.state.quad_pos)
        assert dist == pytest.approx(0.6, abs=1e-12)


def test_reset_angles_uniform_ks():
    delta = 0.0873
    vec = VecEnv(make_cfg("smoke"), num_envs=10_000, seed=9)
    phi, theta = deviation_angles(vec.state)
    assert ks_uniform_pvalue(phi, -delta, delta) > 0.01
    assert ks_uniform_pvalue(theta, -delta, delta) > 0.01


def test_reset_deterministic_per_seed():
    env_a = Env(make_cfg("zigzag"))
    env_b = Env(make_cfg("zigzag"))
    oa = env_a.reset(seed=42)
    ob = env_b.reset(seed=42)
    assert np.array_equal(oa, ob)
    oc = env_b.reset(seed=43)
    assert not np.array_equal(oa, oc)


def test_reset_prev_action_cleared():
    env = Env(make_cfg("smoke"), seed=1)
    obs = env.reset(seed=1)
    assert np.all(obs[20:24] == 0.0)
    obs2, *_ = env.step(np.array([0.2, 0.1, 0.0, -0.1]))
    assert np.array_equal(obs2[20:24], [0.2, 0.1, 0.0, -0.1])
    obs3 = env.reset(seed=2)
    assert np.all(obs3[20:24] == 0.0)


# ---------------------------------------------------------------------------
# stepping: bookkeeping and termination

def test_step_hover_rewards(params):
    cfg = make_cfg("smoke", randomization=DomainRandomization(initial_angle=0.0))
    env = Env(cfg, seed=0)
    env.reset()
    a = hover_action(params)
    env.step(a)
    obs, rb, term, trunc, info = env.step(a)  # repeated action
    assert float(rb.smooth) == 0.0
    assert float(rb.safe) == 0.0 and float(rb.crash) == 0.0
    assert abs(float(rb.target)) < 1e-8
    assert not term and not trunc
    assert bool(info["mode"])  # still taut


def test_step_total_reconstructs_from_terms(rng):
    for track in ("smoke", "zigzag_pt", "gate_single"):
        cfg = make_cfg(track)
        w = cfg.rewards
        vec = VecEnv(cfg, num_envs=8, seed=3)
        vec.reset(seed=3)
        for _ in range(30):
            act = rng.uniform(-1, 1, size=(8, 4))
            _, rb, *_ = vec.step(act)
            rebuilt = rb.safe + rb.crash + rb.smooth + w.target_weight * (
                rb.target + w.gate_weight * rb.gate)
            assert np.array_equal(rebuilt, rb.total)
            if track != "gate_single":
                assert np.all(rb.gate == 0.0)


def test_step_crash_terminates_with_penalty(params):
    cfg = make_cfg("smoke", randomization=DomainRandomization(initial_angle=0.0))
    env = Env(cfg, seed=0)
    env.reset()
    drop = np.array([-1.0, 0.0, 0.0, 0.0])  # zero thrust
    for _ in range(200):
        obs, rb, term, trunc, info = env.step(drop)
        if term:
            break
    assert term
    assert float(rb.crash) == -10.0
    assert info["events"]["crash"]
    assert not info["success"]
    # payload leads the fall: it starts 0.6 m below the quadrotor
    assert env.state.payload_pos[2] < 0.0


def test_step_after_done_raises():
    cfg = make_cfg("smoke", randomization=DomainRandomization(initial_angle=0.0))
    env = Env(cfg, seed=0)
    env.reset()
    drop = np.array([-1.0, 0.0, 0.0, 0.0])
    done = False
    for _ in range(200):
        *_, term, trunc, _ = env.step(drop)
        if term or trunc:
            done = True
            break
    assert done
    with pytest.raises(SteppedAfterDone):
        env.step(drop)


def test_step_truncates_at_episode_limit(params):
    cfg = make_cfg("smoke", episode_steps=5,
                   randomization=DomainRandomization(initial_angle=0.0))
    env = Env(cfg, seed=0)
    env.reset()
    a = hover_action(params)
    for k in range(5):
        obs, rb, term, trunc, info = env.step(a)
    assert trunc and not term
    assert int(info["episode_length"]) == 5


def test_step_wrong_action_shape():
    env = Env(make_cfg("smoke"), seed=0)
    env.reset()
    with pytest.raises(DimensionMismatch):
        env.step(np.zeros(5))
    vec = VecEnv(make_cfg("smoke"), num_envs=3, seed=0)
    with pytest.raises(DimensionMismatch):
        vec.step(np.zeros((2, 4)))


def test_step_out_of_range_action_clipped(params):
    cfg = make_cfg("smoke", randomization=DomainRandomization(initial_angle=0.0))
    env_a = Env(cfg, seed=0)
    env_b = Env(cfg, seed=0)
    env_a.reset(seed=0)
    env_b.reset(seed=0)
    oa, _, _, _, ia = env_a.step(np.array([2.0, 0.0, 0.0, 0.0]))
    ob, _, _, _, ib = env_b.step(np.array([1.0, 0.0, 0.0, 0.0]))
    assert ia["action_clipped"] and not ib["action_clipped"]
    assert np.array_equal(oa, ob)


def test_waypoint_advance_and_success(params):
    """Crossing the only waypoint's threshold ends the episode successfully."""
    track = get_track("smoke")
    cfg = make_cfg("smoke", randomization=DomainRandomization(initial_angle=0.0))
    vec = VecEnv(cfg, num_envs=1, seed=0)
    vec.reset(seed=0)
    # teleport the quadrotor onto the waypoint: progress is judged on the
    # step segment, so the next step registers the pass
    vec._state.quad_pos[0] = track.waypoint_at(0)
    vec._state.payload_pos[0] = track.waypoint_at(0) + np.array([0, 0, -0.6])
    obs, rb, term, trunc, info = vec.step(hover_action(params)[None, :],
                                          auto_reset=False)
    assert int(info["events"]["waypoint_passed"][0]) == 0
    assert bool(term[0]) and bool(info["success"][0])


# ---------------------------------------------------------------------------
# telescoping over whole episode segments

@pytest.mark.parametrize("track", ["smoke", "zigzag_pt"])
def test_episode_target_reward_telescopes(track, rng):
    """With no waypoint switch, summed progress terms equal the net change in
    squared distance, to accumulated round-off."""
    cfg = make_cfg(track)
    vec = VecEnv(cfg, num_envs=4, seed=7)
    vec.reset(seed=7)
    tracked = (lambda s: s.payload_pos) if cfg.kind == "pt" else (lambda s: s.quad_pos)
    goal = cfg.track.waypoint_at(0)
    d0 = goal - tracked(vec.state)
    total = np.zeros(4)
    for k in range(60):
        act = np.clip(hover_action(cfg.params) + rng.normal(scale=0.05, size=(4, 4)),
                      -1, 1)
        _, rb, term, trunc, info = vec.step(act, auto_reset=False)
        total += rb.target
        assert not np.any(info["events"]["waypoint_passed"] >= 0)
        if np.any(term | trunc):
            break
    dT = goal - tracked(vec.state)
    exact = np.sum(d0 * d0, axis=-1) - np.sum(dT * dT, axis=-1)
    assert np.allclose(total, exact, atol=1e-10)


# ---------------------------------------------------------------------------
# gate event bookkeeping

def _poly_events(points_quad, points_pay, gates):
    """Feed a polyline through gate_events, accumulating fired indices."""
    n = points_quad.shape[1]
    quad_latch = np.zeros((n, len(gates)), dtype=bool)
    pl_latch = np.zeros((n, len(gates)), dtype=bool)
    eff = tuple(g.shrunk(0.12) for g in gates)
    fired, collided, pl_fired = [], [], []
    for t in range(points_quad.shape[0] - 1):
        gp, plp, gc, now, act = gate_events(
            points_quad[t], points_quad[t + 1], points_pay[t], points_pay[t + 1],
            quad_latch, pl_latch, gates, eff)
        fired.append(gp.copy())
        pl_fired.append(plp.copy())
        collided.append(gc.copy())
    return np.array(fired), np.array(pl_fired), np.array(collided)


GATE0 = GateSpec(center=(0.0, 0.0, 1.2), normal=(1.0, 0.0, 0.0), radius=0.3)


def _straight(xs, y=0.0, z=1.2):
    return np.array([[[x, y, z]] for x in xs])


def test_gate_arrival_fires_once_forward_and_back():
    xs = [-0.5, 0.5, -0.5, 0.5, -0.5, 0.5]  # three full crossings
    quad = _straight(xs)
    pay = _straight(xs, z=0.6)  # payload path far below the gate: no events
    fired, pl_fired, collided = _poly_events(quad, pay, (GATE0,))
    assert np.sum(fired >= 0) == 1
    assert int(fired[0, 0]) == 0  # fires on the first crossing
    assert np.all(collided == -1)
    assert np.all(pl_fired == -1)


def test_gate_partial_approach_then_retreat_never_fires():
    xs = [-0.5, -0.1, -0.3, -0.05, -0.5]  # hovers on the near side
    quad = _straight(xs)
    fired, _, collided = _poly_events(quad, quad.copy(), (GATE0,))
    assert np.all(fired == -1) and np.all(collided == -1)


def test_gate_reverse_entry_counts_once():
    xs = [0.5, -0.5, 0.5]  # enters backward first, then forward
    quad = _straight(xs)
    fired, _, _ = _poly_events(quad, quad.copy(), (GATE0,))
    assert np.sum(fired >= 0) == 1 and int(fired[0, 0]) == 0


def test_gate_payload_pass_latched_independently():
    xs = [-0.5, 0.5]
    quad = _straight(xs, z=1.2)
    pay = _straight(xs, z=1.1)
    fired, pl_fired, collided = _poly_events(quad, pay, (GATE0,))
    assert int(fired[0, 0]) == 0 and int(pl_fired[0, 0]) == 0
    assert np.all(collided == -1)


def test_gate_out_of_order_pass_not_counted():
    g0 = GateSpec(center=(-0.7, 0.0, 1.2), normal=(1.0, 0.0, 0.0), radius=0.3)
    g1 = GateSpec(center=(0.7, 0.0, 1.2), normal=(1.0, 0.0, 0.0), radius=0.3)
    # cross gate 1 first (going forward from between the gates), then return
    # around and take them in order
    xs = [0.0, 1.0, 0.0, -1.0, 0.0, 1.0]
    quad = _straight(xs)
    pay = _straight(xs, z=0.5)
    fired, _, _ = _poly_events(quad, pay, (g0, g1))
    seq = fired[fired >= 0]
    assert list(seq) == [0, 1]  # the early gate-1 crossing did not count


def test_gate_rim_strike_reports_collision():
    xs = [-0.5, 0.5]
    quad = _straight(xs, y=0.32)  # inside raw aperture but outside shrunk one
    pay = _straight(xs, z=0.5)
    fired, _, collided = _poly_events(quad, pay, (GATE0,))
    assert np.all(fired == -1)
    assert int(collided[0, 0]) == 0


def test_gate_cable_clip_reports_collision():
    quad = np.array([[[0.1, 0.0, 2.0]], [[0.12, 0.0, 2.0]]])
    pay = np.array([[[-0.1, 0.0, 1.2]], [[-0.12, 0.0, 1.2]]])
    fired, _, collided = _poly_events(quad, pay, (GATE0,))
    assert int(collided[0, 0]) == 0


# ---------------------------------------------------------------------------
# vectorization equivalence

def test_vec_env_matches_single(rng, params):
    cfg = make_cfg("zigzag")
    master = np.random.SeedSequence(2026)
    children = master.spawn(4)
    vec = VecEnv(cfg, num_envs=4, seed=list(children))
    singles = [Env(cfg, seed=children[i]) for i in range(4)]
    obs_v = vec.reset()
    obs_s = np.stack([e.reset() for e in singles])
    assert np.array_equal(obs_v, obs_s)
    for _ in range(40):
        act = np.clip(hover_action(params) + rng.normal(scale=0.1, size=(4, 4)), -1, 1)
        ov, rv, tv, uv, iv = vec.step(act, auto_reset=False)
        rows = [e.step(act[i]) for i, e in enumerate(singles)]
        os_ = np.stack([r[0] for r in rows])
        assert np.array_equal(ov, os_)
        assert np.array_equal(rv.total, [r[1].total for r in rows])
        assert np.array_equal(tv, [r[2] for r in rows])
        if np.any(tv | uv):
            break


def test_vec_auto_reset_surfaces_final_observation():
    cfg = make_cfg("smoke", randomization=DomainRandomization(initial_angle=0.0))
    vec = VecEnv(cfg, num_envs=2, seed=0)
    vec.reset(seed=0)
    drop = np.tile([-1.0, 0.0, 0.0, 0.0], (2, 1))
    info = {}
    for _ in range(200):
        obs, rb, term, trunc, info = vec.step(drop)
        if np.any(term):
            break
    assert np.all(term)
    assert "final_observation" in info
    # after auto-reset the live observation is the fresh episode start
    assert not np.array_equal(obs, info["final_observation"])
    assert np.all(vec._steps == 0)
    fresh = VecEnv(cfg, num_envs=2, seed=1)
    assert np.array_equal(obs[:, 20:24], np.zeros((2, 4)))
    assert np.all(np.isfinite(info["final_observation"]))


def test_vec_env_num_envs_validated():
    with pytest.raises(DimensionMismatch):
        VecEnv(make_cfg("smoke"), num_envs=0)
