"""Hybrid dynamics of a quadrotor carrying a cable-suspended payload.

The cable is massless and inextensible, so the coupled system lives in one of
two regimes:

* taut  - quadrotor and payload move as a constrained pair; the cable applies
  equal and opposite tension along its axis and the payload direction evolves
  on the unit sphere,
* slack - the vehicles decouple; the quadrotor flies its nominal rigid-body
  dynamics and the payload is ballistic.

Every function here is batch polymorphic: state arrays carry an arbitrary
leading shape, with vectors stored as ``(..., 3)``, quaternions as
``(..., 4)`` (scalar first, Hamilton convention), and scalars as ``(...,)``.
A single system is simply the unbatched case. All operations are pure and
deterministic; integration uses classic RK4 with manifold quantities
(attitude quaternion, cable direction) renormalized inside the derivative
evaluations and once more after the full step.

Frames: world is East-North-Up with gravity along -z; body rates are in the
body frame. The cable direction ``rho`` points from the quadrotor to the
payload, so a payload hanging at rest gives ``rho = (0, 0, -1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

from .errors import DimensionMismatch, ModeError, NonFiniteState

# Smallest length used to guard unit-vector divisions.
_EPS_LEN = 1e-12


class CableMode(IntEnum):
    SLACK = 0
    TAUT = 1


class Transition(IntEnum):
    """Mode change indicated by an instantaneous (state, command) pair."""

    NONE = 0
    TAUT_TO_SLACK = 1
    SLACK_TO_TAUT = 2


@dataclass(frozen=True)
class PhysicalParams:
    """Physical constants of the vehicle, payload, and inner-loop controller."""

    quad_mass: float = 0.305        # kg
    payload_mass: float = 0.070     # kg
    cable_length: float = 0.6       # m
    gravity: float = 9.81           # m/s^2
    inertia_diag: tuple[float, float, float] = (1.4e-3, 1.4e-3, 2.2e-3)  # kg m^2
    thrust_to_weight_max: float = 3.5   # max collective thrust / (quad weight)
    rate_tau: float = 0.05          # body-rate loop time constant, s
    dt: float = 0.01                # control/integration step, s

    def __post_init__(self) -> None:
        if self.quad_mass <= 0 or self.cable_length <= 0:
            raise ValueError("quad_mass and cable_length must be positive")
        if self.payload_mass < 0:
            raise ValueError("payload_mass must be non-negative")
        if self.rate_tau <= 0 or self.dt <= 0:
            raise ValueError("rate_tau and dt must be positive")

    @property
    def total_mass(self) -> float:
        return self.quad_mass + self.payload_mass

    @property
    def inertia(self) -> np.ndarray:
        return np.asarray(self.inertia_diag, dtype=np.float64)

    @property
    def max_thrust(self) -> float:
        """Largest collective thrust in newtons."""
        return self.thrust_to_weight_max * self.quad_mass * self.gravity

    def gravity_vec(self) -> np.ndarray:
        return np.array([0.0, 0.0, -self.gravity])


@dataclass
class Command:
    """Inner-loop setpoint: collective thrust plus body-rate targets.

    ``thrust`` is normalized by quadrotor weight (1.0 hovers a payload-free
    vehicle); ``rate_setpoint`` is rad/s in the body frame.
    """

    thrust: np.ndarray          # (...,)
    rate_setpoint: np.ndarray   # (..., 3)

    def __post_init__(self) -> None:
        self.thrust = np.asarray(self.thrust, dtype=np.float64)
        self.rate_setpoint = np.asarray(self.rate_setpoint, dtype=np.float64)
        if self.rate_setpoint.shape[-1] != 3:
            raise DimensionMismatch("rate_setpoint must have trailing dim 3")


@dataclass
class SystemState:
    """Full state of the coupled system, batchable over a leading shape.

    ``taut`` holds the cable mode per batch element (True = taut). ``time``
    is integrated alongside the state purely for logging convenience.
    """

    quad_pos: np.ndarray      # (..., 3) m
    quad_vel: np.ndarray      # (..., 3) m/s
    attitude: np.ndarray      # (..., 4) unit quaternion, scalar first
    body_rates: np.ndarray    # (..., 3) rad/s
    payload_pos: np.ndarray   # (..., 3) m
    payload_vel: np.ndarray   # (..., 3) m/s
    taut: np.ndarray = field(default_factory=lambda: np.asarray(True))
    time: np.ndarray = field(default_factory=lambda: np.asarray(0.0))

    def __post_init__(self) -> None:
        for name in ("quad_pos", "quad_vel", "attitude", "body_rates",
                     "payload_pos", "payload_vel"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        self.taut = np.asarray(self.taut, dtype=bool)
        self.time = np.asarray(self.time, dtype=np.float64)
        if self.attitude.shape[-1] != 4:
            raise DimensionMismatch("attitude must have trailing dim 4")
        for name in ("quad_pos", "quad_vel", "body_rates", "payload_pos", "payload_vel"):
            if getattr(self, name).shape[-1] != 3:
                raise DimensionMismatch(f"{name} must have trailing dim 3")

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.quad_pos.shape[:-1]

    def copy(self) -> "SystemState":
        return SystemState(
            quad_pos=self.quad_pos.copy(), quad_vel=self.quad_vel.copy(),
            attitude=self.attitude.copy(), body_rates=self.body_rates.copy(),
            payload_pos=self.payload_pos.copy(), payload_vel=self.payload_vel.copy(),
            taut=self.taut.copy(), time=self.time.copy())

    def mode(self) -> np.ndarray:
        return np.where(self.taut, int(CableMode.TAUT), int(CableMode.SLACK))


def hover_state(params: PhysicalParams, quad_pos, batch_shape: tuple[int, ...] = ()) -> SystemState:
    """Level attitude, zero rates and velocities, payload hanging straight down."""
    qp = np.broadcast_to(np.asarray(quad_pos, dtype=np.float64), batch_shape + (3,)).copy()
    zeros3 = np.zeros(batch_shape + (3,))
    quat = np.zeros(batch_shape + (4,))
    quat[..., 0] = 1.0
    pp = qp.copy()
    pp[..., 2] -= params.cable_length
    return SystemState(
        quad_pos=qp, quad_vel=zeros3.copy(), attitude=quat,
        body_rates=zeros3.copy(), payload_pos=pp, payload_vel=zeros3.copy(),
        taut=np.ones(batch_shape, dtype=bool), time=np.zeros(batch_shape))


# ---------------------------------------------------------------------------
# small vector/quaternion helpers (all batch polymorphic)

def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=-1)


def _norm(a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(a * a, axis=-1))


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ax, ay, az = a[..., 0], a[..., 1], a[..., 2]
    bx, by, bz = b[..., 0], b[..., 1], b[..., 2]
    return np.stack((ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx), axis=-1)


def _unit(a: np.ndarray) -> np.ndarray:
    return a / np.maximum(_norm(a), _EPS_LEN)[..., None]


def quat_normalize(q: np.ndarray) -> np.ndarray:
    return q / np.maximum(_norm(q), _EPS_LEN)[..., None]


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate body-frame vectors into the world frame: v_w = R(q) v_b."""
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    t = 2.0 * _cross(q[..., 1:], v)
    return v + w[..., None] * t + _cross(q[..., 1:], t)


def quat_rotate_inv(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate world-frame vectors into the body frame: v_b = R(q)^T v_w."""
    qc = np.concatenate((q[..., :1], -q[..., 1:]), axis=-1)
    return quat_rotate(qc, v)


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Body-to-world rotation matrix, shape (..., 3, 3)."""
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    rows = np.stack((
        1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
        2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
        2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y),
    ), axis=-1)
    return rows.reshape(q.shape[:-1] + (3, 3))


def thrust_axis(q: np.ndarray) -> np.ndarray:
    """World direction of the body +z axis (collective thrust direction)."""
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return np.stack((
        2.0 * (x * z + w * y),
        2.0 * (y * z - w * x),
        1.0 - 2.0 * (x * x + y * y),
    ), axis=-1)


def _quat_deriv(q: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """qdot = 0.5 * q (x) (0, omega), with omega in the body frame."""
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    p, r, s = omega[..., 0], omega[..., 1], omega[..., 2]
    return 0.5 * np.stack((
        -x * p - y * r - z * s,
        w * p + y * s - z * r,
        w * r - x * s + z * p,
        w * s + x * r - y * p,
    ), axis=-1)


def from_euler_zyx(yaw, pitch, roll) -> np.ndarray:
    """Quaternion for a Z-Y-X (yaw, pitch, roll) rotation sequence."""
    cy, sy = np.cos(yaw * 0.5), np.sin(yaw * 0.5)
    cp, sp = np.cos(pitch * 0.5), np.sin(pitch * 0.5)
    cr, sr = np.cos(roll * 0.5), np.sin(roll * 0.5)
    return np.stack((
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    ), axis=-1)


# ---------------------------------------------------------------------------
# force / torque level quantities

def thrust_world(attitude: np.ndarray, thrust_norm: np.ndarray, params: PhysicalParams) -> np.ndarray:
    """Collective thrust vector in the world frame, newtons."""
    mag = np.asarray(thrust_norm) * (params.quad_mass * params.gravity)
    return mag[..., None] * thrust_axis(quat_normalize(attitude))


def rate_loop(state: SystemState, cmd: Command, params: PhysicalParams) -> np.ndarray:
    """Body torque of the inner rate controller.

    The controller inverts the gyroscopic term, so the closed loop is exactly
    first order: omega_dot = (rate_setpoint - omega) / rate_tau.
    """
    inertia = params.inertia
    omega = state.body_rates
    feedback = inertia * (cmd.rate_setpoint - omega) / params.rate_tau
    return feedback + _cross(omega, inertia * omega)


def _tension_raw(quad_pos, quad_vel, attitude, thrust_norm, payload_pos, payload_vel,
                 params: PhysicalParams) -> np.ndarray:
    """Cable tension assuming the taut-mode constraint, newtons.

    Positive values pull the vehicles together; a negative value means the
    rigid-cable solution would have to push, i.e. the cable goes slack.
    """
    length = params.cable_length
    rho = _unit(payload_pos - quad_pos)
    rho_dot = (payload_vel - quad_vel) / length
    tw = thrust_world(attitude, thrust_norm, params)
    radial = _dot(rho, tw) - params.quad_mass * length * _dot(rho_dot, rho_dot)
    return -params.payload_mass * radial / params.total_mass


def cable_tension(state: SystemState, cmd: Command, params: PhysicalParams) -> np.ndarray:
    """Tension of the taut cable under the given command. ModeError if slack."""
    if not np.all(state.taut):
        raise ModeError("cable_tension requires every batch element to be taut")
    return _tension_raw(state.quad_pos, state.quad_vel, state.attitude, cmd.thrust,
                        state.payload_pos, state.payload_vel, params)


# ---------------------------------------------------------------------------
# continuous dynamics (derivative fields) and RK4 stepping

def _taut_deriv(pay_pos, pay_vel, rho, rho_dot, quat, omega,
                thrust_norm, rate_cmd, params: PhysicalParams):
    """Time derivative of the taut-mode state tuple.

    The field is evaluated on normalized copies of the quaternion and cable
    direction so that RK4 stage points, which drift off the unit manifolds at
    O(dt^2), do not scale the applied forces.
    """
    qn = quat_normalize(quat)
    rn = _unit(rho)
    length = params.cable_length
    tw = thrust_world(qn, thrust_norm, params)
    spin2 = _dot(rho_dot, rho_dot)
    radial = (_dot(rn, tw) - params.quad_mass * length * spin2) / params.total_mass
    pay_acc = radial[..., None] * rn + params.gravity_vec()
    rho_ddot = -spin2[..., None] * rn + _cross(rn, _cross(rn, tw)) / (params.quad_mass * length)
    return (pay_vel, pay_acc, rho_dot, rho_ddot,
            _quat_deriv(qn, omega), (rate_cmd - omega) / params.rate_tau)


def _quad_deriv(quad_pos, quad_vel, quat, omega, thrust_norm, rate_cmd,
                params: PhysicalParams):
    """Nominal free-flight quadrotor field (slack mode)."""
    qn = quat_normalize(quat)
    acc = params.gravity_vec() + thrust_world(qn, thrust_norm, params) / params.quad_mass
    return (quad_vel, acc, _quat_deriv(qn, omega), (rate_cmd - omega) / params.rate_tau)


def _rk4(deriv, state_tuple, dt, *args):
    k1 = deriv(*state_tuple, *args)
    k2 = deriv(*(y + (0.5 * dt) * k for y, k in zip(state_tuple, k1)), *args)
    k3 = deriv(*(y + (0.5 * dt) * k for y, k in zip(state_tuple, k2)), *args)
    k4 = deriv(*(y + dt * k for y, k in zip(state_tuple, k3)), *args)
    sixth = dt / 6.0
    return tuple(y + sixth * (a + 2.0 * b + 2.0 * c + d)
                 for y, a, b, c, d in zip(state_tuple, k1, k2, k3, k4))


def _integrate_taut(qp, qv, at, br, pp, pv, thrust, rate_cmd, params, dt):
    length = params.cable_length
    rho = (pp - qp) / length
    rho_dot = (pv - qv) / length
    pp2, pv2, rho2, rho_dot2, at2, br2 = _rk4(
        _taut_deriv, (pp, pv, rho, rho_dot, at, br), dt, thrust, rate_cmd, params)
    # project back onto the constraint manifold
    rho2 = _unit(rho2)
    rho_dot2 = rho_dot2 - _dot(rho_dot2, rho2)[..., None] * rho2
    at2 = quat_normalize(at2)
    qp2 = pp2 - length * rho2
    qv2 = pv2 - length * rho_dot2
    return qp2, qv2, at2, br2, pp2, pv2


def _integrate_slack(qp, qv, at, br, pp, pv, thrust, rate_cmd, params, dt):
    qp2, qv2, at2, br2 = _rk4(_quad_deriv, (qp, qv, at, br), dt, thrust, rate_cmd, params)
    at2 = quat_normalize(at2)
    # ballistic payload has a closed-form solution per step
    g = params.gravity_vec()
    pp2 = pp + pv * dt + (0.5 * dt * dt) * g
    pv2 = pv + dt * g
    return qp2, qv2, at2, br2, pp2, pv2


def _check_finite(*arrays) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteState("integration produced a non-finite state field")


def step_taut(state: SystemState, cmd: Command, params: PhysicalParams,
              dt: float | None = None) -> SystemState:
    """One RK4 step of the coupled taut-mode dynamics (no transition logic)."""
    if not np.all(state.taut):
        raise ModeError("step_taut requires taut mode")
    dt = params.dt if dt is None else dt
    out = _integrate_taut(state.quad_pos, state.quad_vel, state.attitude, state.body_rates,
                          state.payload_pos, state.payload_vel,
                          cmd.thrust, cmd.rate_setpoint, params, dt)
    _check_finite(*out)
    return SystemState(*out, taut=state.taut.copy(), time=state.time + dt)


def step_slack(state: SystemState, cmd: Command, params: PhysicalParams,
               dt: float | None = None) -> SystemState:
    """One RK4 step of the decoupled slack-mode dynamics (no transition logic)."""
    if np.any(state.taut):
        raise ModeError("step_slack requires slack mode")
    dt = params.dt if dt is None else dt
    out = _integrate_slack(state.quad_pos, state.quad_vel, state.attitude, state.body_rates,
                           state.payload_pos, state.payload_vel,
                           cmd.thrust, cmd.rate_setpoint, params, dt)
    _check_finite(*out)
    return SystemState(*out, taut=state.taut.copy(), time=state.time + dt)


# ---------------------------------------------------------------------------
# mode transitions

def detect_transition(state: SystemState, cmd: Command, params: PhysicalParams) -> np.ndarray:
    """Instantaneous transition test for a (state, command) pair.

    Taut elements switch to slack when the constrained-dynamics tension is
    negative; slack elements switch to taut when the separation reaches the
    cable length. Returns Transition values, enum for unbatched input.
    """
    tension = _tension_raw(state.quad_pos, state.quad_vel, state.attitude, cmd.thrust,
                           state.payload_pos, state.payload_vel, params)
    sep = _norm(state.payload_pos - state.quad_pos)
    out = np.where(
        state.taut & (tension < 0.0), int(Transition.TAUT_TO_SLACK),
        np.where(~state.taut & (sep >= params.cable_length),
                 int(Transition.SLACK_TO_TAUT), int(Transition.NONE)))
    if out.ndim == 0:
        return Transition(int(out))
    return out.astype(np.int8)


def apply_taut_impulse(state: SystemState, params: PhysicalParams) -> SystemState:
    """Momentum-conserving impulse applied the instant the cable snaps taut.

    The velocity components of both bodies along the cable axis jump to their
    common momentum-weighted value; tangential components are untouched. A
    purely tangential relative velocity leaves the state unchanged.
    """
    new = state.copy()
    axis = _unit(state.payload_pos - state.quad_pos)
    s_quad = _dot(state.quad_vel, axis)
    s_pay = _dot(state.payload_vel, axis)
    s_common = (params.quad_mass * s_quad + params.payload_mass * s_pay) / params.total_mass
    new.quad_vel = state.quad_vel + (s_common - s_quad)[..., None] * axis
    new.payload_vel = state.payload_vel + (s_common - s_pay)[..., None] * axis
    return new


def _retaut_arrays(qp, qv, pp, pv, mask, params):
    """Impulse plus payload projection onto the cable sphere, masked rows only.

    The radial impulse is only applied where the pair is separating; a closing
    pair re-slackens immediately, so gluing it to the rod would be wrong.
    Returns updated (qv, pp, pv).
    """
    axis = _unit(pp - qp)
    s_quad = _dot(qv, axis)
    s_pay = _dot(pv, axis)
    s_common = (params.quad_mass * s_quad + params.payload_mass * s_pay) / params.total_mass
    hit = mask & (s_pay - s_quad >= 0.0)
    qv2 = np.where(hit[..., None], qv + (s_common - s_quad)[..., None] * axis, qv)
    pv2 = np.where(hit[..., None], pv + (s_common - s_pay)[..., None] * axis, pv)
    pp2 = np.where(mask[..., None], qp + params.cable_length * axis, pp)
    return qv2, pp2, pv2


def hybrid_step(state: SystemState, cmd: Command, params: PhysicalParams,
                dt: float | None = None) -> SystemState:
    """One control step of the full hybrid system.

    Transition handling happens at step boundaries only:

    1. before integrating, taut elements whose constrained tension under the
       fresh command is negative drop to slack, and slack elements already at
       or past full extension snap taut (impulse + projection);
    2. each element integrates one RK4 step in its current mode;
    3. slack elements that crossed full extension during the step snap taut,
       so a returned state never violates the cable constraint.
    """
    dt = params.dt if dt is None else dt
    qp, qv = state.quad_pos, state.quad_vel
    at, br = state.attitude, state.body_rates
    pp, pv = state.payload_pos, state.payload_vel
    taut = state.taut.copy()
    thrust, rate_cmd = cmd.thrust, cmd.rate_setpoint
    length = params.cable_length

    # 1. boundary transitions under the fresh command
    released = np.zeros_like(taut)
    if np.any(taut):
        tension = _tension_raw(qp, qv, at, thrust, pp, pv, params)
        released = taut & (tension < 0.0)
        taut = taut & ~released
    # a just-released element sits at exactly full extension, so exempt it
    # from the snap test or it would flip straight back to taut
    slack = ~taut & ~released
    if np.any(slack):
        snap = slack & (_norm(pp - qp) >= length)
        if np.any(snap):
            qv, pp, pv = _retaut_arrays(qp, qv, pp, pv, snap, params)
            taut = taut | snap

    # 2. integrate each element in its mode
    if np.all(taut):
        fields = _integrate_taut(qp, qv, at, br, pp, pv, thrust, rate_cmd, params, dt)
    elif not np.any(taut):
        fields = _integrate_slack(qp, qv, at, br, pp, pv, thrust, rate_cmd, params, dt)
    else:
        ft = _integrate_taut(qp, qv, at, br, pp, pv, thrust, rate_cmd, params, dt)
        fs = _integrate_slack(qp, qv, at, br, pp, pv, thrust, rate_cmd, params, dt)
        m = taut[..., None]
        fields = tuple(np.where(m, a, b) for a, b in zip(ft, fs))
    qp, qv, at, br, pp, pv = fields

    # 3. slack elements that shot past full extension snap taut now
    slack = ~taut
    if np.any(slack):
        snap = slack & (_norm(pp - qp) >= length)
        if np.any(snap):
            qv, pp, pv = _retaut_arrays(qp, qv, pp, pv, snap, params)
            taut = taut | snap

    _check_finite(qp, qv, at, br, pp, pv)
    return SystemState(quad_pos=qp, quad_vel=qv, attitude=at, body_rates=br,
                       payload_pos=pp, payload_vel=pv, taut=taut, time=state.time + dt)
