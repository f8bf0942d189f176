"""Shared fixtures and random-state generators for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from slungload import Command, PhysicalParams, SystemState
from slungload.dynamics import from_euler_zyx


@pytest.fixture
def params() -> PhysicalParams:
    return PhysicalParams()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260814)


def _unit_rows(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_attitude(rng: np.random.Generator, n: int, max_tilt: float = 0.5) -> np.ndarray:
    """Random unit quaternions with roll/pitch bounded by max_tilt radians."""
    yaw = rng.uniform(-np.pi, np.pi, size=n)
    pitch = rng.uniform(-max_tilt, max_tilt, size=n)
    roll = rng.uniform(-max_tilt, max_tilt, size=n)
    return from_euler_zyx(yaw, pitch, roll)


def random_taut_state(rng: np.random.Generator, params: PhysicalParams, n: int,
                      speed: float = 2.0, swing_rate: float = 2.5,
                      body_rate: float = 3.0, max_tilt: float = 0.5) -> SystemState:
    """Valid taut states: payload on the cable sphere, swing velocity tangent."""
    quad_pos = rng.uniform(-1.0, 1.0, size=(n, 3)) + np.array([0.0, 0.0, 5.0])
    rho = _unit_rows(rng, n)
    # bias the cable direction downward so states resemble flight, not inversion
    rho[:, 2] = -np.abs(rho[:, 2]) - 0.2
    rho /= np.linalg.norm(rho, axis=-1, keepdims=True)
    rho_dot = rng.normal(size=(n, 3))
    rho_dot -= np.sum(rho_dot * rho, axis=-1, keepdims=True) * rho
    scale = rng.uniform(0.0, swing_rate, size=(n, 1))
    norms = np.linalg.norm(rho_dot, axis=-1, keepdims=True)
    rho_dot = rho_dot / np.maximum(norms, 1e-12) * scale
    quad_vel = rng.uniform(-speed, speed, size=(n, 3))
    payload_pos = quad_pos + params.cable_length * rho
    payload_vel = quad_vel + params.cable_length * rho_dot
    return SystemState(
        quad_pos=quad_pos, quad_vel=quad_vel,
        attitude=random_attitude(rng, n, max_tilt),
        body_rates=rng.uniform(-body_rate, body_rate, size=(n, 3)),
        payload_pos=payload_pos, payload_vel=payload_vel,
        taut=np.ones(n, dtype=bool), time=np.zeros(n))


def random_slack_state(rng: np.random.Generator, params: PhysicalParams, n: int,
                       speed: float = 2.0, body_rate: float = 3.0,
                       max_tilt: float = 0.5) -> SystemState:
    """Valid slack states: payload strictly inside the cable sphere."""
    quad_pos = rng.uniform(-1.0, 1.0, size=(n, 3)) + np.array([0.0, 0.0, 5.0])
    offset = _unit_rows(rng, n) * rng.uniform(0.2, 0.9, size=(n, 1)) * params.cable_length
    return SystemState(
        quad_pos=quad_pos, quad_vel=rng.uniform(-speed, speed, size=(n, 3)),
        attitude=random_attitude(rng, n, max_tilt),
        body_rates=rng.uniform(-body_rate, body_rate, size=(n, 3)),
        payload_pos=quad_pos + offset,
        payload_vel=rng.uniform(-speed, speed, size=(n, 3)),
        taut=np.zeros(n, dtype=bool), time=np.zeros(n))


def random_command(rng: np.random.Generator, n: int, thrust_lo: float = 0.6,
                   thrust_hi: float = 2.2, rate: float = 3.0) -> Command:
    return Command(thrust=rng.uniform(thrust_lo, thrust_hi, size=n),
                   rate_setpoint=rng.uniform(-rate, rate, size=(n, 3)))


def state_to_oracle(state: SystemState) -> dict:
    """Repack a SystemState as the plain-array dict the oracles integrate."""
    return {
        "xq": np.array(state.quad_pos, copy=True),
        "vq": np.array(state.quad_vel, copy=True),
        "q": np.array(state.attitude, copy=True),
        "w": np.array(state.body_rates, copy=True),
        "xp": np.array(state.payload_pos, copy=True),
        "vp": np.array(state.payload_vel, copy=True),
        "taut": np.array(state.taut, copy=True),
    }
