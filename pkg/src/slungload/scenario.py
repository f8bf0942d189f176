"""Tracks, gates, and workspace geometry for the three task families.

A track bundles everything an episode needs besides physics: an ordered
waypoint list (optionally repeated for multiple laps), a start position, a
pass threshold, the workspace box, and, for gate tasks, a list of circular
gates. Task kinds are ``"wp"`` (quadrotor waypoint passing), ``"pt"``
(payload target reaching), and ``"gt"`` (gate traversal).

The geometric event tests here are deliberately segment based: progress and
crossings are judged on the line segment travelled during one control step,
so fast bodies cannot tunnel through a waypoint sphere or a gate plane.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

from .errors import TrackError

KINDS = ("wp", "pt", "gt")


class GateEvent(IntEnum):
    NO_EVENT = 0
    PASSED = 1
    COLLIDED = 2


@dataclass(frozen=True)
class Workspace:
    """Axis-aligned flight volume; the boundary counts as inside."""

    min_corner: tuple[float, float, float] = (-2.5, -2.5, 0.0)
    max_corner: tuple[float, float, float] = (2.5, 2.5, 2.0)

    def __post_init__(self) -> None:
        lo, hi = np.asarray(self.min_corner), np.asarray(self.max_corner)
        if not np.all(hi > lo):
            raise TrackError("workspace max_corner must exceed min_corner per axis")

    def contains(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points)
        lo = np.asarray(self.min_corner)
        hi = np.asarray(self.max_corner)
        return np.all((p >= lo) & (p <= hi), axis=-1)


@dataclass(frozen=True)
class GateSpec:
    """Circular aperture in a plane, crossed along its unit normal.

    A body crossing the plane within ``radius`` of the center passes; one
    crossing in the annulus ``(radius, radius + collision_band]`` hits the
    frame. Crossings farther out are ignored.
    """

    center: tuple[float, float, float]
    normal: tuple[float, float, float] = (1.0, 0.0, 0.0)
    radius: float = 0.3
    collision_band: float = 0.15

    def __post_init__(self) -> None:
        n = np.asarray(self.normal, dtype=np.float64)
        length = float(np.linalg.norm(n))
        if length < 1e-9:
            raise TrackError("gate normal must be nonzero")
        object.__setattr__(self, "normal", tuple((n / length).tolist()))
        if self.radius <= 0 or self.collision_band < 0:
            raise TrackError("gate radius must be positive, collision_band non-negative")

    def shrunk(self, body_radius: float) -> "GateSpec":
        """Effective gate for a body of finite size: tighter hole, wider rim."""
        if body_radius >= self.radius:
            raise TrackError("body_radius leaves no usable gate aperture")
        return replace(self, radius=self.radius - body_radius,
                       collision_band=self.collision_band + body_radius)

    def center_arr(self) -> np.ndarray:
        return np.asarray(self.center, dtype=np.float64)

    def normal_arr(self) -> np.ndarray:
        return np.asarray(self.normal, dtype=np.float64)


@dataclass(frozen=True)
class TrackSpec:
    """One episode's course definition."""

    name: str
    kind: str                                   # "wp" | "pt" | "gt"
    waypoints: tuple[tuple[float, float, float], ...]
    start_pos: tuple[float, float, float]
    threshold: float = 0.3                      # waypoint pass radius, m
    laps: int = 1
    gates: tuple[GateSpec, ...] = ()
    workspace: Workspace = field(default_factory=Workspace)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise TrackError(f"unknown track kind {self.kind!r}")
        if len(self.waypoints) == 0:
            raise TrackError("a track needs at least one waypoint")
        if self.threshold <= 0:
            raise TrackError("waypoint threshold must be positive")
        if self.laps < 1:
            raise TrackError("laps must be >= 1")
        if self.kind == "gt" and len(self.gates) == 0:
            raise TrackError("gate tracks need at least one gate")
        if self.kind != "gt" and len(self.gates) > 0:
            raise TrackError("only gate tracks may define gates")
        ws = self.workspace
        for i, wp in enumerate(self.waypoints):
            if not bool(ws.contains(np.asarray(wp, dtype=np.float64))):
                raise TrackError(f"waypoint {i} of track {self.name!r} lies outside the workspace")
        if not bool(ws.contains(np.asarray(self.start_pos, dtype=np.float64))):
            raise TrackError(f"start position of track {self.name!r} lies outside the workspace")

    @property
    def num_waypoints(self) -> int:
        return len(self.waypoints)

    @property
    def total_targets(self) -> int:
        """Number of waypoint passes required to finish (waypoints x laps)."""
        return len(self.waypoints) * self.laps

    def waypoint_array(self) -> np.ndarray:
        return np.asarray(self.waypoints, dtype=np.float64)

    def waypoint_at(self, index) -> np.ndarray:
        """Active waypoint for a progress index, clamped to the final target."""
        idx = np.minimum(np.asarray(index), self.total_targets - 1)
        return self.waypoint_array()[idx % self.num_waypoints]

    def start_arr(self) -> np.ndarray:
        return np.asarray(self.start_pos, dtype=np.float64)


# ---------------------------------------------------------------------------
# segment geometry

def segment_point_distance(p0: np.ndarray, p1: np.ndarray, center: np.ndarray) -> np.ndarray:
    """Minimum distance from points `center` to segments p0->p1, batched."""
    p0 = np.asarray(p0, dtype=np.float64)
    d = np.asarray(p1, dtype=np.float64) - p0
    rel = np.asarray(center, dtype=np.float64) - p0
    dd = np.sum(d * d, axis=-1)
    t = np.sum(rel * d, axis=-1) / np.maximum(dd, 1e-300)
    t = np.clip(t, 0.0, 1.0)
    closest = p0 + t[..., None] * d
    return np.sqrt(np.sum((np.asarray(center) - closest) ** 2, axis=-1))


def _plane_crossing(p0, p1, center, normal):
    """Signed-plane crossing test for segments p0->p1.

    Returns (crossed, offset) where ``crossed`` marks segments whose endpoints
    sit on opposite sides of the gate plane (in either travel direction, so
    reversing the segment classifies identically), and ``offset`` is the
    in-plane distance from the gate center at the interpolated crossing point
    (meaningless where not crossed). A segment that starts or ends exactly on
    the plane counts on the half that leaves it, so an ordinary crossing
    sampled exactly at the plane is still detected exactly once.
    """
    s0 = np.sum((p0 - center) * normal, axis=-1)
    s1 = np.sum((p1 - center) * normal, axis=-1)
    crossed = ((s0 < 0.0) & (s1 >= 0.0)) | ((s1 < 0.0) & (s0 >= 0.0))
    denom = s1 - s0
    alpha = np.where(crossed, -s0 / np.where(denom == 0.0, 1.0, denom), 0.0)
    point = p0 + alpha[..., None] * (p1 - p0)
    radial = point - center - np.sum((point - center) * normal, axis=-1)[..., None] * normal
    offset = np.sqrt(np.sum(radial * radial, axis=-1))
    return crossed, offset


def gate_crossing(pos_prev: np.ndarray, pos_cur: np.ndarray, gate: GateSpec):
    """Classify one step of a point body against a gate.

    Returns GateEvent values (enum for unbatched input): PASSED for a plane
    crossing within the aperture, COLLIDED for one in the frame annulus,
    NO_EVENT otherwise (including far-out crossings and motion that stays on
    one side). The classification is symmetric in the travel direction; the
    env layer latches the first pass per gate.
    """
    crossed, offset = _plane_crossing(np.asarray(pos_prev, dtype=np.float64),
                                      np.asarray(pos_cur, dtype=np.float64),
                                      gate.center_arr(), gate.normal_arr())
    out = np.where(
        crossed & (offset <= gate.radius), int(GateEvent.PASSED),
        np.where(crossed & (offset <= gate.radius + gate.collision_band),
                 int(GateEvent.COLLIDED), int(GateEvent.NO_EVENT)))
    if out.ndim == 0:
        return GateEvent(int(out))
    return out.astype(np.int8)


def cable_gate_collision(quad_pos: np.ndarray, payload_pos: np.ndarray,
                         gate: GateSpec) -> np.ndarray:
    """True where the quad-payload segment pierces the gate frame annulus."""
    center, normal = gate.center_arr(), gate.normal_arr()
    q = np.asarray(quad_pos, dtype=np.float64)
    p = np.asarray(payload_pos, dtype=np.float64)
    sq = np.sum((q - center) * normal, axis=-1)
    sp = np.sum((p - center) * normal, axis=-1)
    crossed = (sq * sp) < 0.0
    denom = sp - sq
    alpha = np.where(crossed, -sq / np.where(denom == 0.0, 1.0, denom), 0.0)
    point = q + alpha[..., None] * (p - q)
    radial = point - center - np.sum((point - center) * normal, axis=-1)[..., None] * normal
    offset = np.sqrt(np.sum(radial * radial, axis=-1))
    hit = crossed & (offset > gate.radius) & (offset <= gate.radius + gate.collision_band)
    if hit.ndim == 0:
        return bool(hit)
    return hit


def waypoint_progress(pos_prev: np.ndarray, pos_cur: np.ndarray, track: TrackSpec,
                      index: int) -> tuple[int, bool]:
    """Advance the waypoint index if the step segment grazes the active sphere.

    At most one waypoint is consumed per step. ``index`` counts total passes
    including laps; once it reaches ``total_targets`` the track is finished
    and no further progress is possible.
    """
    if index >= track.total_targets:
        return index, False
    center = track.waypoint_at(index)
    dist = segment_point_distance(np.asarray(pos_prev, dtype=np.float64),
                                  np.asarray(pos_cur, dtype=np.float64), center)
    passed = bool(dist <= track.threshold)
    return index + int(passed), passed


def workspace_violation(quad_pos: np.ndarray, payload_pos: np.ndarray,
                        workspace: Workspace) -> np.ndarray:
    """True where the quadrotor or the payload left the flight volume."""
    return ~(workspace.contains(quad_pos) & workspace.contains(payload_pos))


# ---------------------------------------------------------------------------
# shipped track presets

def _wp(name, waypoints, start, threshold=0.3, laps=1, kind="wp", workspace=None):
    extra = {"workspace": workspace} if workspace is not None else {}
    return TrackSpec(name=name, kind=kind, waypoints=tuple(map(tuple, waypoints)),
                     start_pos=tuple(start), threshold=threshold, laps=laps,
                     **extra)


def _zigzag(kind: str = "wp") -> TrackSpec:
    # quadrotor tracks pass within 0.5 m, payload-target variants within 0.2 m;
    # the flight volume leaves braking room beyond every corner so an overshoot
    # is recoverable instead of terminal
    name = "zigzag" if kind == "wp" else f"zigzag_{kind}"
    return _wp(name,
               [(-1.0, 0.6, 3.0), (1.0, -0.6, 2.9), (3.0, 0.6, 3.0)],
               (-3.0, -0.6, 3.0), threshold=0.5 if kind == "wp" else 0.2,
               laps=2, kind=kind,
               workspace=Workspace((-8.0, -6.0, 0.0), (8.0, 6.0, 6.0)))


def _eight3() -> TrackSpec:
    # figure-eight lobes crossing at the origin, three laps
    pts = [(0.0, 0.0, 1.0), (1.0, 0.8, 1.0), (1.9, 0.0, 1.0), (1.0, -0.8, 1.0),
           (0.0, 0.0, 1.0), (-1.0, 0.8, 1.0), (-1.9, 0.0, 1.0), (-1.0, -0.8, 1.0)]
    return _wp("eight3", pts, (-1.0, -1.2, 1.0), threshold=0.5, laps=3)


def _heart() -> TrackSpec:
    # closed heart-shaped loop, payload-target task
    t = np.linspace(0.0, 2.0 * np.pi, 9, endpoint=False)
    x = np.sin(t) ** 3
    z = (13.0 * np.cos(t) - 5.0 * np.cos(2 * t) - 2.0 * np.cos(3 * t) - np.cos(4 * t)) / 16.0
    pts = [(1.5 * xi, 0.0, 1.0 + 0.55 * zi) for xi, zi in zip(x, z)]
    return TrackSpec(name="heart", kind="pt", waypoints=tuple(pts),
                     start_pos=(0.0, 0.0, 1.55), threshold=0.2)


def _star10() -> TrackSpec:
    # five-pointed star traced twice at constant height
    order = [0, 2, 4, 1, 3]
    pts = []
    for k in order:
        a = np.pi / 2.0 + k * 2.0 * np.pi / 5.0
        pts.append((1.6 * np.cos(a), 1.6 * np.sin(a), 1.0))
    return TrackSpec(name="star10", kind="wp", waypoints=tuple(map(tuple, pts)),
                     start_pos=(0.0, -0.8, 1.0), threshold=0.5, laps=2)


_GATE_BOX = Workspace((-3.5, -2.5, 0.0), (3.5, 2.5, 3.0))


def _gate_single() -> TrackSpec:
    # the flight volume leaves room above the gate for the swing pump and
    # braking room past the final waypoint
    return TrackSpec(
        name="gate_single", kind="gt",
        waypoints=((1.8, 0.0, 1.5),), start_pos=(-2.0, 0.0, 1.5), threshold=0.5,
        gates=(GateSpec(center=(0.0, 0.0, 1.5), normal=(1.0, 0.0, 0.0), radius=0.3),),
        workspace=_GATE_BOX)


def _gate_double() -> TrackSpec:
    return TrackSpec(
        name="gate_double", kind="gt",
        waypoints=((2.0, 0.0, 1.5),), start_pos=(-2.0, 0.0, 1.5), threshold=0.5,
        gates=(GateSpec(center=(-0.7, 0.0, 1.5), normal=(1.0, 0.0, 0.0), radius=0.3),
               GateSpec(center=(0.7, 0.0, 1.5), normal=(1.0, 0.0, 0.0), radius=0.3)),
        workspace=_GATE_BOX)


def _smoke() -> TrackSpec:
    # short diagnostic hop used by fast training checks
    return _wp("smoke", [(1.0, 0.0, 1.0)], (-1.0, 0.0, 1.0), threshold=0.5)


_PRESETS = {
    "zigzag": _zigzag,
    "zigzag_pt": lambda: _zigzag("pt"),
    "eight3": _eight3,
    "heart": _heart,
    "star10": _star10,
    "gate_single": _gate_single,
    "gate_double": _gate_double,
    "smoke": _smoke,
}


def list_tracks() -> list[str]:
    return sorted(_PRESETS)


def get_track(name: str) -> TrackSpec:
    try:
        builder = _PRESETS[name]
    except KeyError:
        raise TrackError(f"unknown track preset {name!r}; known: {', '.join(list_tracks())}") from None
    return builder()
