"""Path geometry shared by both controllers, ILOS guidance and the PD autopilot.

Sign conventions: the cross-track error is positive when the vessel lies to
starboard of the path direction, and a positive rudder angle turns the ship
to starboard (positive yaw rate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .dynamics import VesselState

Point = tuple[float, float]

DELTA_MAX = math.radians(35.0)


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    return math.pi - (math.pi - a) % (2.0 * math.pi)


@dataclass(frozen=True)
class WaypointPath:
    """Polyline of waypoints (ship lengths) with the currently active target.

    ``start`` is where the first leg begins (the episode start position).
    ``finished`` is set once the last waypoint has been reached.
    """

    waypoints: tuple[Point, ...]
    start: Point = (0.0, 0.0)
    active_index: int = 0
    acceptance_radius: float = 0.5
    finished: bool = False

    def __post_init__(self):
        wps = tuple((float(x), float(y)) for x, y in self.waypoints)
        object.__setattr__(self, "waypoints", wps)
        object.__setattr__(self, "start", (float(self.start[0]), float(self.start[1])))
        if not wps:
            raise ValueError("a path needs at least one waypoint")
        for a, b in zip(wps, wps[1:]):
            if a == b:
                raise ValueError(f"consecutive waypoints coincide at {a}")
        if not 0 <= self.active_index < len(wps):
            raise ValueError("active_index out of range")
        if not self.acceptance_radius > 0:
            raise ValueError("acceptance_radius must be positive")

    @property
    def active(self) -> Point:
        return self.waypoints[self.active_index]

    @property
    def previous(self) -> Point:
        return self.start if self.active_index == 0 else self.waypoints[self.active_index - 1]

    @property
    def is_last(self) -> bool:
        return self.active_index == len(self.waypoints) - 1

    def translated(self, dx: float, dy: float) -> "WaypointPath":
        return replace(
            self,
            waypoints=tuple((x + dx, y + dy) for x, y in self.waypoints),
            start=(self.start[0] + dx, self.start[1] + dy),
        )


def path_frame(path: WaypointPath) -> tuple[Point, Point, float]:
    """Active segment (origin, end) and its tangent angle in the global frame."""
    (x0, y0), (x1, y1) = path.previous, path.active
    if x0 == x1 and y0 == y1:
        # start placed on the first waypoint; fall back to the next leg's heading
        nxt = path.waypoints[min(path.active_index + 1, len(path.waypoints) - 1)]
        return (x0, y0), (x1, y1), math.atan2(nxt[1] - y1, nxt[0] - x1)
    return (x0, y0), (x1, y1), math.atan2(y1 - y0, x1 - x0)


def cross_track_error(pos: Point, seg_start: Point, seg_end: Point) -> float:
    """Signed distance from the line through the segment, starboard positive."""
    dx, dy = seg_end[0] - seg_start[0], seg_end[1] - seg_start[1]
    length = math.hypot(dx, dy)
    if length == 0.0:
        raise ValueError("degenerate segment")
    px, py = pos[0] - seg_start[0], pos[1] - seg_start[1]
    return (dx * py - dy * px) / length


def along_track(pos: Point, seg_start: Point, seg_end: Point) -> float:
    """Projection of ``pos`` onto the segment direction, measured from its start."""
    dx, dy = seg_end[0] - seg_start[0], seg_end[1] - seg_start[1]
    length = math.hypot(dx, dy)
    if length == 0.0:
        raise ValueError("degenerate segment")
    return ((pos[0] - seg_start[0]) * dx + (pos[1] - seg_start[1]) * dy) / length


def course_angle(state: VesselState) -> float:
    """Direction of the global velocity vector."""
    if state.u == 0.0 and state.v == 0.0:
        raise ValueError("course undefined at zero speed")
    return state.psi + math.atan2(state.v, state.u)


def course_error(state: VesselState, reference: float, mode: str = "course") -> float:
    """Reference angle minus course (or heading), wrapped to (-pi, pi].

    ``mode="heading"`` uses psi instead of the velocity direction.
    """
    if mode == "course":
        chi = course_angle(state)
    elif mode == "heading":
        chi = state.psi
    else:
        raise ValueError(f"unknown course mode {mode!r}")
    return wrap_angle(reference - chi)


def waypoint_advance(path: WaypointPath, pos: Point) -> tuple[WaypointPath, bool]:
    """Switch to the next waypoint once inside the acceptance circle."""
    if path.finished:
        return path, False
    wx, wy = path.active
    if math.hypot(pos[0] - wx, pos[1] - wy) >= path.acceptance_radius:
        return path, False
    if path.is_last:
        return replace(path, finished=True), True
    return replace(path, active_index=path.active_index + 1), True


def skip_waypoint(path: WaypointPath) -> WaypointPath:
    """Give up on the active waypoint and move on (used after a miss)."""
    if path.is_last:
        return replace(path, finished=True)
    return replace(path, active_index=path.active_index + 1)


@dataclass(frozen=True)
class IlosState:
    y_int: float = 0.0
    Delta: float = 2.0
    k: float = 0.05

    def __post_init__(self):
        if not self.Delta > 0:
            raise ValueError("look-ahead distance must be positive")
        if not math.isfinite(self.y_int):
            raise ValueError("ILOS integral state is not finite")


def ilos_desired_heading(ilos: IlosState, e: float, gamma_p: float, h: float) -> tuple[float, IlosState]:
    """Integral line-of-sight heading and the integrator advanced by ``h``.

    psi_d = gamma_p - atan((e + k y_int)/Delta)
    y_int' = Delta e / (Delta^2 + (e + k y_int)^2)
    """
    if not h > 0:
        raise ValueError("guidance step must be positive")
    shifted = e + ilos.k * ilos.y_int
    psi_d = gamma_p - math.atan(shifted / ilos.Delta)
    y_dot = ilos.Delta * e / (ilos.Delta**2 + shifted**2)
    return psi_d, replace(ilos, y_int=ilos.y_int + y_dot * h)


@dataclass(frozen=True)
class PdGains:
    Kp: float = 2.5
    Kd: float = 4.0

    def __post_init__(self):
        if self.Kp < 0 or self.Kd < 0:
            raise ValueError("PD gains must be non-negative")


def pd_rudder(psi_d: float, state: VesselState, gains: PdGains, delta_max: float = DELTA_MAX) -> float:
    """delta_c = Kp wrap(psi_d - psi) - Kd r, saturated at +-delta_max."""
    cmd = gains.Kp * wrap_angle(psi_d - state.psi) - gains.Kd * state.r
    return min(max(cmd, -delta_max), delta_max)


class PdIlosAutopilot:
    """Conventional autopilot: ILOS guidance feeding a PD heading loop."""

    def __init__(self, gains: PdGains = PdGains(), Delta: float = 2.0, k: float = 0.05):
        self.gains = gains
        self.Delta = Delta
        self.k = k
        self.ilos = IlosState(0.0, Delta, k)
        self._segment: tuple[Point, Point] | None = None

    def reset(self) -> None:
        self.ilos = IlosState(0.0, self.Delta, self.k)
        self._segment = None

    def command(self, state: VesselState, path: WaypointPath, h: float) -> float:
        origin, end, gamma_p = path_frame(path)
        if self._segment != (origin, end):
            # new leg: integral action restarts
            self.ilos = IlosState(0.0, self.Delta, self.k)
            self._segment = (origin, end)
        e = cross_track_error((state.x_o, state.y_o), origin, end) if origin != end else 0.0
        psi_d, self.ilos = ilos_desired_heading(self.ilos, e, gamma_p, h)
        return pd_rudder(psi_d, state, self.gains)
