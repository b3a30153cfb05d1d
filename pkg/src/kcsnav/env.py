"""Waypoint-tracking MDP around the MMG model.

Observation ``[d_c, chi_e, d_wp, r]``: cross-track error to the active leg
(L), course error towards the active waypoint (rad), distance to it (L) and
yaw rate (nondim). Action: commanded rudder angle in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .dynamics import ControlInput, VesselState, rk4_step
from .guidance import (
    WaypointPath,
    along_track,
    course_error,
    cross_track_error,
    path_frame,
    skip_waypoint,
    waypoint_advance,
)
from .ship import ShipModel, default_ship
from .wind import WindCoeffs, WindDisturbance, WindField

RUNNING, SUCCESS, TIMEOUT, MISSED = "running", "success", "timeout", "missed"


class Observation(NamedTuple):
    d_c: float
    chi_e: float
    d_wp: float
    r: float

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


@dataclass(frozen=True)
class EpisodeConfig:
    dest_distance_range: tuple[float, float] = (8.0, 28.0)
    max_steps: int = 160
    control_interval: float = 0.3
    substep: float = 0.1
    terminal_bonus: float = 100.0
    acceptance_radius: float = 0.5
    course_mode: str = "course"
    normalize_dwp: bool = False

    def __post_init__(self):
        lo, hi = self.dest_distance_range
        if not 0 < lo < hi:
            raise ValueError("dest_distance_range must satisfy 0 < low < high")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")
        ratio = self.control_interval / self.substep
        if self.substep <= 0 or abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("control_interval must be a positive integer multiple of substep")
        if self.course_mode not in ("course", "heading"):
            raise ValueError("course_mode must be 'course' or 'heading'")

    @property
    def substeps(self) -> int:
        return int(round(self.control_interval / self.substep))


@dataclass
class StepResult:
    observation: Observation
    reward: float
    done: bool
    outcome: str
    reached: bool = False
    missed: bool = False


def reward(obs: Observation) -> float:
    """Shaped per-step reward (terminal bonus excluded)."""
    r1 = 2.0 * math.exp(-obs.d_c**2 / 12.5) - 1.0
    r2 = 1.3 * math.exp(-10.0 * abs(obs.chi_e)) - 0.3
    r3 = -obs.d_wp / 4.0
    return r1 + r2 + r3


def missed_waypoint(state: VesselState, seg_start, dest) -> bool:
    """Past the destination along the leg and moving away from it."""
    if seg_start == dest:
        return False
    pos = (state.x_o, state.y_o)
    beyond = along_track(pos, seg_start, dest) > along_track(dest, seg_start, dest)
    if not beyond:
        return False
    c, s = math.cos(state.psi), math.sin(state.psi)
    vx = c * state.u - s * state.v
    vy = s * state.u + c * state.v
    return vx * (dest[0] - pos[0]) + vy * (dest[1] - pos[1]) < 0.0


@dataclass
class WaypointEnv:
    """Single- or multi-waypoint tracking task.

    ``reset`` with no path samples a random destination (training task);
    passing a path runs a scenario. On multi-waypoint paths a missed
    intermediate waypoint is skipped (and recorded) rather than ending the
    run; the terminal bonus belongs to the final waypoint only.
    """

    config: EpisodeConfig = field(default_factory=EpisodeConfig)
    ship: ShipModel = field(default_factory=default_ship)
    wind: WindField | None = None
    wind_coeffs: WindCoeffs | None = None

    def __post_init__(self):
        self.n_prop = self.ship.n_self_propulsion
        self._wind_loads = (WindDisturbance(self.wind, self.wind_coeffs)
                            if self.wind is not None else None)
        self.state: VesselState | None = None
        self.path: WaypointPath | None = None
        self.steps = 0
        self.leg_steps = 0
        self.done = True
        self.outcome = RUNNING
        self.missed_indices: list[int] = []
        self.spawn_distance = 1.0
        self.last_delta_c = 0.0

    def sample_destination(self, rng: np.random.Generator) -> tuple[float, float]:
        lo, hi = self.config.dest_distance_range
        dist = rng.uniform(lo, hi)
        ang = rng.uniform(0.0, 2.0 * math.pi)
        return dist * math.cos(ang), dist * math.sin(ang)

    def reset(
        self,
        rng: np.random.Generator | None = None,
        path: WaypointPath | None = None,
        initial: VesselState | None = None,
    ) -> Observation:
        self.state = initial if initial is not None else VesselState()
        start = (self.state.x_o, self.state.y_o)
        if path is None:
            if rng is None:
                raise ValueError("reset needs an rng when no path is given")
            path = WaypointPath((self.sample_destination(rng),), start=start,
                                acceptance_radius=self.config.acceptance_radius)
        self.path = path
        self.steps = 0
        self.leg_steps = 0
        self.done = False
        self.outcome = RUNNING
        self.missed_indices = []
        self.last_delta_c = 0.0
        wx, wy = path.active
        self.spawn_distance = max(math.hypot(wx - start[0], wy - start[1]), 1e-9)
        return self.observe()

    def observe(self) -> Observation:
        s, path = self.state, self.path
        origin, end, _ = path_frame(path)
        pos = (s.x_o, s.y_o)
        d_c = cross_track_error(pos, origin, end) if origin != end else 0.0
        wx, wy = path.active
        d_wp = math.hypot(wx - pos[0], wy - pos[1])
        bearing = math.atan2(wy - pos[1], wx - pos[0]) if d_wp > 0 else path_frame(path)[2]
        chi_e = course_error(s, bearing, self.config.course_mode)
        return Observation(d_c, chi_e, d_wp, s.r)

    def reward_of(self, obs: Observation) -> float:
        if self.config.normalize_dwp:
            obs = obs._replace(d_wp=obs.d_wp / self.spawn_distance)
        return reward(obs)

    def step(self, action: float) -> StepResult:
        if self.done:
            raise RuntimeError("step() called on a finished episode; call reset()")
        dmax = self.ship.delta_max
        delta_c = min(max(float(action), -dmax), dmax)
        self.last_delta_c = delta_c
        ctrl = ControlInput(delta_c, self.n_prop)
        h = self.config.substep
        s = self.state
        for _ in range(self.config.substeps):
            s = rk4_step(self.ship, s, ctrl, h, self._wind_loads)
        self.state = s
        self.steps += 1
        self.leg_steps += 1

        pos = (s.x_o, s.y_o)
        origin, end, _ = path_frame(self.path)
        self.path, reached = waypoint_advance(self.path, pos)
        missed = False
        outcome = RUNNING
        if self.path.finished and reached:
            outcome = SUCCESS
        elif self.leg_steps >= self.config.max_steps:
            outcome = TIMEOUT
        elif not reached and missed_waypoint(s, origin, end):
            missed = True
            self.missed_indices.append(self.path.active_index)
            if self.path.is_last:
                outcome = MISSED
            else:
                self.path = skip_waypoint(self.path)
        if reached or missed:
            self.leg_steps = 0
            if not self.path.finished:
                wx, wy = self.path.active
                self.spawn_distance = max(math.hypot(wx - pos[0], wy - pos[1]), 1e-9)

        obs = self.observe()
        r = self.reward_of(obs)
        assert -1.3 - obs.d_wp / 4.0 < r <= 2.0 + 1e-12, r
        if outcome == SUCCESS:
            r += self.config.terminal_bonus
        self.outcome = outcome
        self.done = outcome != RUNNING
        return StepResult(obs, r, self.done, outcome, reached, missed)
