"""Evaluation scenarios, closed-loop rollouts and controller comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .ddpg import DdpgAgent
from .dynamics import VesselState
from .env import EpisodeConfig, Observation, WaypointEnv, SUCCESS
from .guidance import PdGains, PdIlosAutopilot, WaypointPath
from .ship import ShipModel, default_ship
from .wind import WindField

TRACE_COLUMNS = ("t", "x", "y", "psi", "u", "v", "r", "delta", "delta_c", "d_c", "chi_e", "reward")

# reference improvements reported for the learned controller (RMS cross-track)
REFERENCE_IMPROVEMENT = {"calm": 8.0, "wind": 7.5}


@dataclass(frozen=True)
class Scenario:
    name: str
    path: WaypointPath
    initial: VesselState = VesselState()
    wind: WindField | None = None
    controller: str | None = None  # "ddpg", "pd-ilos" or None for either

    def with_wind(self, wind: WindField | None) -> "Scenario":
        return Scenario(self.name, self.path, self.initial, wind, self.controller)

    def translated(self, dx: float, dy: float) -> "Scenario":
        s = self.initial._replace(x_o=self.initial.x_o + dx, y_o=self.initial.y_o + dy)
        return Scenario(self.name, self.path.translated(dx, dy), s, self.wind, self.controller)


def build_quadrant_scenarios() -> list[Scenario]:
    """Single destinations at (+-10 L, +-10 L), start at the origin heading north."""
    out = []
    for name, dest in (("quadrant_ne", (10.0, 10.0)), ("quadrant_nw", (-10.0, 10.0)),
                       ("quadrant_se", (10.0, -10.0)), ("quadrant_sw", (-10.0, -10.0))):
        out.append(Scenario(name, WaypointPath((dest,), start=(0.0, 0.0))))
    return out


def ellipse_waypoints(a: float = 14.0, b: float = 10.0, count: int = 15) -> list[tuple[float, float]]:
    """Uniform parameter angles, first point one step after (a, 0), last back at (a, 0)."""
    pts = []
    for k in range(1, count + 1):
        th = 2.0 * math.pi * k / count
        pts.append((a * math.cos(th), b * math.sin(th)))
    pts[-1] = (a, 0.0)
    return pts


def build_ellipse_scenario() -> Scenario:
    path = WaypointPath(tuple(ellipse_waypoints()), start=(14.0, 0.0))
    return Scenario("ellipse", path, VesselState(x_o=14.0, y_o=0.0, psi=math.pi / 2))


def figure8_point(s: float, radius: float = 9.0) -> tuple[float, float]:
    """Point at arc length ``s`` along the figure-8.

    Circles of ``radius`` centred at (0, R) and (0, 3R) touch at (0, 2R).
    From the origin (heading north) the path turns to starboard along the
    first half of the near circle, goes once round the far circle to port,
    then finishes the near circle back to the origin.
    """
    R = radius
    half = math.pi * R
    total = 4.0 * math.pi * R
    s = s % total
    if s <= half:
        phi = s / R
        return R * math.sin(phi), R - R * math.cos(phi)
    if s <= half + 2.0 * math.pi * R:
        phi = (s - half) / R
        return -R * math.sin(phi), 3.0 * R - R * math.cos(phi)
    phi = math.pi + (s - half - 2.0 * math.pi * R) / R
    return R * math.sin(phi), R - R * math.cos(phi)


def figure8_waypoints(radius: float = 9.0, count: int = 23) -> list[tuple[float, float]]:
    total = 4.0 * math.pi * radius
    pts = [figure8_point(total * k / count, radius) for k in range(1, count + 1)]
    pts[-1] = (0.0, 0.0)
    return pts


def build_figure8_scenario() -> Scenario:
    path = WaypointPath(tuple(figure8_waypoints()), start=(0.0, 0.0))
    return Scenario("figure8", path, VesselState(x_o=0.0, y_o=0.0, psi=0.0))


NAMED_SCENARIOS = {
    "quadrants": build_quadrant_scenarios,
    "ellipse": lambda: [build_ellipse_scenario()],
    "figure8": lambda: [build_figure8_scenario()],
}


def scenarios_by_name(names) -> list[Scenario]:
    out = []
    for n in names:
        if n not in NAMED_SCENARIOS:
            raise KeyError(f"unknown scenario {n!r}; known: {sorted(NAMED_SCENARIOS)}")
        out.extend(NAMED_SCENARIOS[n]())
    return out


# -- controllers ----------------------------------------------------------

class Controller(Protocol):
    kind: str

    def reset(self) -> None: ...

    def command(self, env: WaypointEnv, obs: Observation) -> float: ...


class PdIlosController:
    kind = "pd-ilos"

    def __init__(self, gains: PdGains = PdGains(), Delta: float = 2.0, k: float = 0.05):
        self.autopilot = PdIlosAutopilot(gains, Delta, k)

    def reset(self) -> None:
        self.autopilot.reset()

    def command(self, env: WaypointEnv, obs: Observation) -> float:
        return self.autopilot.command(env.state, env.path, env.config.control_interval)


class DdpgController:
    kind = "ddpg"

    def __init__(self, agent: DdpgAgent):
        self.agent = agent

    def reset(self) -> None:
        pass

    def command(self, env: WaypointEnv, obs: Observation) -> float:
        return self.agent.act(obs)


# -- rollouts and metrics -------------------------------------------------

@dataclass
class Metrics:
    rms_cross_track: float
    controller_effort_rms: float
    rudder_travel: float
    success: bool
    steps_used: int
    waypoints_reached: int = 0
    waypoints_total: int = 0


@dataclass
class EpisodeRecord:
    scenario: str
    controller: str
    rows: list[tuple[float, ...]] = field(default_factory=list)
    outcome: str = "running"
    reached: list[int] = field(default_factory=list)
    missed: list[int] = field(default_factory=list)
    waypoints: list[tuple[float, float]] = field(default_factory=list)
    initial_delta: float = 0.0

    def column(self, name: str) -> np.ndarray:
        i = TRACE_COLUMNS.index(name)
        return np.array([row[i] for row in self.rows])


def rms(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(np.mean(x * x))) if x.size else 0.0


def metrics_from_trace(rows, initial_delta: float = 0.0, success: bool = False,
                       waypoints_reached: int = 0, waypoints_total: int = 0) -> Metrics:
    """Metrics over a trace with columns ``TRACE_COLUMNS``.

    Rudder travel is the sum of |delta| increments between control steps;
    within one interval the rudder moves monotonically, so this equals the
    integral of |delta'| over the run.
    """
    rows = np.asarray(rows, dtype=float).reshape(-1, len(TRACE_COLUMNS))
    d_c = rows[:, TRACE_COLUMNS.index("d_c")]
    delta = rows[:, TRACE_COLUMNS.index("delta")]
    travel = float(np.sum(np.abs(np.diff(np.concatenate([[initial_delta], delta]))))) if len(delta) else 0.0
    return Metrics(rms(d_c), rms(delta), travel, bool(success), len(rows),
                   waypoints_reached, waypoints_total)


def run_scenario(
    scenario: Scenario,
    controller: Controller,
    ship: ShipModel | None = None,
    config: EpisodeConfig | None = None,
    seed: int | None = None,
) -> tuple[EpisodeRecord, Metrics]:
    """Deterministic closed-loop rollout of one scenario.

    ``seed`` is accepted for interface symmetry; the rollout draws no random
    numbers (no exploration noise).
    """
    if scenario.controller is not None and scenario.controller != controller.kind:
        raise ValueError(f"scenario {scenario.name!r} expects controller "
                         f"{scenario.controller!r}, got {controller.kind!r}")
    ship = ship or default_ship()
    env = WaypointEnv(config or EpisodeConfig(), ship, scenario.wind)
    controller.reset()
    obs = env.reset(path=scenario.path, initial=scenario.initial)
    rec = EpisodeRecord(scenario.name, controller.kind, waypoints=list(scenario.path.waypoints),
                        initial_delta=scenario.initial.delta)
    dt = env.config.control_interval
    while True:
        idx = env.path.active_index
        delta_c = controller.command(env, obs)
        res = env.step(delta_c)
        obs = res.observation
        s = env.state
        rec.rows.append((env.steps * dt, s.x_o, s.y_o, s.psi, s.u, s.v, s.r, s.delta,
                         env.last_delta_c, obs.d_c, obs.chi_e, res.reward))
        if res.reached:
            rec.reached.append(idx)
        if res.missed:
            rec.missed.append(idx)
        if res.done:
            break
    rec.outcome = res.outcome
    n_wp = len(scenario.path.waypoints)
    success = res.outcome == SUCCESS and len(rec.reached) == n_wp
    return rec, metrics_from_trace(rec.rows, rec.initial_delta, success, len(rec.reached), n_wp)


def percent_improvement(rms_a: float, rms_b: float):
    """(rms_b - rms_a)/rms_b * 100, or ``"n/a"`` for a zero baseline."""
    if rms_b == 0.0:
        return "n/a"
    return (rms_b - rms_a) / rms_b * 100.0


def compare(metrics_a: Metrics, metrics_b: Metrics, scenario: str = "", windy: bool = False,
            label_a: str = "ddpg", label_b: str = "pd-ilos") -> dict:
    """One comparison table row: controller a measured against baseline b."""
    imp = percent_improvement(metrics_a.rms_cross_track, metrics_b.rms_cross_track)
    return {
        "scenario": scenario,
        f"rms_dc_{label_a}": metrics_a.rms_cross_track,
        f"rms_dc_{label_b}": metrics_b.rms_cross_track,
        "improvement_pct": imp,
        "reference_pct": REFERENCE_IMPROVEMENT["wind" if windy else "calm"],
        f"effort_rms_{label_a}": metrics_a.controller_effort_rms,
        f"effort_rms_{label_b}": metrics_b.controller_effort_rms,
        f"travel_{label_a}": metrics_a.rudder_travel,
        f"travel_{label_b}": metrics_b.rudder_travel,
        f"success_{label_a}": metrics_a.success,
        f"success_{label_b}": metrics_b.success,
    }


def format_comparison(rows: list[dict]) -> str:
    """Human-readable table of :func:`compare` rows."""
    lines = []
    for row in rows:
        keys = [k for k in row if k.startswith("rms_dc_")]
        la, lb = (k[len("rms_dc_"):] for k in keys)
        imp = row["improvement_pct"]
        imp_s = imp if isinstance(imp, str) else f"{imp:+.1f}%"
        lines.append(
            f"{row['scenario']:<12} RMS d_c {la}={row['rms_dc_' + la]:.4f} L  "
            f"{lb}={row['rms_dc_' + lb]:.4f} L  improvement {imp_s} "
            f"(reference {row['reference_pct']:.1f}%)  "
            f"effort RMS {la}={math.degrees(row['effort_rms_' + la]):.2f} deg "
            f"{lb}={math.degrees(row['effort_rms_' + lb]):.2f} deg  "
            f"travel {la}={math.degrees(row['travel_' + la]):.0f} deg "
            f"{lb}={math.degrees(row['travel_' + lb]):.0f} deg"
        )
    return "\n".join(lines)
