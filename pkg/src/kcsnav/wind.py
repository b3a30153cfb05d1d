"""Constant, uniform wind and the quasi-steady loads it puts on the hull."""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .dynamics import ZERO_LOADS, BodyLoads, VesselState


@dataclass(frozen=True)
class WindField:
    """Wind blowing FROM ``direction`` (global frame, rad) at ``speed`` (in U)."""

    speed: float = 0.0
    direction: float = 0.0

    def __post_init__(self):
        if not self.speed >= 0.0:
            raise ValueError("wind speed must be non-negative")


@dataclass(frozen=True)
class WindCoeffs:
    A_T: float
    A_L: float
    rho_ratio: float
    angles: np.ndarray  # rad, ascending on [0, pi]
    CX: np.ndarray
    CY: np.ndarray
    CN: np.ndarray

    def __post_init__(self):
        if not (self.A_T > 0 and self.A_L > 0 and self.rho_ratio > 0):
            raise ValueError("wind areas and density ratio must be positive")
        a = self.angles
        if a[0] != 0.0 or not math.isclose(a[-1], math.pi) or np.any(np.diff(a) <= 0):
            raise ValueError("wind coefficient angles must rise from 0 to 180 deg")
        for name in ("CX", "CY", "CN"):
            if len(getattr(self, name)) != len(a):
                raise ValueError(f"{name} length does not match angles")
        # odd curves must vanish at head and stern wind to mirror continuously
        for name in ("CY", "CN"):
            c = getattr(self, name)
            if c[0] != 0.0 or c[-1] != 0.0:
                raise ValueError(f"{name} must be zero at 0 and 180 deg")


def load_wind_coeffs(path: str | Path | None = None) -> WindCoeffs:
    if path is None:
        text = resources.files("kcsnav.data").joinpath("wind_container.yaml").read_text()
    else:
        text = Path(path).read_text()
    doc = yaml.safe_load(text)
    expected = {"schema_version", "name", "A_T", "A_L", "rho_ratio", "angles_deg", "CX", "CY", "CN"}
    if set(doc) != expected:
        raise ValueError(f"wind coefficient keys must be exactly {sorted(expected)}")
    if doc["schema_version"] != 1:
        raise ValueError("unsupported wind coefficient schema_version")
    angles = np.radians(np.asarray(doc["angles_deg"], dtype=float))
    angles[-1] = math.pi
    return WindCoeffs(
        A_T=float(doc["A_T"]),
        A_L=float(doc["A_L"]),
        rho_ratio=float(doc["rho_ratio"]),
        angles=angles,
        CX=np.asarray(doc["CX"], dtype=float),
        CY=np.asarray(doc["CY"], dtype=float),
        CN=np.asarray(doc["CN"], dtype=float),
    )


def relative_wind(state: VesselState, wind: WindField) -> tuple[float, float]:
    """Apparent wind speed and the angle it comes from, relative to the bow.

    gamma_rw is zero for head wind and positive for wind from starboard.
    """
    c, s = math.cos(state.psi), math.sin(state.psi)
    # wind velocity (towards) minus ship velocity, global frame
    wx = -wind.speed * math.cos(wind.direction)
    wy = -wind.speed * math.sin(wind.direction)
    rx = wx - (c * state.u - s * state.v)
    ry = wy - (s * state.u + c * state.v)
    ub = c * rx + s * ry
    vb = -s * rx + c * ry
    V = math.hypot(ub, vb)
    if V == 0.0:
        return 0.0, 0.0
    return V, math.atan2(-vb, -ub)


def wind_loads(V_rw: float, gamma_rw: float, coeffs: WindCoeffs) -> BodyLoads:
    """Body loads from apparent wind, in the same units as the hull loads."""
    if V_rw == 0.0:
        return ZERO_LOADS
    g = math.atan2(math.sin(gamma_rw), math.cos(gamma_rw))
    a = abs(g)
    sign = -1.0 if g < 0.0 else 1.0
    cx = float(np.interp(a, coeffs.angles, coeffs.CX))
    cy = sign * float(np.interp(a, coeffs.angles, coeffs.CY))
    cn = sign * float(np.interp(a, coeffs.angles, coeffs.CN))
    q = coeffs.rho_ratio * V_rw * V_rw
    return BodyLoads(q * coeffs.A_T * cx, q * coeffs.A_L * cy, q * coeffs.A_L * cn)


class WindDisturbance:
    """Callable giving wind loads for a vessel state.

    Loads are taken relative to still air: the calm-water resistance already
    contains the ship's own air drag, so a zero-speed field adds nothing.
    """

    def __init__(self, wind: WindField, coeffs: WindCoeffs | None = None):
        self.wind = wind
        self.coeffs = coeffs if coeffs is not None else load_wind_coeffs()
        self._calm = WindField(0.0, 0.0)

    def __call__(self, state: VesselState) -> BodyLoads:
        if self.wind.speed == 0.0:
            return ZERO_LOADS
        total = wind_loads(*relative_wind(state, self.wind), self.coeffs)
        own = wind_loads(*relative_wind(state, self._calm), self.coeffs)
        return BodyLoads(total.X - own.X, total.Y - own.Y, total.N - own.N)
