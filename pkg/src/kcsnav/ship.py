"""Ship particulars, MMG coefficient tables and prime-II scaling.

Coefficient files are YAML documents with a mandatory ``schema_version``.
Every section maps one-to-one onto a dataclass below; missing or unknown
keys are rejected so that typos in a coefficient table fail loudly instead
of silently falling back to defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

SCHEMA_VERSION = 1


class CoefficientFileError(ValueError):
    """Raised when a coefficient file does not match the schema."""


@dataclass(frozen=True)
class Geometry:
    Lpp: float
    B: float
    T: float
    D_prop: float
    U_design: float
    rho: float
    scale: float


@dataclass(frozen=True)
class Masses:
    """Nondimensional masses (divided by 0.5 rho L^2 T, inertia by 0.5 rho L^4 T)."""

    m: float
    m_x: float
    m_y: float
    I_zz: float
    J_zz: float
    x_G: float


@dataclass(frozen=True)
class HullCoeffs:
    R0: float
    X_vv: float
    X_vr: float
    X_rr: float
    X_vvvv: float
    Y_v: float
    Y_r: float
    Y_vvv: float
    Y_vvr: float
    Y_vrr: float
    Y_rrr: float
    N_v: float
    N_r: float
    N_vvv: float
    N_vvr: float
    N_vrr: float
    N_rrr: float


@dataclass(frozen=True)
class PropellerCoeffs:
    t_P: float
    w_P0: float
    C_wake: float
    x_P: float
    k0: float
    k1: float
    k2: float


@dataclass(frozen=True)
class RudderCoeffs:
    A_R: float
    f_alpha: float
    t_R: float
    a_H: float
    x_H: float
    x_R: float
    l_R: float
    gamma_R: float
    epsilon: float
    kappa: float
    eta: float
    T_E: float
    rate_max_deg_s: float
    delta_max_deg: float


@dataclass(frozen=True)
class ShipModel:
    """Everything the maneuvering model needs to know about one hull."""

    name: str
    geometry: Geometry
    masses: Masses
    hull: HullCoeffs
    propeller: PropellerCoeffs
    rudder: RudderCoeffs

    def __post_init__(self):
        ms = self.masses
        for key in ("m", "m_x", "m_y", "I_zz", "J_zz"):
            if not getattr(ms, key) > 0.0:
                raise CoefficientFileError(f"masses.{key} must be positive")
        g = self.geometry
        for key in ("Lpp", "T", "D_prop", "U_design", "rho"):
            if not getattr(g, key) > 0.0:
                raise CoefficientFileError(f"geometry.{key} must be positive")
        if not g.scale >= 1.0:
            raise CoefficientFileError("geometry.scale must be >= 1")
        if not 0.0 < self.rudder.delta_max_deg <= 90.0:
            raise CoefficientFileError("rudder.delta_max_deg out of range")

    # Convenience accessors used on the hot path.
    @property
    def Lpp(self) -> float:
        return self.geometry.Lpp

    @property
    def U_design(self) -> float:
        return self.geometry.U_design

    @property
    def time_scale(self) -> float:
        """Seconds per unit of nondimensional time (L/U)."""
        return self.geometry.Lpp / self.geometry.U_design

    @property
    def full_scale_time_scale(self) -> float:
        """Seconds per unit nondimensional time at full scale (Froude scaling)."""
        return self.time_scale * math.sqrt(self.geometry.scale)

    @property
    def delta_max(self) -> float:
        return math.radians(self.rudder.delta_max_deg)

    @property
    def rudder_rate_max(self) -> float:
        """Rudder rate limit in rad per unit nondimensional time.

        The limit is a full-scale steering-gear rating, so it is converted
        with the full-scale time base; the nondimensional dynamics are the
        same at every Froude-similar scale.
        """
        return math.radians(self.rudder.rate_max_deg_s) * self.full_scale_time_scale

    @property
    def D(self) -> float:
        """Propeller diameter in ship lengths."""
        return self.geometry.D_prop / self.geometry.Lpp

    @property
    def L_over_T(self) -> float:
        return self.geometry.Lpp / self.geometry.T

    @cached_property
    def n_self_propulsion(self) -> float:
        """Propeller rate (per nondim time) giving zero surge force at u=1."""
        from .dynamics import self_propulsion_rate

        return self_propulsion_rate(self)


_SECTIONS = {
    "geometry": Geometry,
    "masses": Masses,
    "hull": HullCoeffs,
    "propeller": PropellerCoeffs,
    "rudder": RudderCoeffs,
}


def _section(cls, raw: Any, where: str):
    if not isinstance(raw, dict):
        raise CoefficientFileError(f"section '{where}' must be a mapping")
    names = {f.name for f in fields(cls)}
    unknown = set(raw) - names
    if unknown:
        raise CoefficientFileError(f"unknown keys in '{where}': {sorted(unknown)}")
    missing = names - set(raw)
    if missing:
        raise CoefficientFileError(f"missing keys in '{where}': {sorted(missing)}")
    values = {}
    for key in names:
        val = raw[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise CoefficientFileError(f"{where}.{key} must be a number")
        if not math.isfinite(val):
            raise CoefficientFileError(f"{where}.{key} must be finite")
        values[key] = float(val)
    return cls(**values)


def ship_from_dict(doc: dict) -> ShipModel:
    if not isinstance(doc, dict):
        raise CoefficientFileError("coefficient file must hold a mapping")
    if "schema_version" not in doc:
        raise CoefficientFileError("schema_version is mandatory")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise CoefficientFileError(
            f"unsupported schema_version {doc['schema_version']!r} (expected {SCHEMA_VERSION})"
        )
    allowed = {"schema_version", "name", *_SECTIONS}
    unknown = set(doc) - allowed
    if unknown:
        raise CoefficientFileError(f"unknown top-level keys: {sorted(unknown)}")
    parts = {}
    for key, cls in _SECTIONS.items():
        if key not in doc:
            raise CoefficientFileError(f"missing section '{key}'")
        parts[key] = _section(cls, doc[key], key)
    return ShipModel(name=str(doc.get("name", "unnamed")), **parts)


def load_ship_model(path: str | Path | None = None) -> ShipModel:
    """Load a coefficient file; ``None`` gives the bundled KCS defaults."""
    if path is None:
        text = resources.files("kcsnav.data").joinpath("kcs.yaml").read_text()
    else:
        text = Path(path).read_text()
    return ship_from_dict(yaml.safe_load(text))


_default_ship: ShipModel | None = None


def default_ship() -> ShipModel:
    """Shared read-only KCS model (self-propulsion point solved once)."""
    global _default_ship
    if _default_ship is None:
        _default_ship = load_ship_model()
    return _default_ship


# -- prime-II normalisation -------------------------------------------------

_KINDS = ("force", "moment", "length", "velocity", "time", "yaw_rate")


def _divisor(model: ShipModel, kind: str) -> float:
    g = model.geometry
    L, U, T, rho = g.Lpp, g.U_design, g.T, g.rho
    if kind == "force":
        return 0.5 * rho * U**2 * L * T
    if kind == "moment":
        return 0.5 * rho * U**2 * L**2 * T
    if kind == "length":
        return L
    if kind == "velocity":
        return U
    if kind == "time":
        return L / U
    if kind == "yaw_rate":
        return U / L
    raise ValueError(f"unknown quantity kind {kind!r}; expected one of {_KINDS}")


def prime_scale(value: float, kind: str, model: ShipModel) -> float:
    """Dimensional SI value -> prime-II nondimensional value."""
    return value / _divisor(model, kind)


def prime_unscale(value: float, kind: str, model: ShipModel) -> float:
    """Prime-II nondimensional value -> dimensional SI value."""
    return value * _divisor(model, kind)
