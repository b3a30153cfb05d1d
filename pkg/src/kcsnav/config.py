"""Run configuration: YAML schema, strict validation and defaults.

A run config looks like::

    seed: 0
    output_dir: runs/example
    ship: null                 # coefficient file, null = bundled KCS model
    wind_coeffs: null          # wind coefficient table, null = bundled
    controller:
      kind: pd-ilos            # or ddpg
      checkpoint: null         # required for ddpg
      Kp: 2.5
      Kd: 4.0
      Delta: 2.0
      k: 0.05
    training:                  # any DdpgConfig field plus checkpoint_every
      total_steps: 200000
    episode:                   # any EpisodeConfig field
      max_steps: 160
    wind:
      enabled: false
      speed: 0.3               # multiples of the design speed
      direction_deg: 45.0      # direction the wind blows from
    scenarios: [quadrants]

Every section is optional; omitted keys take the defaults below. Unknown
keys anywhere are an error.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from .ddpg import DdpgConfig, config_dict
from .env import EpisodeConfig
from .guidance import PdGains
from .scenarios import NAMED_SCENARIOS
from .wind import WindField


class ConfigError(ValueError):
    """The config file is missing, malformed or fails validation."""


@dataclass(frozen=True)
class ControllerSection:
    kind: str = "pd-ilos"
    checkpoint: str | None = None
    Kp: float = 2.5
    Kd: float = 4.0
    Delta: float = 2.0
    k: float = 0.05

    def __post_init__(self):
        if self.kind not in ("pd-ilos", "ddpg"):
            raise ConfigError(f"controller.kind must be 'pd-ilos' or 'ddpg', got {self.kind!r}")
        if self.Delta <= 0 or self.k < 0:
            raise ConfigError("controller.Delta must be positive and controller.k non-negative")

    @property
    def gains(self) -> PdGains:
        return PdGains(self.Kp, self.Kd)


@dataclass(frozen=True)
class WindSection:
    enabled: bool = False
    speed: float = 0.3
    direction_deg: float = 45.0

    def __post_init__(self):
        if not (self.speed >= 0 and math.isfinite(self.speed)):
            raise ConfigError("wind.speed must be a finite non-negative number")

    def wind_field(self) -> WindField | None:
        if not self.enabled:
            return None
        return WindField(self.speed, math.radians(self.direction_deg))


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    output_dir: str = "runs/default"
    ship: str | None = None
    wind_coeffs: str | None = None
    controller: ControllerSection = field(default_factory=ControllerSection)
    training: DdpgConfig = field(default_factory=DdpgConfig)
    checkpoint_every: int = 10_000
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    wind: WindSection = field(default_factory=WindSection)
    scenarios: tuple[str, ...] = ("quadrants",)

    def to_dict(self) -> dict:
        """Fully resolved config as plain data (the hashed form)."""
        ep = asdict(self.episode)
        ep["dest_distance_range"] = list(self.episode.dest_distance_range)
        training = config_dict(self.training)
        training["checkpoint_every"] = self.checkpoint_every
        return {
            "seed": self.seed,
            "output_dir": self.output_dir,
            "ship": self.ship,
            "wind_coeffs": self.wind_coeffs,
            "controller": asdict(self.controller),
            "training": training,
            "episode": ep,
            "wind": asdict(self.wind),
            "scenarios": list(self.scenarios),
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


_NUMBER = (int, float)


def _check_type(where: str, value: Any, expected: Any) -> Any:
    """Light type check mirroring the dataclass annotations."""
    if isinstance(expected, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be true or false")
        return value
    if isinstance(expected, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer")
        return value
    if isinstance(expected, float):
        if isinstance(value, bool) or not isinstance(value, _NUMBER) or not math.isfinite(value):
            raise ConfigError(f"{where} must be a finite number")
        return float(value)
    if isinstance(expected, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where} must be a list")
        return tuple(_check_type(f"{where}[{i}]", v, expected[0] if expected else v)
                     for i, v in enumerate(value))
    if isinstance(expected, str) or expected is None:
        if value is not None and not isinstance(value, str):
            raise ConfigError(f"{where} must be a string")
        return value
    return value


def _build(cls, raw: Any, where: str):
    """Instantiate ``cls`` from a mapping, rejecting unknown keys."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"section '{where}' must be a mapping")
    defaults = cls()
    names = {f.name for f in fields(cls)}
    unknown = set(raw) - names
    if unknown:
        raise ConfigError(f"unknown keys in '{where}': {sorted(unknown)}")
    kwargs = {}
    for key, value in raw.items():
        kwargs[key] = _check_type(f"{where}.{key}", value, getattr(defaults, key))
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{where}' section: {exc}") from None


_TOP = {"seed", "output_dir", "ship", "wind_coeffs", "controller", "training",
        "episode", "wind", "scenarios"}


def config_from_dict(doc: Any) -> RunConfig:
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a mapping")
    unknown = set(doc) - _TOP
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    for key in ("output_dir", "ship", "wind_coeffs"):
        if doc.get(key) is not None and not isinstance(doc[key], str):
            raise ConfigError(f"{key} must be a string")
    training_raw = doc.get("training") or {}
    if not isinstance(training_raw, dict):
        raise ConfigError("section 'training' must be a mapping")
    training_raw = dict(training_raw)
    checkpoint_every = training_raw.pop("checkpoint_every", 10_000)
    if isinstance(checkpoint_every, bool) or not isinstance(checkpoint_every, int) or checkpoint_every < 0:
        raise ConfigError("training.checkpoint_every must be a non-negative integer")
    scenarios = doc.get("scenarios", ["quadrants"])
    if not isinstance(scenarios, list) or not all(isinstance(s, str) for s in scenarios):
        raise ConfigError("scenarios must be a list of names")
    for name in scenarios:
        if name not in NAMED_SCENARIOS:
            raise ConfigError(f"unknown scenario {name!r}; known: {sorted(NAMED_SCENARIOS)}")
    return RunConfig(
        seed=seed,
        output_dir=doc.get("output_dir") or "runs/default",
        ship=doc.get("ship"),
        wind_coeffs=doc.get("wind_coeffs"),
        controller=_build(ControllerSection, doc.get("controller"), "controller"),
        training=_build(DdpgConfig, training_raw, "training"),
        checkpoint_every=checkpoint_every,
        episode=_build(EpisodeConfig, doc.get("episode"), "episode"),
        wind=_build(WindSection, doc.get("wind"), "wind"),
        scenarios=tuple(scenarios),
    )


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a YAML run config.

    Relative ``ship``/``wind_coeffs`` paths resolve against the config file's
    directory.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    cfg = config_from_dict(doc)
    resolved = {}
    for key in ("ship", "wind_coeffs"):
        value = getattr(cfg, key)
        if value is not None and not Path(value).is_absolute():
            resolved[key] = str(path.parent / value)
    if resolved:
        cfg = RunConfig(**{**{f.name: getattr(cfg, f.name) for f in fields(cfg)}, **resolved})
    return cfg
