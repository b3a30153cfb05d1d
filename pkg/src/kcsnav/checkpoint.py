"""Self-describing, checksummed JSON checkpoints for DDPG agents.

Layout::

    {"format": "kcsnav-ddpg-checkpoint", "version": 1,
     "sha256": <hex digest of the canonical payload>,
     "payload": {config, step_count, delta_max, normalizer,
                 networks{actor, critic, actor_target, critic_target},
                 optimizers{actor, critic}, rng_state}}

Floats are written with ``repr`` precision, so a load/save round trip is
bit-exact and re-saving produces identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .ddpg import DdpgAgent, DdpgConfig, ObsNormalizer, config_dict
from .nn import Adam, Mlp

FORMAT = "kcsnav-ddpg-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    """Corrupt, truncated or incompatible checkpoint."""


def _array(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": a.ravel().tolist()}


def _from_array(d: dict) -> np.ndarray:
    return np.array(d["data"], dtype=float).reshape(d["shape"])


def _net(net: Mlp) -> dict:
    return {
        "layer_sizes": net.layer_sizes,
        "output_activation": net.output_activation,
        "output_scale": net.output_scale,
        "params": [_array(p) for p in net.params],
    }


def _from_net(d: dict) -> Mlp:
    return Mlp(d["layer_sizes"], d["output_activation"], d["output_scale"],
               [_from_array(p) for p in d["params"]])


def _opt(opt: Adam) -> dict:
    return {
        "lr": opt.lr, "beta1": opt.beta1, "beta2": opt.beta2, "eps": opt.eps, "t": opt.t,
        "m": [_array(x) for x in opt.m], "v": [_array(x) for x in opt.v],
    }


def _from_opt(d: dict) -> Adam:
    return Adam(d["lr"], d["beta1"], d["beta2"], d["eps"], d["t"],
                [_from_array(x) for x in d["m"]], [_from_array(x) for x in d["v"]])


def _canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def agent_payload(agent: DdpgAgent, rng_state: dict | None = None) -> dict:
    return {
        "config": config_dict(agent.config),
        "step_count": agent.step_count,
        "delta_max": agent.delta_max,
        "normalizer": {"scale": list(agent.normalizer.scale), "clip": list(agent.normalizer.clip)},
        "networks": {name: _net(getattr(agent, name))
                     for name in ("actor", "critic", "actor_target", "critic_target")},
        "optimizers": {"actor": _opt(agent.actor_opt), "critic": _opt(agent.critic_opt)},
        "rng_state": rng_state,
    }


def save_checkpoint(agent: DdpgAgent, path: str | Path, rng_state: dict | None = None) -> None:
    payload = agent_payload(agent, rng_state)
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "sha256": hashlib.sha256(_canonical(payload)).hexdigest(),
        "payload": payload,
    }
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(_canonical(doc))
    os.replace(tmp, path)


def load_checkpoint(path: str | Path) -> tuple[DdpgAgent, dict | None]:
    """Returns the agent and the stored RNG state (if any)."""
    raw = Path(path).read_bytes()
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"checkpoint {path} is corrupt or truncated: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise CheckpointError(f"{path} is not a {FORMAT} file")
    if doc.get("version") != VERSION:
        raise CheckpointError(f"checkpoint version {doc.get('version')!r} unsupported (expected {VERSION})")
    payload = doc.get("payload")
    if hashlib.sha256(_canonical(payload)).hexdigest() != doc.get("sha256"):
        raise CheckpointError(f"checksum mismatch in {path}")
    try:
        cfg = dict(payload["config"])
        cfg["hidden"] = tuple(cfg["hidden"])
        nets = {k: _from_net(v) for k, v in payload["networks"].items()}
        agent = DdpgAgent(
            config=DdpgConfig(**cfg),
            actor=nets["actor"],
            critic=nets["critic"],
            actor_target=nets["actor_target"],
            critic_target=nets["critic_target"],
            actor_opt=_from_opt(payload["optimizers"]["actor"]),
            critic_opt=_from_opt(payload["optimizers"]["critic"]),
            normalizer=ObsNormalizer(tuple(payload["normalizer"]["scale"]),
                                     tuple(payload["normalizer"]["clip"])),
            delta_max=payload["delta_max"],
            step_count=payload["step_count"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint payload: {exc}") from None
    return agent, payload.get("rng_state")
