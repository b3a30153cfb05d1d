"""CSV traces, metrics tables, training logs and run manifests.

Floats are written with ``repr`` so files are locale independent and
re-reading them gives back the exact same numbers.
"""

from __future__ import annotations

import csv
import hashlib
import json
import platform
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .ddpg import TrainingLog
from .scenarios import TRACE_COLUMNS, EpisodeRecord, Metrics

EPISODE_COLUMNS = ("episode", "return", "steps", "outcome")
UPDATE_COLUMNS = ("step", "critic_loss", "actor_objective")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_trace_rows(rows, path: str | Path) -> Path:
    """Write rows laid out as ``TRACE_COLUMNS``; one row per control step."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in rows:
            if len(row) != len(TRACE_COLUMNS):
                raise ValueError(f"trace row has {len(row)} fields, expected {len(TRACE_COLUMNS)}")
            w.writerow([_fmt(float(x)) for x in row])
    return path


def write_trajectory(record: EpisodeRecord, path: str | Path) -> Path:
    return write_trace_rows(record.rows, path)


def read_trajectory(path: str | Path) -> np.ndarray:
    """Rows of a trajectory CSV as an (n, 12) float array; the header is checked."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != TRACE_COLUMNS:
            raise ValueError(f"{path}: unexpected trajectory header {header}")
        rows = [[float(x) for x in line] for line in reader if line]
    return np.array(rows, dtype=float).reshape(-1, len(TRACE_COLUMNS))


def write_waypoints(waypoints, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("index", "x", "y"))
        for i, (x, y) in enumerate(waypoints):
            w.writerow((i, _fmt(float(x)), _fmt(float(y))))
    return path


def read_waypoints(path: str | Path) -> list[tuple[float, float]]:
    with Path(path).open(newline="") as fh:
        return [(float(r["x"]), float(r["y"])) for r in csv.DictReader(fh)]


def metrics_row(scenario: str, controller: str, m: Metrics) -> dict:
    return {"scenario": scenario, "controller": controller, **asdict(m)}


def write_table(rows: list[dict], path: str | Path) -> Path:
    """Generic CSV table; columns follow the first row's key order."""
    path = Path(path)
    cols: list[str] = []
    for row in rows:
        cols.extend(k for k in row if k not in cols)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([_fmt(row.get(c, "")) for c in cols])
    return path


def read_table(path: str | Path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def metrics_summary(rows: list[dict]) -> str:
    lines = [f"{'scenario':<14}{'controller':<10}{'ok':>4}{'wp':>8}{'steps':>7}"
             f"{'RMS d_c [L]':>13}{'RMS delta [deg]':>17}{'travel [deg]':>14}"]
    for r in rows:
        lines.append(
            f"{r['scenario']:<14}{r['controller']:<10}{'yes' if r['success'] else 'no':>4}"
            f"{str(r['waypoints_reached']) + '/' + str(r['waypoints_total']):>8}{r['steps_used']:>7}"
            f"{r['rms_cross_track']:>13.4f}{np.degrees(r['controller_effort_rms']):>17.2f}"
            f"{np.degrees(r['rudder_travel']):>14.1f}"
        )
    return "\n".join(lines)


class TrainingLogWriter:
    """Appends episode and update rows, flushing each so logs survive a crash."""

    def __init__(self, directory: str | Path):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.episodes_path = directory / "episodes.csv"
        self.updates_path = directory / "updates.csv"
        self._ep = self.episodes_path.open("w", newline="")
        self._up = self.updates_path.open("w", newline="")
        self._ep_w = csv.writer(self._ep, lineterminator="\n")
        self._up_w = csv.writer(self._up, lineterminator="\n")
        self._ep_w.writerow(EPISODE_COLUMNS)
        self._up_w.writerow(UPDATE_COLUMNS)
        self._ep.flush()
        self._up.flush()

    def episode(self, rec: dict) -> None:
        self._ep_w.writerow([_fmt(rec[c]) for c in EPISODE_COLUMNS])
        self._ep.flush()

    def update(self, rec: dict) -> None:
        self._up_w.writerow([_fmt(rec[c]) for c in UPDATE_COLUMNS])
        self._up.flush()

    def close(self) -> None:
        self._ep.close()
        self._up.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_training_log(directory: str | Path) -> TrainingLog:
    """Parse episodes.csv/updates.csv; a torn final line is ignored."""
    directory = Path(directory)
    log = TrainingLog()
    with (directory / "episodes.csv").open(newline="") as fh:
        for row in csv.DictReader(fh):
            try:
                log.episodes.append({"episode": int(row["episode"]), "return": float(row["return"]),
                                     "steps": int(row["steps"]), "outcome": row["outcome"]})
            except (TypeError, ValueError):
                break
    up = directory / "updates.csv"
    if up.exists():
        with up.open(newline="") as fh:
            for row in csv.DictReader(fh):
                try:
                    log.updates.append({"step": int(row["step"]),
                                        "critic_loss": float(row["critic_loss"]),
                                        "actor_objective": float(row["actor_objective"])})
                except (TypeError, ValueError):
                    break
    return log


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(directory: str | Path, command: str, config: dict, config_hash: str,
                   seed: int, outputs: list[str] | None = None, extra: dict | None = None) -> Path:
    """manifest.json for one CLI run.

    Contains nothing time- or host-specific beyond the Python version, so
    repeated runs with the same inputs write the same manifest.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    doc = {
        "command": command,
        "package": "kcsnav",
        "version": __version__,
        "python": platform.python_version(),
        "seed": seed,
        "config_sha256": config_hash,
        "config": config,
        "outputs": sorted(outputs or []),
    }
    if extra:
        doc.update(extra)
    path = directory / "manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
