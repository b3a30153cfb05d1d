"""Static PNG figures built from trajectory CSVs and training logs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .ddpg import TrainingLog  # noqa: E402
from .scenarios import TRACE_COLUMNS  # noqa: E402

_X = TRACE_COLUMNS.index("x")
_Y = TRACE_COLUMNS.index("y")


def plot_trajectories(traces: dict[str, np.ndarray], path: str | Path,
                      waypoints=None, title: str = "") -> Path:
    """North-up track plot: x (north) on the vertical axis, y (east) horizontal."""
    fig, ax = plt.subplots(figsize=(6, 6))
    for label, rows in traces.items():
        ax.plot(rows[:, _Y], rows[:, _X], label=label, lw=1.2)
    if waypoints:
        wp = np.asarray(waypoints, dtype=float)
        ax.plot(wp[:, 1], wp[:, 0], "k--", lw=0.6, alpha=0.5)
        ax.scatter(wp[:, 1], wp[:, 0], c="k", s=12, zorder=3, label="waypoints")
    ax.set_xlabel("y (east) [L]")
    ax.set_ylabel("x (north) [L]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.grid(alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_time_series(traces: dict[str, np.ndarray], path: str | Path,
                     columns=("d_c", "delta")) -> Path:
    fig, axes = plt.subplots(len(columns), 1, figsize=(7, 2.4 * len(columns)), sharex=True)
    axes = np.atleast_1d(axes)
    t = TRACE_COLUMNS.index("t")
    for ax, col in zip(axes, columns):
        k = TRACE_COLUMNS.index(col)
        scale = np.degrees(1.0) if col in ("delta", "delta_c", "psi", "chi_e") else 1.0
        for label, rows in traces.items():
            ax.plot(rows[:, t], rows[:, k] * scale, label=label, lw=1.0)
        ax.set_ylabel(col + (" [deg]" if scale != 1.0 else ""))
        ax.grid(alpha=0.3)
    axes[0].legend(fontsize=8)
    axes[-1].set_xlabel("t [L/U]")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def moving_average(x, window: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size == 0 or window <= 1:
        return x
    window = min(window, x.size)
    c = np.cumsum(np.insert(x, 0, 0.0))
    head = c[1:window] / np.arange(1, window)
    return np.concatenate([head, (c[window:] - c[:-window]) / window])


def plot_learning_curves(log: TrainingLog, path: str | Path, window: int = 100) -> Path:
    """Episode returns and per-update losses."""
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(7, 6))
    R = log.returns()
    if R.size:
        a1.plot(R, lw=0.4, alpha=0.4, label="return")
        a1.plot(moving_average(R, window), lw=1.4, label=f"mean of {window}")
        a1.legend(fontsize=8)
    a1.set_xlabel("episode")
    a1.set_ylabel("return")
    a1.grid(alpha=0.3)
    if log.updates:
        steps = np.array([u["step"] for u in log.updates])
        cl = np.array([u["critic_loss"] for u in log.updates])
        al = np.array([u["actor_objective"] for u in log.updates])
        a2.plot(steps, moving_average(cl, window), label="critic loss")
        a2.plot(steps, moving_average(al, window), label="actor objective")
        a2.set_yscale("symlog")
        a2.legend(fontsize=8)
    a2.set_xlabel("environment step")
    a2.grid(alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
