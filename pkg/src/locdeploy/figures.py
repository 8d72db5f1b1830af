"""Render run outputs as figures next to the delimited data files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .planner import TrajectoryRecord

# Keep PNG output byte-stable across environments.
_SAVE_KWARGS = {"dpi": 150, "metadata": {"Software": None}}


def save_trajectory_figure(record: TrajectoryRecord, num_mobile: int, path) -> Path:
    """Plot anchor positions and the path of every mobile robot."""
    positions = record.positions_array()  # (steps, nodes, 2)
    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    anchors = positions[0, num_mobile:]
    if anchors.size:
        ax.plot(anchors[:, 0], anchors[:, 1], "^", color="black", markersize=9,
                label="anchors", zorder=3)
    cmap = plt.get_cmap("tab10")
    for i in range(num_mobile):
        color = cmap(i % 10)
        ax.plot(positions[:, i, 0], positions[:, i, 1], "-", color=color, linewidth=1.2)
        ax.plot(positions[0, i, 0], positions[0, i, 1], "o", color=color, markersize=5)
        ax.plot(positions[-1, i, 0], positions[-1, i, 1], "*", color=color, markersize=10)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title("Robot trajectories (o start, * end)")
    ax.set_aspect("equal", adjustable="datalim")
    ax.grid(True, alpha=0.3)
    if anchors.size:
        ax.legend(loc="best")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
    return path


def save_cost_figure(record: TrajectoryRecord, path) -> Path:
    """Plot the total potential and its components against the step index."""
    steps = np.array([rec.step for rec in record.steps])
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    series = [
        ("f_total", [rec.f_total for rec in record.steps]),
        ("f_loc", [np.nan if rec.f_loc is None else rec.f_loc for rec in record.steps]),
        ("f_conn", [np.nan if rec.f_conn is None else rec.f_conn for rec in record.steps]),
        ("f_task", [np.nan if rec.f_task is None else rec.f_task for rec in record.steps]),
    ]
    for label, values in series:
        values = np.asarray(values, dtype=float)
        if np.all(np.isnan(values)):
            continue
        ax.plot(steps, values, label=label, linewidth=1.4)
    ax.set_xlabel("step")
    ax.set_ylabel("potential")
    ax.set_title("Cost trace")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
    return path
