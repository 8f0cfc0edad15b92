"""Time-averaged regret figures from the ``curve.csv`` files of a run."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def read_curve(path) -> np.ndarray:
    """Rows of ``(t, time_avg_pseudo, time_avg_realized)``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["t", "time_avg_pseudo"]:
        raise ValueError(f"{path}: not a regret curve file")
    return np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, 3)


def collect_curves(root) -> dict:
    """``{policy: [curve, ...]}`` for every ``<policy>/seed*/curve.csv`` under ``root``."""
    out = {}
    for path in sorted(Path(root).glob("*/seed*/curve.csv")):
        out.setdefault(path.parent.parent.name, []).append(read_curve(path))
    return out


def mean_curve(curves) -> tuple:
    # replications share checkpoints when they share T; otherwise interpolate on the first grid
    t = curves[0][:, 0]
    ys = [np.interp(t, c[:, 0], c[:, 1]) for c in curves]
    return t, np.mean(ys, axis=0)


def plot_regret(curves: dict, path, title: str = "") -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for policy, cs in sorted(curves.items()):
        t, y = mean_curve(cs)
        ax.plot(t, y, label=f"{policy} ({len(cs)} seeds)")
    ax.set_xscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("time-averaged pseudo-regret")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
