"""Figure rendering for the report paths.

Figures are written to files only (Agg backend) and carry no timestamps, so
repeated runs produce identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .model import Trajectory


def save_trajectory_plot(traj: Trajectory, path) -> None:
    """Queue lengths over time, one line per queue."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for i in range(traj.params.n):
        ax.plot(traj.times, traj.states[:, i], lw=1.0, label=f"queue {i + 1}")
    ax.axhline(traj.params.equilibrium, color="0.6", lw=0.8, ls=":")
    ax.set_xlabel("time")
    ax.set_ylabel("queue length")
    ax.set_title(f"n={traj.params.n}, delta={traj.params.delta:g}")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def save_compare_plot(traj: Trajectory, rows, path) -> None:
    """Trajectories plus the analytic oscillation bands.

    rows are the compare report rows; each contributes dashed levels at
    equilibrium +/- its analytic amplitude for the matching queue.
    """
    fig, ax = plt.subplots(figsize=(8, 4.5))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for i in range(traj.params.n):
        ax.plot(traj.times, traj.states[:, i], lw=1.0,
                color=colors[i % len(colors)], label=f"queue {i + 1}")
    eq = traj.params.equilibrium
    ax.axhline(eq, color="0.4", lw=0.8, ls=":")
    for row in rows:
        i = row["queue"] - 1
        col = colors[i % len(colors)]
        ax.axhline(row["bar_high"], color=col, lw=0.8, ls="--", alpha=0.7)
        ax.axhline(row["bar_low"], color=col, lw=0.8, ls="--", alpha=0.7)
    ax.set_xlabel("time")
    ax.set_ylabel("queue length")
    ax.set_title(f"simulated vs analytic, n={traj.params.n}, "
                 f"delta={traj.params.delta:g}")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
