"""Static SVG figures from a recorded trace."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .sim import Trace

__all__ = ["plot_barriers", "plot_trajectories"]


def plot_trajectories(trace: Trace, path: str | Path) -> None:
    """Planar paths with start markers, destinations, and final footprints."""
    fig, ax = plt.subplots(figsize=(6, 6))
    for i in range(trace.position.shape[1]):
        xy = trace.position[:, i]
        (line,) = ax.plot(xy[:, 0], xy[:, 1], label=f"agent {i} ({trace.controllers[i].value})")
        color = line.get_color()
        ax.plot(xy[0, 0], xy[0, 1], marker="o", color=color)
        ax.plot(
            trace.destinations[i, 0], trace.destinations[i, 1],
            marker="x", color=color, markersize=10,
        )
        ax.add_patch(
            plt.Circle(xy[-1], trace.radii[i], fill=False, color=color, linestyle=":")
        )
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)


def plot_barriers(trace: Trace, path: str | Path) -> None:
    """Barrier h and physical-contact h_r0 per pair against time."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for pi, (i, j) in enumerate(trace.pairs):
        (line,) = ax.plot(trace.times, trace.h[:, pi], label=f"h {i}-{j}")
        ax.plot(
            trace.times, trace.h_r0[:, pi],
            linestyle="--", color=line.get_color(), label=f"h_r0 {i}-{j}",
        )
    ax.axhline(0.0, color="k", linewidth=0.8)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("barrier [m$^2$]")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
