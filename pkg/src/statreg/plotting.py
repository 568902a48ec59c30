"""Figures rendered next to the CSV/JSON outputs.

Uses the object API with the Agg canvas only, so nothing here touches
pyplot's global state, and strips the PNG software tag so identical data
gives identical bytes.
"""

from __future__ import annotations

import io

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from statreg.io import atomic_write

RC = {
    "figsize": (7.0, 4.0),
    "dpi": 100,
}


def _new_axes(title: str):
    fig = Figure(figsize=RC["figsize"], dpi=RC["dpi"])
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(1, 1, 1)
    ax.set_title(title, fontsize=11)
    ax.grid(True, alpha=0.3, linewidth=0.5)
    return fig, ax


def _save(fig: Figure, path) -> None:
    buf = io.BytesIO()
    fig.tight_layout()
    fig.savefig(buf, format="png", metadata={"Software": None})
    atomic_write(path, buf.getvalue())


def plot_trajectory(traj, path, estimate=None, labels=None) -> None:
    """Each coordinate of a trajectory against its index, with the
    retained limit-set centers as dashed levels over the tail."""
    fig, ax = _new_axes("trajectory" if estimate is None else f"trajectory, {len(estimate)} limit point(s)")
    dims = traj.points.shape[1]
    labels = labels or [f"dim{i}" for i in range(dims)]
    colors = [f"C{i % 10}" for i in range(dims)]
    for i in range(dims):
        ax.plot(traj.indices, traj.points[:, i], lw=0.8, color=colors[i], label=labels[i])
    if estimate is not None:
        x0 = traj.indices[estimate.tail_start]
        ax.axvspan(x0, traj.indices[-1], color="0.9", zorder=0)
        for center in estimate.centers:
            for i in range(dims):
                ax.hlines(center[i], x0, traj.indices[-1], colors=colors[i], linestyles="--", lw=1.0)
    ax.set_xlabel("index")
    ax.set_ylabel("value")
    ax.legend(loc="best", fontsize=8, frameon=False)
    _save(fig, path)


def plot_running_average(report, path, criterion_value: float | None = None) -> None:
    """Average loss along the net with the two thresholds."""
    traj = report.trajectory
    fig, ax = _new_axes(f"average loss of decision {report.decision}")
    ax.plot(traj.indices, traj.points[:, 0], ".", ms=2, color="C0")
    ax.axvspan(traj.indices[report.tail_start], traj.indices[-1], color="0.9", zorder=0)
    ax.axhline(report.r1, color="C2", lw=1, label=f"r1 = {report.r1:g}")
    ax.axhline(report.r2, color="C3", lw=1, label=f"r2 = {report.r2:g}")
    ax.axhline(report.empirical_limsup, color="k", ls=":", lw=1,
               label=f"empirical limsup = {report.empirical_limsup:.4f}")
    if criterion_value is not None:
        ax.axhline(criterion_value, color="C1", ls="--", lw=1, label=f"criterion = {criterion_value:.4f}")
    ax.set_xlabel("index")
    ax.set_ylabel("average loss")
    ax.legend(loc="best", fontsize=8, frameon=False)
    _save(fig, path)


def plot_criterion(report, path) -> None:
    """Criterion value per decision; minimizers highlighted."""
    fig, ax = _new_axes(f"{report.kind} criterion")
    x = np.arange(len(report.decision_labels))
    colors = ["C3" if u in report.argmin else "C0" for u in report.decision_labels]
    ax.bar(x, report.values, color=colors)
    ax.set_xticks(x)
    ax.set_xticklabels(report.decision_labels)
    ax.set_ylabel("loss")
    _save(fig, path)


def plot_estimates(estimates, path, labels) -> None:
    """Two estimated regularities, coordinate by coordinate."""
    fig, ax = _new_axes("estimated regularities")
    for k, est in enumerate(estimates):
        for center in np.atleast_2d(est):
            ax.plot(np.arange(len(center)), center, "o-" if k == 0 else "s--",
                    color=f"C{k}", ms=4, lw=0.8)
        ax.plot([], [], "o-" if k == 0 else "s--", color=f"C{k}", label=f"stream {k + 1}")
    ax.set_xticks(np.arange(len(labels)))
    ax.set_xticklabels(labels)
    ax.set_ylabel("probability")
    ax.legend(loc="best", fontsize=8, frameon=False)
    _save(fig, path)
