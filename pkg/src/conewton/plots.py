"""Report figures rendered next to the delimited outputs."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STATUS_MARKERS = {
    "Solved": "o",
    "StronglyStationary": "s",
    "MaxIterations": "x",
    "LinesearchStalled": "^",
    "ProgressStalled": "v",
}


def circular_residual_figure(rows, path) -> None:
    """Final residual per seed, one panel column per cone angle."""
    labels = []
    for row in rows:
        if row["omega"] not in labels:
            labels.append(row["omega"])
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    for k, label in enumerate(labels):
        for row in rows:
            if row["omega"] != label:
                continue
            marker = _STATUS_MARKERS.get(row["status"], "d")
            val = max(float(row["residual"]), 1e-300)
            ax.semilogy([k + 0.04 * (int(row["seed"]) % 10)], [val],
                        marker=marker, color="black", linestyle="none",
                        markersize=4, markerfacecolor="none")
    ax.set_xticks(range(len(labels)), labels)
    ax.set_xlabel("cone half-aperture")
    ax.set_ylabel("final residual norm")
    ax.axhline(1e-8, color="gray", linewidth=0.8, linestyle=":")
    ax.set_title("circular-cone batch: final residuals by angle")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def lowrank_time_figure(rows, times, path) -> None:
    """Cumulative fraction of solved instances against wall time."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    groups = {}
    for row, sec in zip(rows, times):
        key = (row["r_max"], row["p"])
        groups.setdefault(key, []).append(
            (float(sec), row["status"] == "Solved"))
    for (r_max, p), entries in sorted(groups.items()):
        total = len(entries)
        solved = sorted(t for t, ok in entries if ok)
        if not solved:
            continue
        xs = np.concatenate([[0.0], solved])
        ys = np.concatenate([[0.0], np.arange(1, len(solved) + 1)]) / total
        ax.step(xs, ys, where="post", label=f"r={r_max}, p={p}")
    ax.set_xlabel("wall time per instance (s)")
    ax.set_ylabel("fraction solved")
    ax.set_ylim(0.0, 1.05)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=7, ncol=3)
    ax.set_title("completion grid: cumulative solve times")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def landscape_figure(x1, x2, h_norm, overlays, path, tau=1.0) -> None:
    """Residual-norm heatmap with feasibility curve and cone boundary rays.

    overlays: list of (kind, point) with kind in
    {"feasible", "stationary", "solution"}.
    """
    fig, ax = plt.subplots(figsize=(5.2, 4.6))
    grid = ax.pcolormesh(x1, x2, h_norm, cmap="gray", shading="nearest")
    fig.colorbar(grid, ax=ax, label="residual norm")
    lim = float(max(abs(x1[0]), abs(x1[-1])))
    top = np.array([[0.0, 0.0], [lim, tau * lim]])
    bot = np.array([[0.0, 0.0], [lim, -tau * lim]])
    for seg in (top, bot):
        ax.plot(seg[:, 0], seg[:, 1], color="dimgray", linewidth=1.4,
                marker="x", markevery=[1])
    feas = np.array([pt for kind, pt in overlays if kind == "feasible"])
    if feas.size:
        order = np.argsort(feas[:, 1], kind="stable")
        ax.plot(feas[order, 0], feas[order, 1], ".", color="black",
                markersize=1.5)
    for kind, pt in overlays:
        if kind == "stationary":
            ax.plot([pt[0]], [pt[1]], "o", color="black", markersize=7)
        elif kind == "solution":
            ax.plot([pt[0]], [pt[1]], "*", color="white", markersize=10,
                    markeredgecolor="black")
    ax.set_xlim(x1[0], x1[-1])
    ax.set_ylim(x2[0], x2[-1])
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title("residual landscape at fixed multiplier")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def angle_label(omega: float) -> str:
    """Readable label for common multiples of pi; falls back to decimals."""
    for den in (2, 3, 4, 6, 12):
        for num in range(1, den):
            if math.isclose(omega, num * math.pi / den, rel_tol=1e-12):
                head = "pi" if num == 1 else f"{num}pi"
                return f"{head}/{den}"
    return f"{omega:.6g}"
