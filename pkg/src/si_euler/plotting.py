"""Figures rendered to PNG files next to the CSV output (optional)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_simulation(trajectory, directory: Path) -> list[Path]:
    tr = trajectory.trace
    out = []
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(10, 3.8))
    a1.plot(tr.times, tr.entropy, lw=1.2)
    a1.axhline(2 * np.pi, color="0.6", ls="--", lw=0.8)
    a1.set_xlabel("t")
    a1.set_ylabel("S(t)")
    a1.set_title("entropy")
    a2.semilogy(tr.times, tr.h1dual, lw=1.2)
    a2.set_xlabel("t")
    a2.set_ylabel(r"$\|\partial_\theta G\|_{L^2}$")
    a2.set_title("weak-convergence proxy")
    out.append(_save(fig, directory / "diagnostics.png"))

    fig, ax = plt.subplots(figsize=(7, 4))
    snaps = trajectory.snapshots
    cmap = plt.get_cmap("viridis")
    for k, s in enumerate(snaps):
        g = s.g_grid
        ax.plot(g.nodes, g.values, color=cmap(k / max(len(snaps) - 1, 1)), lw=1.0, label=f"t={s.t:.3g}")
    ax.set_xlabel(r"$\theta$")
    ax.set_ylabel("g")
    if len(snaps) <= 8:
        ax.legend(fontsize=7)
    out.append(_save(fig, directory / "snapshots.png"))

    fig, ax = plt.subplots(figsize=(7, 4))
    ct = tr.crossing_time
    finite = np.isfinite(ct)
    ax.scatter(tr.labels[finite], ct[finite], s=2)
    ax.set_xlabel("label")
    ax.set_ylabel("first time F < 0")
    ax.set_title("contracting set C(t)")
    out.append(_save(fig, directory / "crossing_times.png"))
    return out


def plot_contour(ctraj, directory: Path) -> list[Path]:
    fig, ax = plt.subplots(figsize=(7, 4))
    for j in range(ctraj.jumps.shape[1]):
        ax.plot(ctraj.jumps[:, j], ctraj.times, lw=1.0)
    ax.set_xlabel(r"jump position $a_j$")
    ax.set_ylabel("t")
    return [_save(fig, directory / "jumps.png")]


def plot_profile(theta, g, G, dG, directory: Path, name: str = "profile.png") -> list[Path]:
    fig, axes = plt.subplots(3, 1, figsize=(7, 6), sharex=True)
    for ax, v, lab in zip(axes, (g, G, dG), ("g", "G", r"$\partial_\theta G$")):
        ax.plot(theta, v, lw=1.0)
        ax.set_ylabel(lab)
    axes[-1].set_xlabel(r"$\theta$")
    return [_save(fig, directory / name)]


def plot_ode(path, F, directory: Path) -> list[Path]:
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(10, 3.8))
    a1.plot(path.t, path.y, lw=1.2)
    a1.set_xlabel("t")
    a1.set_ylabel("y")
    a2.plot(path.t, F, lw=1.2)
    a2.set_xlabel("t")
    a2.set_ylabel("F = -y'/y")
    return [_save(fig, directory / "ode.png")]
