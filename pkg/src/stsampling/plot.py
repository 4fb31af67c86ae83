"""Static SVG figures: point scatter with optional lattice zero-set overlay."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .lattice import CurvilinearLattice, residual  # noqa: E402

plt.rcParams["svg.hashsalt"] = "stsampling"


def scatter_svg(points, path, lattices: list[CurvilinearLattice] = (), window: float | None = None, title: str = "") -> None:
    """Write a scatter of ``points``; each lattice is drawn as the zero contour of its residual."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if window is None:
        window = float(np.abs(pts).max()) if len(pts) else 1.0
    fig, ax = plt.subplots(figsize=(6, 6))
    if len(pts):
        ax.scatter(pts[:, 0], pts[:, 1], s=4, color="black", zorder=3)
    grid = np.linspace(-window, window, 600)
    X, Y = np.meshgrid(grid, grid)
    for L in lattices:
        Z = residual(L, np.stack([X, Y], axis=-1))
        ax.contour(X, Y, Z, levels=[0.0], colors="tab:red", linewidths=0.8)
    ax.set_xlim(-window, window)
    ax.set_ylim(-window, window)
    ax.set_aspect("equal")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    if title:
        ax.set_title(title)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
