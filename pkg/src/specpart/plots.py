"""Figure rendering for partitions, energy histories and p-sweeps.

All plots are static files (SVG by default) written next to the delimited
output of a run; nothing here is interactive.
"""

from __future__ import annotations

import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Polygon as MplPolygon

from .extract import PartitionGeometry
from .grids import DomainSpec

_CMAP = plt.get_cmap("tab10")


def _domain_outline(domain: DomainSpec | None):
    if domain is None:
        return None
    if domain.kind == "square":
        s = domain.side
        return np.array([[0, 0], [s, 0], [s, s], [0, s], [0, 0]])
    if domain.kind == "triangle":
        s = domain.side
        return np.array([[0, 0], [s, 0], [0.5 * s, 0.5 * math.sqrt(3) * s], [0, 0]])
    if domain.kind == "disk":
        t = np.linspace(0, 2 * math.pi, 361)
        return domain.radius * np.column_stack([np.cos(t), np.sin(t)])
    if domain.kind == "sector":
        half = 0.5 * domain.opening
        t = np.linspace(-half, half, 181)
        arc = domain.radius * np.column_stack([np.cos(t), np.sin(t)])
        return np.vstack([[0, 0], arc, [0, 0]])
    if domain.kind == "polygon":
        v = np.asarray(domain.vertices)
        return np.vstack([v, v[:1]])
    return None


def plot_partition(partition: PartitionGeometry, path, title: str = "",
                   cell_values=None) -> None:
    """Color-filled cells, interfaces, singular points; saves to `path`."""
    fig, ax = plt.subplots(figsize=(5, 5))
    for idx, cell in enumerate(partition.cells):
        color = _CMAP(idx % 10)
        ax.add_patch(MplPolygon(cell.outer, closed=True, facecolor=color,
                                edgecolor="black", linewidth=0.8, alpha=0.65))
        for hole in cell.holes:
            ax.add_patch(MplPolygon(hole, closed=True, facecolor="white",
                                    edgecolor="black", linewidth=0.8))
        cx, cy = cell.outer.mean(axis=0)
        label = str(idx)
        if cell_values is not None:
            label += f"\n{cell_values[idx]:.1f}"
        ax.text(cx, cy, label, ha="center", va="center", fontsize=8)
    outline = _domain_outline(partition.domain)
    if outline is not None:
        ax.plot(outline[:, 0], outline[:, 1], "k-", linewidth=1.4)
    for pt in partition.singular_points:
        ax.plot(pt.x, pt.y, "ko", markersize=4)
    ax.set_aspect("equal")
    ax.set_title(title)
    ax.autoscale_view()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_energy_history(history, path, title: str = "") -> None:
    """Per-level energy traces of one optimization run."""
    fig, ax = plt.subplots(figsize=(6, 4))
    offset = 0
    for entry in history:
        xs = offset + np.arange(len(entry.energies))
        label = f"n={entry.n}"
        if entry.eps is not None:
            label += f", eps={entry.eps:g}"
        ax.semilogy(xs, entry.energies, marker=".", markersize=3, label=label)
        offset = xs[-1] + 1
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_p_sweep(result, path, title: str = "") -> None:
    """Energy curves against p: optimized p-energy in blue, largest cell
    eigenvalue in red, the reference bound in magenta when given."""
    fig, ax = plt.subplots(figsize=(6, 4))
    p = result.p_grid
    ax.plot(p, result.energy_p, "b.-", label="p-energy")
    ax.plot(p, result.energy_max, "r.-", label="max eigenvalue")
    if result.reference is not None:
        ax.axhline(result.reference, color="m", linestyle="--",
                   label="reference")
    ax.set_xlabel("p")
    ax.set_ylabel("energy")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
