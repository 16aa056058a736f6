"""Matplotlib figure output for the command-line report paths."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.collections import LineCollection

from .model import Mescher

__all__ = ["plot_vertex_field", "plot_edge_field"]


def _finish(fig, ax, m: Mescher, title, path):
    ax.set_aspect("equal")
    pad_x = 0.05 * (m.x.max() - m.x.min() + 1e-12)
    pad_y = 0.05 * (m.y.max() - m.y.min() + 1e-12)
    ax.set_xlim(m.x.min() - pad_x, m.x.max() + pad_x)
    ax.set_ylim(m.y.min() - pad_y, m.y.max() + pad_y)
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_vertex_field(m: Mescher, values, path, title=None,
                      cmap="viridis") -> None:
    """Save a filled-triangle plot of a per-vertex scalar field."""
    values = np.asarray(values, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 6))
    tpc = ax.tripcolor(m.x, m.y, m.topology.faces, values,
                       shading="gouraud", cmap=cmap)
    fig.colorbar(tpc, ax=ax, shrink=0.8)
    _finish(fig, ax, m, title, path)


def plot_edge_field(m: Mescher, values, path, title=None,
                    cmap="coolwarm") -> None:
    """Save a colored-edge plot of a per-edge scalar field."""
    values = np.asarray(values, dtype=float)
    edges = m.topology.edges
    segs = np.stack([np.column_stack([m.x[edges[:, 0]], m.y[edges[:, 0]]]),
                     np.column_stack([m.x[edges[:, 1]], m.y[edges[:, 1]]])],
                    axis=1)
    lim = float(np.abs(values).max()) if len(values) else 1.0
    lim = lim if lim > 0.0 else 1.0
    lc = LineCollection(segs, cmap=cmap, linewidths=1.2)
    lc.set_array(values)
    lc.set_clim(-lim, lim)
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.add_collection(lc)
    fig.colorbar(lc, ax=ax, shrink=0.8)
    _finish(fig, ax, m, title, path)
