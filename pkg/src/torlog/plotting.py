"""Static SVG figures of solved polygons."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "torlog"  # stable element ids

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Polygon as PolygonPatch

from .geometry import Polygon


def plot_polygon(P: Polygon, g_tor, path, title: str | None = None, arrow_fraction: float = 0.35):
    """Outline of ``P``, the origin, and an outward arrow from each facet
    midpoint with length proportional to its cone-torsion value.

    The longest arrow is ``arrow_fraction`` of the diameter. The SVG is
    written without a date stamp, so identical inputs give identical files.
    """
    g = np.asarray(g_tor, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.add_patch(PolygonPatch(P.vertices, closed=True, fill=True, facecolor="0.92", edgecolor="k", lw=1.2))
    ax.plot([0.0], [0.0], marker="+", color="C3", ms=10, mew=1.5, label="origin")
    gmax = g[P.present].max() if P.present.any() else 1.0
    unit = arrow_fraction * P.diameter / gmax
    for k in np.flatnonzero(P.present):
        mid = P.facet_endpoints[k].mean(axis=0)
        d = P.normals[k] * g[k] * unit
        ax.annotate(
            "", xy=mid + d, xytext=mid, arrowprops=dict(arrowstyle="->", color="C0", lw=1.2, shrinkA=0, shrinkB=0)
        )
    pad = arrow_fraction * P.diameter * 1.15
    lo = P.vertices.min(axis=0) - pad
    hi = P.vertices.max(axis=0) + pad
    ax.set_xlim(lo[0], hi[0])
    ax.set_ylim(lo[1], hi[1])
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", frameon=False)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
