"""Figure rendering for the CLI report path. File output only (Agg)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fields import ScalarField, zero_level_set


def save_field(f: ScalarField, path, title: str = "", front: bool = True) -> None:
    """Render a field: line plot in 1D, pseudocolor with front overlay in 2D."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    g = f.grid
    if g.dim == 1:
        ax.plot(g.axis_coords(0), f.values, lw=1.2)
        ax.axhline(0.0, color="k", lw=0.5, alpha=0.5)
        ax.set_xlabel("x")
    else:
        x, y = g.axis_coords(0), g.axis_coords(1)
        pc = ax.pcolormesh(x, y, f.values.T, shading="nearest", cmap="RdBu_r")
        fig.colorbar(pc, ax=ax)
        if front:
            triple = zero_level_set(f)
            if not triple.is_empty:
                ax.plot(triple.gamma[:, 0], triple.gamma[:, 1], ".k", ms=1.5)
        ax.set_aspect("equal")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_profiles(xs, profiles, labels, path, title: str = "") -> None:
    """Overlay of 1D profiles (snapshot waterfall)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for values, label in zip(profiles, labels):
        ax.plot(xs, values, lw=1.0, label=label)
    ax.set_xlabel("x")
    if len(profiles) <= 8:
        ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_series(x, series, path, xlabel: str = "", ylabel: str = "",
                title: str = "", logx: bool = False, logy: bool = False,
                guide=None) -> None:
    """One or more labeled series over a common abscissa.

    ``series`` is a mapping label -> values; ``guide`` an optional
    (label, values) pair drawn dashed (e.g. a tolerance line).
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, ys in series.items():
        ax.plot(x, ys, marker="o", ms=3.5, lw=1.0, label=label)
    if guide is not None:
        glabel, gvals = guide
        ax.plot(x, gvals, "k--", lw=1.0, label=glabel)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_fronts(fronts, path, title: str = "") -> None:
    """Overlay of 2D front point sets, one color per label."""
    fig, ax = plt.subplots(figsize=(5.5, 5.0))
    for label, pts in fronts:
        pts = np.asarray(pts)
        if pts.size == 0:
            continue
        ax.plot(pts[:, 0], pts[:, 1], ".", ms=2.0, label=label)
    ax.set_aspect("equal")
    ax.legend(fontsize=8, markerscale=3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
