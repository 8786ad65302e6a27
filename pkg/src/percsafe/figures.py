"""Matplotlib renderings of report artifacts.

Figures are written next to the delimited output with fixed metadata and no
timestamps, so report bundles stay byte-identical across reruns.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import HeatmapComparison, HeatmapGrid, SafetyReport

_SAVE_KWARGS = dict(dpi=150, metadata={"Software": "percsafe"})


def _pcolor(ax, grid_r, grid_u, values, title, cmap, vmin=None, vmax=None):
    mesh = ax.pcolormesh(
        grid_r, grid_u, values.T, cmap=cmap, vmin=vmin, vmax=vmax, shading="nearest"
    )
    ax.set_xlabel("distance (m)")
    ax.set_ylabel("relative speed (m/s)")
    ax.set_title(title)
    return mesh


def render_heatmap_panels(
    base: HeatmapGrid,
    cand: HeatmapGrid,
    comparison: HeatmapComparison,
    path: str | Path,
) -> Path:
    """Three-panel figure: baseline field, candidate field, decrease %."""
    fig, axes = plt.subplots(1, 3, figsize=(13.5, 3.8), constrained_layout=True)
    m0 = _pcolor(axes[0], base.r_axis, base.u_axis, base.values,
                 "baseline collision probability", "viridis", 0.0, 1.0)
    fig.colorbar(m0, ax=axes[0])
    m1 = _pcolor(axes[1], cand.r_axis, cand.u_axis, cand.values,
                 "attentive collision probability", "viridis", 0.0, 1.0)
    fig.colorbar(m1, ax=axes[1])
    pct = comparison.decrease_pct
    finite = pct[np.isfinite(pct)]
    bound = float(np.abs(finite).max()) if finite.size else 1.0
    bound = bound if bound > 0.0 else 1.0
    m2 = _pcolor(axes[2], comparison.r_axis, comparison.u_axis, pct,
                 "decrease (%)", "RdBu", -bound, bound)
    fig.colorbar(m2, ax=axes[2])
    path = Path(path)
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
    return path


def render_safety_bars(
    reports: Mapping[str, SafetyReport],
    path: str | Path,
) -> Path:
    """CCP/ACP bar chart across profiles (ACP on a log scale)."""
    names = list(reports)
    ccp_vals = [reports[n].ccp.value for n in names]
    acp_vals = [reports[n].acp.value for n in names]
    fig, axes = plt.subplots(1, 2, figsize=(10, 3.8), constrained_layout=True)
    x = np.arange(len(names))
    for ax, vals, label in ((axes[0], ccp_vals, "CCP"), (axes[1], acp_vals, "ACP")):
        ax.bar(x, vals, color="#39618e")
        ax.set_xticks(x)
        ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
        ax.set_title(label)
        if label == "ACP" and all(v > 0 for v in vals):
            ax.set_yscale("log")
    path = Path(path)
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
    return path


def render_latency_trace(
    baseline_ms: Sequence[float],
    attentive_ms: Sequence[float],
    path: str | Path,
    title: str = "per-frame inference latency",
) -> Path:
    fig, ax = plt.subplots(figsize=(9, 3.2), constrained_layout=True)
    ax.plot(baseline_ms, label="baseline", lw=1.0)
    ax.plot(attentive_ms, label="attentive", lw=1.0)
    ax.set_xlabel("frame")
    ax.set_ylabel("latency (ms)")
    ax.set_title(title)
    ax.legend()
    path = Path(path)
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
    return path
