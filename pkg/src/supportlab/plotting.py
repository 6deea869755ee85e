"""Success-rate heatmaps with threshold-curve overlays.

One panel per (estimator, snr, mar) triple: k across, m up, cell color =
empirical success rate on a fixed 0..1 scale so panels are comparable.
Cells with no usable data (skipped, failed, or simply absent from the grid)
are drawn in a loud off-palette color rather than interpolated away.
Requested threshold curves are drawn on top on a dense k grid.
"""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from . import theory
from .harness import CellResult
from .theory import CurveKind

MISSING_COLOR = "#ff00c8"

_CURVE_STYLE = {
    CurveKind.ML_NECESSARY: dict(color="white", ls="--", label="exhaustive floor"),
    CurveKind.MC_SUFFICIENT: dict(color="white", ls="-", label="correlation ceiling"),
    CurveKind.MC_HIGHSNR: dict(color="0.8", ls="-.", label="high-snr limit"),
    CurveKind.LASSO: dict(color="cyan", ls=":", label="convex-relaxation scaling"),
    CurveKind.CAPACITY: dict(color="orange", ls="--", label="counting floor"),
}

__all__ = ["MISSING_COLOR", "panel_groups", "overlay_curves"]


def panel_groups(results: Iterable[CellResult]):
    """Group results by (estimator, snr, mar) into dense masked grids.

    Returns a dict mapping the triple to (ks, ms, rate) where rate is a
    masked (len(ms), len(ks)) array; masked entries had no completed cell.
    """
    buckets: dict[tuple, list[CellResult]] = defaultdict(list)
    for r in results:
        buckets[(r.estimator, r.snr, r.mar)].append(r)
    panels = {}
    for key, rows in sorted(buckets.items()):
        ks = sorted({r.k for r in rows})
        ms = sorted({r.m for r in rows})
        rate = np.ma.masked_all((len(ms), len(ks)))
        for r in rows:
            if r.ok and r.trials > 0:
                rate[ms.index(r.m), ks.index(r.k)] = r.success_rate
        panels[key] = (ks, ms, rate)
    return panels


def _edges(values: Sequence[int]) -> np.ndarray:
    """Cell boundaries for an increasing (possibly uneven) integer grid."""
    v = np.asarray(values, dtype=float)
    if len(v) == 1:
        return np.array([v[0] - 0.5, v[0] + 0.5])
    mids = (v[1:] + v[:-1]) / 2
    return np.concatenate([[v[0] - (mids[0] - v[0])], mids,
                           [v[-1] + (v[-1] - mids[-1])]])


def _curve_values(kind: CurveKind, n: int, kgrid: np.ndarray,
                  snr: float, mar: float) -> np.ndarray:
    out = np.full(kgrid.shape, np.nan)
    for i, k in enumerate(kgrid):
        if n - k < 2 or k < 1:
            continue
        try:
            if kind is CurveKind.ML_NECESSARY:
                out[i] = theory._ml_necessary(n, k, snr, mar)
            elif kind is CurveKind.MC_SUFFICIENT:
                out[i] = theory._mc_sufficient(n, k, snr, mar)
            elif kind is CurveKind.MC_HIGHSNR:
                out[i] = theory._mc_highsnr(n, k, mar)
            elif kind is CurveKind.LASSO:
                out[i] = theory._lasso(n, k)
            else:
                out[i] = theory._capacity(n, k, snr)
        except ValueError:
            continue
    return out


def _draw_panel(ax, n: int, ks, ms, rate, curves, snr: float, mar: float):
    cmap = plt.get_cmap("viridis").copy()
    cmap.set_bad(MISSING_COLOR)
    mesh = ax.pcolormesh(_edges(ks), _edges(ms), rate, cmap=cmap,
                         vmin=0.0, vmax=1.0, shading="flat")
    kg = np.linspace(min(ks), max(ks), 256)
    for kind in curves:
        mv = _curve_values(kind, n, kg, snr, mar)
        if np.isfinite(mv).any():
            ax.plot(kg, mv, lw=1.6, **_CURVE_STYLE[kind])
    ax.set_xlim(_edges(ks)[[0, -1]])
    ax.set_ylim(_edges(ms)[[0, -1]])
    ax.set_xticks(ks if len(ks) <= 12 else ks[:: math.ceil(len(ks) / 12)])
    ax.set_xlabel("sparsity k")
    ax.set_ylabel("measurements m")
    return mesh


def overlay_curves(results: Iterable[CellResult],
                   curves: Sequence[CurveKind | str] = (),
                   out_dir=".", fmt: str = "svg",
                   stem: str = "heatmap") -> list[Path]:
    """Render one heatmap file per (estimator, snr, mar) panel plus a sheet.

    Returns the list of written paths.  ``curves`` picks which threshold
    overlays to draw; kinds whose parameters a panel cannot satisfy are
    silently omitted for that panel.
    """
    results = list(results)
    if not results:
        raise ValueError("no results to plot")
    curves = [CurveKind(c) for c in curves]
    n = results[0].n
    panels = panel_groups(results)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    for (est, snr, mar), (ks, ms, rate) in panels.items():
        fig, ax = plt.subplots(figsize=(5.2, 4.6))
        mesh = _draw_panel(ax, n, ks, ms, rate, curves, snr, mar)
        ax.set_title(f"{est} estimator, snr={snr:g}, mar={mar:g}")
        fig.colorbar(mesh, ax=ax, label="exact recovery rate")
        if curves:
            ax.legend(loc="upper left", fontsize=8, framealpha=0.4)
        name = f"{stem}_{est}_snr{snr:g}_mar{mar:g}.{fmt}".replace(" ", "")
        path = out_dir / name
        fig.savefig(path, bbox_inches="tight", dpi=150)
        plt.close(fig)
        written.append(path)

    if len(panels) > 1:
        cols = min(3, len(panels))
        rows_n = math.ceil(len(panels) / cols)
        fig, axes = plt.subplots(rows_n, cols,
                                 figsize=(4.6 * cols, 4.0 * rows_n),
                                 squeeze=False)
        mesh = None
        for ax in axes.flat[len(panels):]:
            ax.set_axis_off()
        for ax, ((est, snr, mar), (ks, ms, rate)) in zip(axes.flat, panels.items()):
            mesh = _draw_panel(ax, n, ks, ms, rate, curves, snr, mar)
            ax.set_title(f"{est}, snr={snr:g}, mar={mar:g}", fontsize=10)
        fig.colorbar(mesh, ax=axes, label="exact recovery rate",
                     shrink=0.8, fraction=0.05)
        path = out_dir / f"{stem}_sheet.{fmt}"
        fig.savefig(path, bbox_inches="tight", dpi=150)
        plt.close(fig)
        written.append(path)
    return written
