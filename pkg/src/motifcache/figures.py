"""Render the report figures that accompany the CSV outputs."""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .motif_miner import Motif  # noqa: E402
from .simulator import CdfRow, MetricsRow, STRATEGY_LOCATION, STRATEGY_MOTIF  # noqa: E402

__all__ = [
    "plot_average_rates",
    "plot_rate_cdfs",
    "plot_motif_zscores",
    "plot_placements",
]

_STYLE = {
    STRATEGY_MOTIF: dict(color="tab:blue", marker="o", label="motif influence"),
    STRATEGY_LOCATION: dict(color="tab:orange", marker="s", label="location based"),
}


def plot_average_rates(rows: Sequence[MetricsRow], path: str | Path) -> Path:
    """Mean achieved rate per sweep point, one curve per strategy."""
    path = Path(path)
    by_curve: dict[str, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    for r in rows:
        by_curve[r.strategy][r.sweep_point].append(r.avg_rate_bps)
    scenario = rows[0].scenario if rows else 1
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for strategy in (STRATEGY_MOTIF, STRATEGY_LOCATION):
        points = by_curve.get(strategy)
        if not points:
            continue
        xs = sorted(points)
        ys = [sum(points[x]) / len(points[x]) / 1e6 for x in xs]
        ax.plot(xs, ys, **_STYLE[strategy])
    ax.set_xlabel("number of serving cars" if scenario == 1 else "number of cars")
    ax.set_ylabel("average data rate (Mbit/s)")
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_rate_cdfs(rows: Sequence[CdfRow], path: str | Path) -> Path:
    """Empirical per-car rate CDFs, one panel per serving count."""
    path = Path(path)
    by_panel: dict[int, dict[str, list[tuple[float, float]]]] = defaultdict(
        lambda: defaultdict(list)
    )
    for r in rows:
        by_panel[r.serving_count][r.strategy].append((r.rate_bps, r.cdf))
    counts = sorted(by_panel)
    ncols = min(len(counts), 3) or 1
    nrows = math.ceil(len(counts) / ncols) or 1
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(4.2 * ncols, 3.2 * nrows), squeeze=False
    )
    for ax, count in zip(axes.flat, counts):
        for strategy, pts in sorted(by_panel[count].items()):
            pts = sorted(pts)
            ax.step(
                [p[0] / 1e6 for p in pts],
                [p[1] for p in pts],
                where="post",
                color=_STYLE[strategy]["color"],
                label=_STYLE[strategy]["label"],
            )
        ax.set_title(f"{count} serving cars")
        ax.set_xlabel("rate (Mbit/s)")
        ax.set_ylabel("CDF")
        ax.grid(True, alpha=0.4)
        ax.legend(fontsize=8)
    for ax in axes.flat[len(counts):]:
        ax.set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_motif_zscores(motifs: Sequence[Motif], path: str | Path) -> Path:
    """Bar chart of motif significance scores."""
    path = Path(path)
    finite = [m.z for m in motifs if math.isfinite(m.z)]
    cap = (max(finite) if finite else 1.0) * 1.2
    heights = [m.z if math.isfinite(m.z) else cap for m in motifs]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * len(motifs) + 2), 4))
    bars = ax.bar(range(len(motifs)), heights, color="tab:blue")
    for bar, m in zip(bars, motifs):
        if not math.isfinite(m.z):
            ax.text(
                bar.get_x() + bar.get_width() / 2,
                bar.get_height(),
                "inf",
                ha="center",
                va="bottom",
                fontsize=8,
            )
    ax.set_xticks(range(len(motifs)))
    ax.set_xticklabels([m.label for m in motifs], rotation=45, ha="right", fontsize=7)
    ax.set_xlabel("structure (canonical label)")
    ax.set_ylabel("significance score")
    ax.grid(True, axis="y", alpha=0.4)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_placements(
    positions: Mapping[int, tuple[float, float]],
    serving_by_strategy: Mapping[str, frozenset[int]],
    path: str | Path,
) -> Path:
    """Road-plane scatter with the chosen serving vehicles highlighted."""
    path = Path(path)
    strategies = list(serving_by_strategy)
    fig, axes = plt.subplots(
        len(strategies), 1, figsize=(8, 2.2 * len(strategies)), squeeze=False, sharex=True
    )
    for ax, strategy in zip(axes.flat, strategies):
        serving = serving_by_strategy[strategy]
        xs = [positions[v][0] for v in sorted(positions)]
        ys = [positions[v][1] for v in sorted(positions)]
        ax.scatter(xs, ys, s=14, color="0.7", label="requesting")
        sx = [positions[v][0] for v in sorted(serving)]
        sy = [positions[v][1] for v in sorted(serving)]
        color = _STYLE.get(strategy, {}).get("color", "tab:green")
        ax.scatter(sx, sy, s=40, color=color, marker="*", label="serving")
        ax.set_ylabel("y (m)")
        ax.set_title(f"{strategy} selection", fontsize=9)
        ax.legend(fontsize=7, loc="upper right")
    axes.flat[-1].set_xlabel("x (m)")
    fig.tight_layout()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path
