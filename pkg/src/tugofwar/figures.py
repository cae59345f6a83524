"""Matplotlib renderings for the report paths (PNG files next to the CSVs)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .models import agent_value


def save_root_table_chart(root_table, path: str | Path, title: str = "") -> Path:
    """Sorted win-probability bars for the root actions of one decision."""
    values = [agent_value(v) for _, v in root_table]
    fig, ax = plt.subplots(figsize=(8, 3.2))
    ax.bar(range(len(values)), values, color="#2a7f4f")
    ax.set_ylim(0, 1.05)
    ax.set_xlabel("root actions (ranked)")
    ax.set_ylabel("win probability")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return Path(path)


def save_interest_curves(scores, path: str | Path, game_id: str = "") -> Path:
    """Per-decision drop / fluctuation / criticality curves for one game."""
    idx = [s.index for s in scores]
    drops = [s.value_drop if s.value_drop is not None else np.nan for s in scores]
    fig, ax = plt.subplots(figsize=(8, 3.2))
    ax.plot(idx, drops, marker="o", label="value drop")
    ax.plot(idx, [s.fluctuation for s in scores], marker="s", label="fluctuation")
    ax.plot(idx, [s.criticality for s in scores], marker="^", label="criticality")
    ax.set_xlabel("decision")
    ax.set_ylabel("score")
    ax.legend(loc="upper left", fontsize=8)
    if game_id:
        ax.set_title(f"interest scores — {game_id}")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return Path(path)


def save_severity_histograms(report: dict, path: str | Path) -> Path:
    """One severity histogram panel per detector from a lint report."""
    hists = report["severity_histogram"]
    names = [n for n in hists if sum(hists[n]["counts"])] or list(hists)[:1]
    fig, axes = plt.subplots(len(names), 1, figsize=(7, 2.2 * len(names)), squeeze=False)
    for ax, name in zip(axes[:, 0], names):
        counts = hists[name]["counts"]
        edges = hists[name]["bin_edges"]
        labels = [f"{lo}–{hi}" for lo, hi in zip(edges, edges[1:] + ["inf"])][: len(counts)]
        ax.bar(range(len(counts)), counts, color="#b04a3a")
        ax.set_xticks(range(len(counts)))
        ax.set_xticklabels(labels, fontsize=6, rotation=30)
        ax.set_title(name, fontsize=9)
        ax.set_ylabel("reports")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return Path(path)


def save_training_curves(log: list[dict], path: str | Path) -> Path:
    games = [r["games"] for r in log]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.2))
    ax1.plot(games, [r["win_rate"] for r in log], color="#2a7f4f")
    ax1.set_xlabel("games")
    ax1.set_ylabel("trailing win rate")
    ax1.set_ylim(0, 1)
    losses = [(g, r["loss"]) for g, r in zip(games, log) if r["loss"] is not None]
    if losses:
        ax2.plot(*zip(*losses), color="#b04a3a")
    ax2.set_xlabel("games")
    ax2.set_ylabel("loss")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return Path(path)
