"""Figure rendering for experiment reports.

Each helper writes one PNG next to the delimited output it visualizes.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _finish(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_cdf_figure(path, curves: Mapping[str, "CdfCurve"]) -> None:
    """Positioning-error CDF, one line per labeled curve."""
    fig, ax = plt.subplots(figsize=(6, 4.2))
    for label, curve in curves.items():
        ax.plot(curve.thresholds, curve.values, marker=".", markersize=3, label=label)
    ax.set_xlabel("positioning error threshold [m]")
    ax.set_ylabel("CDF")
    ax.set_ylim(0.0, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend()
    _finish(fig, path)


def save_traffic_figure(path, totals: Mapping[str, Sequence[int]]) -> None:
    """Total directed messages per trial."""
    fig, ax = plt.subplots(figsize=(6, 4.2))
    for label, values in totals.items():
        ax.plot(range(len(values)), values, marker="o", markersize=3, lw=0.8, label=label)
    ax.set_xlabel("trial")
    ax.set_ylabel("directed messages")
    ax.grid(True, alpha=0.3)
    ax.legend()
    _finish(fig, path)


def save_runtime_figure(path, runtimes: Mapping[str, Sequence[float]]) -> None:
    """Inference wall-clock distribution per algorithm."""
    fig, ax = plt.subplots(figsize=(6, 4.2))
    labels = list(runtimes)
    ax.boxplot([runtimes[label] for label in labels], tick_labels=labels)
    ax.set_ylabel("inference time [s]")
    ax.grid(True, axis="y", alpha=0.3)
    fig.autofmt_xdate(rotation=20)
    _finish(fig, path)


def save_deployment_figure(path, scenario, graph=None) -> None:
    """Node map: anchors as stars, agents as dots, optional edges."""
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    if graph is not None:
        for a, b in graph.edges:
            pa, pb = scenario.position(a), scenario.position(b)
            ax.plot([pa[0], pb[0]], [pa[1], pb[1]], color="0.85", lw=0.5, zorder=1)
    agents = scenario.agent_positions_arr
    anchors = scenario.anchor_positions_arr
    if len(agents):
        ax.scatter(agents[:, 0], agents[:, 1], s=10, c="tab:blue", label="agents", zorder=2)
    ax.scatter(anchors[:, 0], anchors[:, 1], s=90, c="tab:red", marker="*", label="anchors", zorder=3)
    ax.set_xlim(0, scenario.area_side)
    ax.set_ylim(0, scenario.area_side)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.legend(loc="upper right")
    _finish(fig, path)
