"""Figure rendering for command outputs (headless, written next to the data).

Each command's tabular result has one natural picture; these helpers draw it
with matplotlib's Agg backend so they work without a display.  Import cost is
deferred until a figure is actually requested.
"""
from __future__ import annotations

import os


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _save(fig, out_stem: str) -> str:
    path = out_stem + ".png"
    fig.savefig(path, dpi=150, bbox_inches="tight")
    return path


def solve_figure(result: dict, out_stem: str) -> str:
    plt = _pyplot()
    probs = result["probabilities"]
    labels = list(probs)
    values = [probs[k] for k in labels]
    fig, ax = plt.subplots(figsize=(max(6, 0.45 * len(labels)), 4))
    ax.bar(range(len(labels)), values, color="#3b6ea5")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=90, fontsize=8)
    ax.set_xlabel("solution bitstring")
    ax.set_ylabel("probability")
    ax.set_title(f"{result['backend']} backend: r={result['r']:.4f}, "
                 f"optimal group p={result['optimal_group_probability']:.4f}")
    ax.grid(axis="y", alpha=0.3)
    path = _save(fig, out_stem)
    plt.close(fig)
    return path


def sweep_figure(param: str, rows, out_stem: str) -> str:
    plt = _pyplot()
    x = [row[0] for row in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(x, [row[1] for row in rows], "o--", label="initial schedule")
    if any(row[2] is not None for row in rows):
        ax1.plot(x, [row[2] for row in rows], "s-", label="optimized")
    ax1.set_xlabel(param)
    ax1.set_ylabel("backflow measure")
    ax1.legend()
    ax2.plot(x, [row[5] for row in rows], "d-", color="#a55a3b")
    ax2.set_xlabel(param)
    ax2.set_ylabel("exploration rate (1/ns)")
    if min(x) > 0 and max(x) / min(x) > 30:
        ax1.set_xscale("log")
        ax2.set_xscale("log")
    for ax in (ax1, ax2):
        ax.grid(alpha=0.3)
    fig.tight_layout()
    path = _save(fig, out_stem)
    plt.close(fig)
    return path


def explore_figure(rows, out_stem: str) -> str:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.scatter([row[0] for row in rows], [row[1] for row in rows],
               marker="^", color="#3b6ea5", alpha=0.8)
    ax.set_xlabel("exploration rate (1/ns)")
    ax.set_ylabel("approximation ratio r")
    ax.grid(alpha=0.3)
    path = _save(fig, out_stem)
    plt.close(fig)
    return path


def benchmark_figure(rows, out_stem: str) -> str:
    plt = _pyplot()
    pts = [(row[0], row[5], row[6]) for row in rows
           if row[5] is not None]
    fig, ax = plt.subplots(figsize=(6, 4))
    if pts:
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-",
                label="time ratio")
        ax.plot([p[0] for p in pts], [p[2] for p in pts], "s--",
                label="memory ratio")
        ax.set_yscale("log")
    ax.set_xlabel("nodes")
    ax.set_ylabel("trajectory / master")
    ax.legend()
    ax.grid(alpha=0.3)
    path = _save(fig, out_stem)
    plt.close(fig)
    return path


def multinode_figure(rows, out_stem: str) -> str:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    x = [row[0] for row in rows]
    ax.plot(x, [row[1] for row in rows], "o-", color="#3b6ea5", label="r")
    ax.set_xlabel("nodes")
    ax.set_ylabel("approximation ratio r")
    ax2 = ax.twinx()
    ax2.plot(x, [row[2] for row in rows], "s--", color="#a55a3b",
             label="total duration")
    ax2.set_ylabel("‖τ‖₁ (ns)")
    lines = ax.get_lines() + ax2.get_lines()
    ax.legend(lines, [ln.get_label() for ln in lines], loc="best")
    ax.grid(alpha=0.3)
    path = _save(fig, out_stem)
    plt.close(fig)
    return path


def render(command: str, payload, out_path: str):
    """Write the figure(s) for one command next to its data file."""
    stem = os.path.splitext(out_path)[0]
    if command == "solve":
        return [solve_figure(payload, stem)]
    if command == "sweep":
        param, rows = payload
        return [sweep_figure(param, rows, stem)]
    if command == "explore":
        return [explore_figure(payload, stem)]
    if command == "benchmark":
        return [benchmark_figure(payload, stem)]
    if command == "multinode":
        return [multinode_figure(payload, stem)]
    return []
