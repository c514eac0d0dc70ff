"""Figures written next to CLI output.  Uses the non-interactive Agg backend."""

from __future__ import annotations

import math
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    # fixed metadata keeps repeated runs byte-identical
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)


def plot_gaps(gaps: Sequence[float], tail_start: int, title: str, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    n = np.arange(1, len(gaps) + 1)
    ax.plot(n, gaps, ".-", lw=1)
    ax.axvspan(tail_start + 0.5, len(gaps) + 0.5, color="0.9", label="tail window")
    ax.set_xlabel("sample index")
    ax.set_ylabel("d1(x_n, o) - d2(y_n, o')")
    ax.set_title(title, fontsize=9)
    ax.legend(loc="best", fontsize=8)
    _save(fig, path)


def plot_fibre(graph, path) -> None:
    """Radial drawing: distance from the centre is the event time."""
    n = len(graph.vertices)
    children = [[] for _ in range(n)]
    for i, j, _ in graph.edges:
        children[i].append(j)
    leaves = []

    def collect(u):
        if not children[u]:
            leaves.append(u)
        for v in children[u]:
            collect(v)

    collect(graph.root)
    angle = np.zeros(n)
    for k, u in enumerate(leaves):
        angle[u] = 2 * math.pi * k / max(len(leaves), 1)

    def settle(u):
        if children[u]:
            angle[u] = float(np.mean([settle(v) for v in children[u]]))
        return angle[u]

    settle(graph.root)
    r = np.array([float(t) for t in graph.times])
    xy = np.column_stack([r * np.cos(angle), r * np.sin(angle)])
    fig, ax = plt.subplots(figsize=(6, 6))
    for i, j, _ in graph.edges:
        ax.plot(*xy[[i, j]].T, color="0.4", lw=0.4)
    deg = np.array(graph.degrees())
    sc = ax.scatter(xy[:, 0], xy[:, 1], c=deg, s=6, cmap="viridis", zorder=3)
    fig.colorbar(sc, ax=ax, label="degree", shrink=0.7)
    ax.set_aspect("equal")
    ax.set_axis_off()
    ax.set_title(f"fibre: arity {graph.arity}, {graph.base.describe()}, radius {graph.radius}",
                 fontsize=9)
    _save(fig, path)


def plot_collapse(rows, path) -> None:
    s_vals = sorted({r.s for r in rows})
    th_vals = sorted({r.theta for r in rows})
    fig, ax = plt.subplots(figsize=(6, 4.5))
    if len(s_vals) > 1 and len(th_vals) > 1:
        grid = np.full((len(s_vals), len(th_vals)), np.nan)
        for r in rows:
            grid[s_vals.index(r.s), th_vals.index(r.theta)] = math.log10(r.error + 1e-300)
        im = ax.imshow(grid, origin="lower", aspect="auto",
                       extent=[th_vals[0], th_vals[-1], s_vals[0], s_vals[-1]])
        fig.colorbar(im, ax=ax, label="log10 |gap - predicted|")
        ax.set_xlabel("theta")
        ax.set_ylabel("s")
    else:
        ax.plot([r.t for r in rows], [r.gap for r in rows], ".-", label="d+ - d-")
        ax.axhline(rows[0].predicted, color="k", lw=0.8, ls="--", label="limit")
        ax.set_xlabel("t")
        ax.legend(fontsize=8)
    _save(fig, path)


def plot_spectrum(table, path) -> None:
    t1 = np.array([float(r[1]) for r in table.rows])
    t2 = np.array([float(r[2]) for r in table.rows])
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.scatter(t1, t2, s=8)
    hi = float(max(t1.max(initial=0), t2.max(initial=0))) or 1.0
    ax.plot([0, hi], [0, hi], color="0.5", lw=0.8)
    ax.set_xlabel("translation length, first")
    ax.set_ylabel("translation length, second")
    ax.set_title(f"marked spectra up to length {table.cap}", fontsize=9)
    _save(fig, path)


def plot_limitset(angles: Sequence[float], cs: Sequence[float], path) -> None:
    fig, ax = plt.subplots(figsize=(5, 5))
    t = np.linspace(0, 2 * math.pi, 400)
    ax.plot(np.cos(t), np.sin(t), color="0.6", lw=0.8)
    a = np.asarray(angles, dtype=float)
    if len(a):
        sc = ax.scatter(np.cos(a), np.sin(a), c=np.asarray(cs, dtype=float), s=16,
                        cmap="coolwarm", zorder=3)
        fig.colorbar(sc, ax=ax, label="C", shrink=0.7)
    ax.set_aspect("equal")
    ax.set_axis_off()
    ax.set_title("sampled limit directions", fontsize=9)
    _save(fig, path)


def plot_c_values(labels: Sequence[str], cs: Sequence[float], path) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(range(len(cs)), [float(c) for c in cs])
    ax.set_xticks(range(len(cs)), labels, rotation=90, fontsize=6)
    ax.set_ylabel("C")
    _save(fig, path)
