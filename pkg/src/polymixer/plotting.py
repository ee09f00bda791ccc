"""Figures written next to the benchmark CSVs."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .bench import BenchRecord, records_slope  # noqa: E402
from .cost import crossover_n, flops_mha, flops_pom  # noqa: E402

COLORS = {"pom": "#2a7ab9", "mha": "#d1495b"}
LABELS = {"pom": "PoM", "mha": "Self-attention"}


def _style(ax):
    ax.grid(True, which="both", color="0.9", linewidth=0.6)
    for side in ("top", "right"):
        ax.spines[side].set_visible(False)


def plot_scaling(records: Sequence[BenchRecord], path, title: str | None = None) -> Path:
    """Log-log wall time vs sequence length, one line per variant, with the
    fitted slope in the legend. Skipped points are drawn as crosses on the
    axis floor."""
    fig, ax = plt.subplots(figsize=(5, 3.4))
    variants = sorted({r.variant for r in records})
    for v in variants:
        rs = [r for r in records if r.variant == v]
        ok = [r for r in rs if not r.skipped]
        label = LABELS.get(v, v)
        if len(ok) >= 2:
            label += f" (slope {records_slope(rs):.2f})"
        ax.loglog([r.n for r in ok], [r.wall_seconds for r in ok], "o-",
                  color=COLORS.get(v), label=label, markersize=4)
        skipped = [r.n for r in rs if r.skipped]
        if skipped and ok:
            floor = min(r.wall_seconds for r in ok)
            ax.plot(skipped, [floor] * len(skipped), "x", color=COLORS.get(v))
    ax.set_xscale("log", base=2)
    ax.set_xlabel("sequence length n")
    ax.set_ylabel("median wall time (s)")
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(frameon=False, fontsize=8)
    _style(ax)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_cost_model(d: int, D: int, k: int, path, n_max: int | None = None) -> Path:
    """Multiplication counts for both layers against n, crossover marked."""
    c = crossover_n(d, D, k)
    n_max = n_max or max(8 * c, 64)
    ns = np.unique(np.geomspace(1, n_max, 200).astype(int))
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.loglog(ns, [flops_pom(int(n), d, D, k) for n in ns], color=COLORS["pom"],
              label=f"PoM (D={D}, k={k})")
    ax.loglog(ns, [flops_mha(int(n), d) for n in ns], color=COLORS["mha"], label="Self-attention")
    ax.axvline(c, color="0.4", linestyle=":", linewidth=1)
    ax.annotate(f"n = {c}", (c, flops_pom(c, d, D, k)), textcoords="offset points",
                xytext=(4, -12), fontsize=8)
    ax.set_xlabel("sequence length n")
    ax.set_ylabel("multiplications")
    ax.set_title(f"d = {d}", fontsize=10)
    ax.legend(frameon=False, fontsize=8)
    _style(ax)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
