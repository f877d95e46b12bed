"""Matplotlib rendering of evaluation artifacts to image files.

Figures are written alongside the delimited outputs; nothing here opens a
window (the Agg backend is forced).
"""

from __future__ import annotations

from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluate import MatchTally, RocPoint


def plot_roc(
    curves: Mapping[str, Sequence[RocPoint]], path, title: str = "ROC at fixed decision criteria"
):
    """One ROC panel; each named curve is a set of (FPR, TPR) points joined
    in threshold order, with the chance diagonal for reference."""
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot([0, 1], [0, 1], ls="--", c="0.7", lw=1, label="chance")
    for name, points in curves.items():
        fpr = [p.fpr for p in points]
        tpr = [p.tpr for p in points]
        ax.plot(fpr, tpr, marker="o", label=name)
        for p in points:
            ax.annotate(f"{p.threshold:g}", (p.fpr, p.tpr), fontsize=7,
                        textcoords="offset points", xytext=(4, 4))
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_tally(tallies: Mapping[str, MatchTally], path, title: str = "S / NONS / F by variant"):
    """Stacked percentage bars, one per method/variant column."""
    names = list(tallies)
    s = [tallies[n].s_pct for n in names]
    nons = [tallies[n].nons_pct for n in names]
    f = [tallies[n].f_pct for n in names]
    fig, ax = plt.subplots(figsize=(max(4, 1.2 * len(names)), 4))
    ax.bar(names, s, label="S", color="#2b7a3e")
    ax.bar(names, nons, bottom=s, label="NONS", color="#7fb069")
    ax.bar(names, f, bottom=[a + b for a, b in zip(s, nons)], label="F", color="#c0504d")
    ax.set_ylabel("% of cases")
    ax.set_ylim(0, 100)
    ax.set_title(title)
    ax.legend(fontsize=8)
    plt.setp(ax.get_xticklabels(), rotation=30, ha="right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
