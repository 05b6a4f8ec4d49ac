"""Figure rendering for CLI tables; only used when ``--figure`` is given."""

from __future__ import annotations

from typing import Sequence


def render(rows: Sequence[dict], x: str, ys: Sequence[str], path: str, title: str = "",
           logy: bool = False, group: str | None = None) -> None:
    """Line plot of columns ``ys`` against ``x``, one line per value of ``group`` if given."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    groups = sorted({r[group] for r in rows}, key=str) if group else [None]
    for g in groups:
        sub = [r for r in rows if group is None or r[group] == g]
        for y in ys:
            label = y if g is None else f"{y} [{group}={g}]"
            vals = [abs(r[y]) if logy else r[y] for r in sub]
            ax.plot([r[x] for r in sub], vals, marker="o", ms=3, label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(x)
    ax.set_title(title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
