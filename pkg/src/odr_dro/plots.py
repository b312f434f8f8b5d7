"""Figures derived from the benchmark CSV.

SVG output is deterministic: a fixed hash salt, no creation date, and a fixed
font setup, so re-rendering the same CSV reproduces identical bytes.
"""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_SVG_RC = {
    "svg.hashsalt": "odr-dro",
    "svg.fonttype": "path",
    "figure.figsize": (6.0, 4.0),
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def _series(rows, column):
    """Per-method average of a CSV column keyed by problem size."""
    acc: dict[str, dict[int, list[float]]] = {}
    for row in rows:
        val = row[column]
        if val in ("-", "inf", "-inf"):
            continue
        acc.setdefault(row["Method"], {}).setdefault(int(row["Size"]), []).append(
            float(val))
    out = {}
    for method, by_size in sorted(acc.items()):
        sizes = sorted(by_size)
        out[method] = (sizes, [float(np.mean(by_size[s])) for s in sizes])
    return out


def _render(series, ylabel, title, path, logy=False):
    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots()
        for method, (sizes, vals) in series.items():
            ax.plot(sizes, vals, marker="o", label=method)
        ax.set_xlabel("size (m)")
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        if logy:
            ax.set_yscale("log")
        if series:
            ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def plot_gaps(rows: list[dict], path: str) -> None:
    series = _series(rows, "Gap1")
    for method, data in _series(rows, "Gap2").items():
        series.setdefault(method, data)
    for method, data in _series(rows, "IntervalGap").items():
        series.setdefault(f"{method} (interval)", data)
    _render(series, "relative gap (%)", "bound quality vs size", path)


def plot_times(rows: list[dict], path: str) -> None:
    _render(_series(rows, "Time"), "wall time (s)", "solve time vs size",
            path, logy=True)
