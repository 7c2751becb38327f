"""Static figures for the report path (Agg backend, PNG files).

Every figure here is also emitted as plot-ready CSV by the CLI; the PNGs
are a convenience view of the same numbers.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
COLORS = ["#08589e", "#d95f02", "#1b9e77", "#7570b3", "#e7298a", "#66a61e"]

STYLE = {
    "axes.prop_cycle": matplotlib.cycler(color=COLORS),
    "axes.labelsize": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 8,
    "font.family": "sans-serif",
    "font.sans-serif": ["DejaVu Sans"],
    "legend.fontsize": 7,
    "legend.frameon": False,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 3,
    "figure.dpi": 150,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def fig_size(width: float = 4.5, ratio: float = GOLDEN) -> tuple[float, float]:
    return width, width * ratio


def _new(width=4.5, ratio=GOLDEN):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=fig_size(width, ratio))
    return fig, ax


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(STYLE):
        # no timestamp or version metadata, so reruns give identical bytes
        fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)
    return path


def rfe_curve(traces: dict[str, tuple], path) -> Path:
    """MAE against active feature count.

    ``traces`` maps a label (e.g. fold subject) to ``(dims, maes)``; the
    mean over traces of equal length is drawn in bold.
    """
    with plt.rc_context(STYLE):
        fig, ax = _new()
        curves = []
        for label, (dims, maes) in traces.items():
            ax.plot(dims, maes, color="0.75", lw=0.7)
            curves.append((tuple(dims), np.asarray(maes, dtype=float)))
        if curves and len({c[0] for c in curves}) == 1:
            dims = np.asarray(curves[0][0])
            mean = np.mean([c[1] for c in curves], axis=0)
            ax.plot(dims, mean, color=COLORS[0], lw=1.6, label="mean over folds")
            k = int(np.argmin(mean))
            ax.plot(dims[k], mean[k], "o", color=COLORS[1], label=f"minimum ({dims[k]} features)")
            ax.legend()
        ax.set_xlabel("number of features")
        ax.set_ylabel("validation MAE (deg)")
    return _save(fig, path)


def per_subject_mae(subjects, maes, path, overall: float | None = None) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = _new()
        x = np.arange(len(subjects))
        ax.bar(x, maes, color=COLORS[0], width=0.7)
        if overall is not None:
            ax.axhline(overall, color=COLORS[1], ls="--", lw=1, label=f"mean {overall:.2f}")
            ax.legend()
        ax.set_xticks(x)
        ax.set_xticklabels(subjects, rotation=45, ha="right")
        ax.set_ylabel("test MAE (deg)")
    return _save(fig, path)


def yaw_scatter(true_yaw, est_yaw, path, label="estimate") -> Path:
    with plt.rc_context(STYLE):
        fig, ax = _new(3.5, 1.0)
        ax.plot(true_yaw, est_yaw, ".", alpha=0.5, label=label)
        lim = [min(np.min(true_yaw), np.min(est_yaw)), max(np.max(true_yaw), np.max(est_yaw))]
        ax.plot(lim, lim, color="0.4", lw=0.8)
        ax.set_xlabel("true yaw (deg)")
        ax.set_ylabel("estimated yaw (deg)")
    return _save(fig, path)


def region_timeline(times, yaw, refs, half_width, path) -> Path:
    """Yaw over time with the two interviewer regions shaded."""
    with plt.rc_context(STYLE):
        fig, ax = _new(6.0, 0.35)
        for a, c, name in zip(refs, COLORS[1:3], ("I1", "I2")):
            ax.axhspan(a - half_width, a + half_width, color=c, alpha=0.2, lw=0, label=name)
        ax.plot(times, yaw, color=COLORS[0], lw=0.8)
        ax.set_xlabel("time (s)")
        ax.set_ylabel("head yaw (deg)")
        ax.legend(loc="upper right", ncol=2)
    return _save(fig, path)


def group_bars(rows: dict[str, tuple[float, float]], groups: tuple[str, str], path) -> Path:
    """Side-by-side group means for each named statistic."""
    names = list(rows)
    with plt.rc_context(STYLE):
        fig, ax = _new(6.0, 0.5)
        y = np.arange(len(names))
        m1 = [rows[n][0] for n in names]
        m2 = [rows[n][1] for n in names]
        ax.barh(y - 0.2, m1, height=0.4, label=groups[0])
        ax.barh(y + 0.2, m2, height=0.4, label=groups[1])
        ax.set_yticks(y)
        ax.set_yticklabels(names)
        ax.invert_yaxis()
        ax.legend()
    return _save(fig, path)
