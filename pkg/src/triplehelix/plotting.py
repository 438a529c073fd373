"""Figures written next to the delimited outputs.

Uses the non-interactive Agg backend and strips PNG metadata so that
identical reports produce identical files.
"""

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 120,
}

SYNERGY = "#2b6a99"
REDUNDANCY = "#c0504d"


def figure_size(width=6.5, n_rows=None):
    golden_ratio = (math.sqrt(5) - 1.0) / 2.0
    if n_rows is None:
        return width, width * golden_ratio
    return width, max(2.5, 0.22 * n_rows + 1.2)


def _save(fig, path):
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def plot_contributions(report, path, top=40):
    """Horizontal bars of each group's contribution in mbit, largest synergy on top."""
    groups = list(report.groups)[:top]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figure_size(n_rows=len(groups)))
        values = [g.delta_t * 1000.0 for g in groups]
        colors = [SYNERGY if v < 0 else REDUNDANCY for v in values]
        y = range(len(groups))
        ax.barh(list(y), values, color=colors)
        ax.set_yticks(list(y))
        ax.set_yticklabels([g.label for g in groups])
        ax.invert_yaxis()
        ax.axvline(0, color="0.3", lw=0.6)
        ax.set_xlabel("contribution dT (mbit)")
        shown = "" if len(report.groups) <= top else f" (top {top} of {len(report.groups)})"
        ax.set_title(
            f"{report.filter_description}: T = {report.total_t * 1000:.2f} mbit, "
            f"T0 = {report.t0 * 1000:.2f} mbit{shown}"
        )
        fig.tight_layout()
        _save(fig, path)


def plot_histogram(hist, path, title, xlabel, rotate=False):
    """Bar chart of a ``{category: count}`` histogram."""
    labels = [str(k) for k in hist]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figure_size())
        ax.bar(range(len(labels)), list(hist.values()), color=SYNERGY)
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels, rotation=60 if rotate else 0, ha="right" if rotate else "center")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("number of firms")
        ax.set_title(title)
        fig.tight_layout()
        _save(fig, path)


def plot_profile(profile, outdir):
    """Year, size-class and province histograms; returns the written paths."""
    paths = []
    for name, hist, title, xlabel, rotate in (
        ("profile_years.png", profile.by_year, "Firms by year", "year", False),
        ("profile_sizes.png", profile.by_size_class, "Firms by size class", "employees", True),
        ("profile_provinces.png", profile.by_province, "Firms by province", "province", True),
    ):
        if not hist:
            continue
        path = outdir / name
        plot_histogram(hist, path, title, xlabel, rotate)
        paths.append(path)
    return paths
