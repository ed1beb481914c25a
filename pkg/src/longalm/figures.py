"""Render figures from the delimited outputs of a run.

Reads the CSV files back rather than any in-memory state, so a figure
always shows exactly what was written to disk.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_DPI = 150


def render_scatter(csv_path, out_path) -> Path:
    """Scatter of mid-horizon bond share against wealth for one cell."""
    csv_path, out_path = Path(csv_path), Path(out_path)
    wealth, share = [], []
    with csv_path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            wealth.append(float(row["wealth"]))
            share.append(float(row["bond_share"]))
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.scatter(wealth, share, s=4, alpha=0.25, linewidths=0, color="#1f5fa8")
    ax.set_xlabel("aggregate wealth at the snapshot period")
    ax.set_ylabel("share in five-year bonds")
    ax.set_title(csv_path.stem.replace("scatter_", "cell "))
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=_DPI)
    plt.close(fig)
    return out_path


def render_objective(csv_path, out_path) -> Path:
    """Risk and LDI reduction against risk aversion, per liability mode."""
    csv_path, out_path = Path(csv_path), Path(out_path)
    rho = {}
    with csv_path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            key = (float(row["gamma"]), row["strategy_set"],
                   row["liabilities"])
            rho[key] = float(row["rho"])
    gammas = sorted({g for g, _, _ in rho})
    series = defaultdict(list)
    for g in gammas:
        for (gg, set_label, mode), value in rho.items():
            if gg == g:
                series[(set_label, mode)].append((g, value))

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.5, 4.2))
    for (set_label, mode), points in sorted(series.items()):
        points.sort()
        xs, ys = zip(*points)
        style = "-" if mode == "with" else "--"
        ax1.plot(xs, ys, style, marker="o", markersize=4,
                 label=f"{set_label}, {mode} liabilities")
    ax1.set_xlabel("risk aversion")
    ax1.set_ylabel("optimal diversified risk")
    ax1.grid(alpha=0.3)
    ax1.legend(fontsize=8)

    for mode in ("with", "without"):
        xs, ys = [], []
        for g in gammas:
            sub = rho.get((g, "non-LDI", mode))
            full = rho.get((g, "all", mode))
            if sub is not None and full is not None and sub != 0:
                xs.append(g)
                ys.append(100.0 * (sub - full) / abs(sub))
        if xs:
            ax2.plot(xs, ys, marker="o", markersize=4,
                     label=f"{mode} liabilities")
    ax2.set_xlabel("risk aversion")
    ax2.set_ylabel("risk reduction from LDI strategies (%)")
    ax2.grid(alpha=0.3)
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=_DPI)
    plt.close(fig)
    return out_path


def render_report_figures(out_dir) -> list[Path]:
    """Render every figure the delimited outputs in ``out_dir`` support."""
    out = Path(out_dir)
    rendered = []
    objective = out / "objective.csv"
    if objective.exists():
        rendered.append(render_objective(objective, out / "objective.png"))
    for scatter in sorted(out.glob("scatter_*.csv")):
        rendered.append(render_scatter(scatter,
                                       scatter.with_suffix(".png")))
    return rendered
