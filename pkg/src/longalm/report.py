"""Delimited output and the plain-text report for an experiment run.

Floats destined for CSV go through ``repr`` so identical runs produce
byte-identical files and re-loading loses nothing.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .experiment import (RunReport, SET_ALL, SET_NON_LDI, WITH_LIABILITIES,
                         cell_label)
from .strategies import catalogue_to_csv

_WEIGHT_DISPLAY_FLOOR = 1e-3


def _fmt(value: float) -> str:
    return repr(float(value))


def write_objective_csv(report: RunReport, path) -> Path:
    """One row per cell: gamma, strategy set, liability flag, risk."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gamma", "strategy_set", "liabilities", "rho"])
        for cell in report.cells:
            writer.writerow([_fmt(cell.gamma), cell.strategy_set,
                             cell.liabilities, _fmt(cell.rho)])
    return path


def write_weights_csv(cell, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "alpha"])
        for ident, weight in zip(cell.ids, cell.alpha):
            writer.writerow([int(ident), _fmt(weight)])
    return path


def write_topk_csv(cell, catalogue, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "id", "kind", "params", "rho"])
        for rank, (ident, rho) in enumerate(cell.ranked, start=1):
            spec = catalogue[ident]
            writer.writerow([rank, int(ident), spec.kind.value,
                             spec.describe(), _fmt(rho)])
    return path


def write_scatter_csv(cell, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "wealth", "bond_share"])
        for i, (w, s) in enumerate(zip(cell.scatter_wealth,
                                       cell.scatter_share)):
            writer.writerow([i, _fmt(w), _fmt(s)])
    return path


def format_report(report: RunReport) -> str:
    """Human-readable summary: objective grid, weights, rankings."""
    plan = report.plan
    n_ldi = sum(1 for s in report.catalogue if s.liability_driven)
    lines = []
    lines.append("Scenario-based ALM diversification report")
    lines.append("=" * 41)
    lines.append(f"scenarios: {report.n_scenarios}   horizon: {report.horizon}"
                 f"   seed: {plan.seed}   initial wealth: {plan.initial_wealth:g}")
    lines.append(f"catalogue: {len(report.catalogue)} strategies "
                 f"({len(report.catalogue) - n_ldi} non-LDI, {n_ldi} "
                 f"liability-driven)")
    lines.append("")

    lines.append("Optimal diversified risk by risk aversion")
    lines.append("-" * 41)
    header = f"{'':24s}" + "".join(f"{f'gamma={g:g}':>14s}" for g in plan.gammas)
    for mode in plan.liability_modes:
        mode_name = ("with liabilities" if mode == WITH_LIABILITIES
                     else "without liabilities")
        lines.append(f"[{mode_name}]")
        lines.append(header)
        for set_label in plan.strategy_sets:
            row = f"  {set_label:<22s}"
            for gamma in plan.gammas:
                cell = report.cell(gamma, set_label, mode)
                row += f"{cell.rho:>14.4f}" if cell else f"{'failed':>14s}"
            lines.append(row)
        if SET_ALL in plan.strategy_sets and SET_NON_LDI in plan.strategy_sets:
            row = f"  {'reduction (%)':<22s}"
            for gamma in plan.gammas:
                pct = report.reduction(gamma, mode)
                row += f"{pct:>14.3f}" if pct is not None else f"{'-':>14s}"
            lines.append(row)
        lines.append("")

    for cell in report.cells:
        mode_name = ("with" if cell.liabilities == WITH_LIABILITIES
                     else "without")
        lines.append(f"Cell {cell.label}  (gamma={cell.gamma:g}, "
                     f"{cell.strategy_set} strategies, {mode_name} "
                     f"liabilities): rho = {cell.rho:.6f}")
        shown = [(ident, weight) for ident, weight in
                 zip(cell.ids, cell.alpha) if weight >= _WEIGHT_DISPLAY_FLOOR]
        shown.sort(key=lambda iw: -iw[1])
        lines.append(f"  weights >= {_WEIGHT_DISPLAY_FLOOR:g}:")
        for ident, weight in shown:
            spec = report.catalogue[ident]
            lines.append(f"    {weight:8.4f}  #{ident:<4d} "
                         f"{spec.kind.value:<18s} {spec.describe()}")
        lines.append(f"  best {len(cell.ranked)} basis strategies:")
        for rank, (ident, rho) in enumerate(cell.ranked, start=1):
            spec = report.catalogue[ident]
            lines.append(f"    {rank}. rho={rho:10.4f}  #{ident:<4d} "
                         f"{spec.kind.value:<18s} {spec.describe()}")
        lines.append(f"  scatter: {cell.scatter_wealth.size} points, "
                     f"{cell.scatter_excluded} excluded (zero aggregate "
                     f"wealth)")
        lines.append("")

    if report.failures:
        lines.append("Failed cells")
        lines.append("-" * 12)
        for label, message in report.failures:
            lines.append(f"  {label}: {message}")
        lines.append("")
    return "\n".join(lines) + "\n"


def write_all(report: RunReport, out_dir, *, figures_note: bool = False
              ) -> list[Path]:
    """Write every delimited output plus the text report into a directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [write_objective_csv(report, out / "objective.csv")]
    for cell in report.cells:
        label = cell.label
        written.append(write_weights_csv(cell, out / f"weights_{label}.csv"))
        written.append(write_topk_csv(cell, report.catalogue,
                                      out / f"topk_{label}.csv"))
        written.append(write_scatter_csv(cell, out / f"scatter_{label}.csv"))
    catalogue_path = out / "catalogue.csv"
    catalogue_to_csv(report.catalogue, catalogue_path)
    written.append(catalogue_path)
    report_path = out / "report.txt"
    report_path.write_text(format_report(report))
    written.append(report_path)
    return written
