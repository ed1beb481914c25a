"""Experiment orchestration: evaluate a catalogue, diversify, report.

One run generates (or receives) a scenario set, evaluates every
strategy's terminal wealth on it with and without the claim stream,
optimises diversification weights per risk-aversion level and strategy
set, and collects per-cell results — optimal weights, basis-strategy
rankings and mid-horizon allocation snapshots — into a ``RunReport``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import riskopt, strategies
from .config import ModelConfig
from .economy import ScenarioSet, generate_scenarios
from .errors import LongalmError
from .strategies import FloorPath, StrategyKind, StrategySpec

logger = logging.getLogger(__name__)

SET_ALL = "all"
SET_NON_LDI = "non-LDI"
WITH_LIABILITIES = "with"
WITHOUT_LIABILITIES = "without"


@dataclass
class ExperimentPlan:
    """What to run: risk aversions, strategy sets, liability modes."""

    gammas: tuple = (0.05, 0.1, 0.3, 0.5)
    strategy_sets: tuple = (SET_NON_LDI, SET_ALL)
    liability_modes: tuple = (WITH_LIABILITIES, WITHOUT_LIABILITIES)
    n_scenarios: int = 10_000
    seed: int = 2024
    initial_wealth: float = strategies.DEFAULT_INITIAL_WEALTH
    horizon: int = 30
    borrow_margin: float = strategies.DEFAULT_BORROW_MARGIN
    snapshot_period: int = 15
    top_k: int = 5
    opt_tol: float = 1e-8
    opt_max_iters: int = 100_000

    def __post_init__(self):
        if not self.gammas or any(g <= 0 for g in self.gammas):
            raise ValueError("gammas must be positive and nonempty")
        if not self.strategy_sets or any(
                s not in (SET_ALL, SET_NON_LDI) for s in self.strategy_sets):
            raise ValueError(f"strategy sets must come from "
                             f"{{{SET_NON_LDI!r}, {SET_ALL!r}}}")
        if not self.liability_modes or any(
                m not in (WITH_LIABILITIES, WITHOUT_LIABILITIES)
                for m in self.liability_modes):
            raise ValueError("liability modes must be 'with'/'without'")
        if self.n_scenarios < 1 or self.horizon < 0:
            raise ValueError("need n_scenarios >= 1 and horizon >= 0")
        if self.initial_wealth < 0:
            raise ValueError("initial wealth must be nonnegative")
        if not 0 <= self.snapshot_period:
            raise ValueError("snapshot period must be nonnegative")
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")


@dataclass
class CellResult:
    """Everything the report needs about one (gamma, set, mode) cell."""

    gamma: float
    strategy_set: str
    liabilities: str
    rho: float
    ids: np.ndarray            # global catalogue ids of the columns used
    alpha: np.ndarray          # optimal weights over those columns
    mixed_terminal: np.ndarray  # (n,) terminal wealth of the mixture
    ranked: list               # [(id, rho)] best basis strategies
    scatter_wealth: np.ndarray
    scatter_share: np.ndarray
    scatter_excluded: int

    @property
    def label(self) -> str:
        return cell_label(self.gamma, self.strategy_set, self.liabilities)


@dataclass
class RunReport:
    """Results of a full experiment run."""

    plan: ExperimentPlan
    catalogue: list
    cells: list = field(default_factory=list)
    reductions: list = field(default_factory=list)  # (gamma, mode, percent)
    failures: list = field(default_factory=list)    # (label, message)
    n_scenarios: int = 0
    horizon: int = 0

    def cell(self, gamma: float, strategy_set: str,
             liabilities: str) -> CellResult | None:
        for c in self.cells:
            if (c.gamma == gamma and c.strategy_set == strategy_set
                    and c.liabilities == liabilities):
                return c
        return None

    def reduction(self, gamma: float, liabilities: str) -> float | None:
        for g, mode, pct in self.reductions:
            if g == gamma and mode == liabilities:
                return pct
        return None


def cell_label(gamma: float, strategy_set: str, liabilities: str) -> str:
    set_slug = "all" if strategy_set == SET_ALL else "nonldi"
    liab_slug = "liab" if liabilities == WITH_LIABILITIES else "noliab"
    return f"g{gamma:g}_{set_slug}_{liab_slug}"


def _build_floors(specs, scns: ScenarioSet) -> dict[float, FloorPath]:
    """One discounted floor path per distinct CPPI rate in the catalogue."""
    rates = {s.r for s in specs if s.kind is StrategyKind.CPPI}
    if not rates:
        return {}
    cbar = strategies.median_claims(scns)
    return {r: strategies.cppi_floor(cbar, r) for r in rates}


def _evaluate_catalogue(specs, scns: ScenarioSet, w0: float,
                        borrow_margin: float, snapshot_period: int):
    """Terminal wealth per (scenario, strategy) plus snapshot arrays.

    Returns ``(W, snap_wealth, snap_bond)`` where the snapshots hold the
    wealth and five-year-bond holdings at the snapshot period (zeros if
    the period exceeds the horizon).
    """
    n, horizon = scns.n_scenarios, scns.horizon
    floors = _build_floors(specs, scns)
    terminal = np.empty((n, len(specs)))
    snap_wealth = np.zeros((n, len(specs)))
    snap_bond = np.zeros((n, len(specs)))
    take_snapshot = 0 <= snapshot_period <= horizon
    for i, spec in enumerate(specs):
        floor = floors.get(spec.r) if spec.kind is StrategyKind.CPPI else None
        batch = strategies.propagate_wealth_batch(
            spec, scns, w0=w0, borrow_margin=borrow_margin, floor=floor)
        terminal[:, i] = batch.wealth[:, -1]
        if take_snapshot:
            snap_wealth[:, i] = batch.wealth[:, snapshot_period]
            snap_bond[:, i] = batch.holdings[:, snapshot_period, 1]
    return terminal, snap_wealth, snap_bond


def _aggregate_snapshot(snap_wealth, snap_bond, alpha):
    """Per-scenario aggregate wealth and bond share of a weighted mixture.

    Scenarios whose aggregate wealth is exactly zero (or whose share is
    otherwise undefined) are excluded and counted separately.
    """
    wealth = snap_wealth @ alpha
    bond = snap_bond @ alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        share = bond / wealth
    ok = np.isfinite(share) & (wealth != 0.0)
    return wealth[ok], share[ok], int((~ok).sum())


def scatter_extract(specs, alpha, scns: ScenarioSet, period: int = 15,
                    w0: float = strategies.DEFAULT_INITIAL_WEALTH,
                    borrow_margin: float = strategies.DEFAULT_BORROW_MARGIN):
    """Mid-horizon (wealth, five-year-bond share) of a weighted mixture.

    Re-propagates the given strategies over the scenarios and aggregates
    holdings with the weights; returns ``(wealth, share, excluded)``
    with one point per scenario that has nonzero aggregate wealth.
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (len(specs),):
        raise ValueError("weights must match the number of strategies")
    if not 0 <= period <= scns.horizon:
        raise ValueError("snapshot period must lie inside the horizon")
    _, snap_wealth, snap_bond = _evaluate_catalogue(
        specs, scns, w0, borrow_margin, period)
    return _aggregate_snapshot(snap_wealth, snap_bond, alpha)


def run_experiment(plan: ExperimentPlan, model: ModelConfig, catalogue,
                   scenarios: ScenarioSet | None = None) -> RunReport:
    """Run the full experiment grid and collect a report.

    Scenarios are generated once from ``model`` (unless supplied) and
    the liability modes toggle the claim stream on the same paths.  A
    failed cell is recorded and skipped; the others proceed.
    """
    specs = list(catalogue)
    if not specs:
        raise ValueError("catalogue must contain at least one strategy")
    if scenarios is None:
        rng = np.random.default_rng(plan.seed)
        t0 = time.perf_counter()
        scenarios = generate_scenarios(
            model.initial_state, model.coefficients, plan.horizon,
            plan.n_scenarios, rng, sampling=model.simulation.sampling)
        logger.info("generated %d scenarios over %d periods in %.1fs",
                    plan.n_scenarios, plan.horizon, time.perf_counter() - t0)
    report = RunReport(plan=plan, catalogue=specs,
                       n_scenarios=scenarios.n_scenarios,
                       horizon=scenarios.horizon)
    snapshot_period = min(plan.snapshot_period, scenarios.horizon)
    non_ldi = np.array(strategies.non_ldi_subset(specs), dtype=int)
    all_ids = np.arange(len(specs))

    for mode in plan.liability_modes:
        mode_scns = (scenarios if mode == WITH_LIABILITIES
                     else scenarios.without_claims())
        t0 = time.perf_counter()
        terminal, snap_wealth, snap_bond = _evaluate_catalogue(
            specs, mode_scns, plan.initial_wealth, plan.borrow_margin,
            snapshot_period)
        logger.info("evaluated %d strategies (%s liabilities) in %.1fs",
                    len(specs), mode, time.perf_counter() - t0)

        for gamma in plan.gammas:
            solutions: dict[str, tuple[np.ndarray, np.ndarray]] = {}
            for set_label in plan.strategy_sets:
                ids = non_ldi if set_label == SET_NON_LDI else all_ids
                if ids.size == 0:
                    report.failures.append(
                        (cell_label(gamma, set_label, mode),
                         "strategy set is empty"))
                    continue
                try:
                    result = riskopt.optimize_weights(
                        terminal[:, ids], gamma, tol=plan.opt_tol,
                        max_iters=plan.opt_max_iters)
                except LongalmError as exc:
                    report.failures.append(
                        (cell_label(gamma, set_label, mode), str(exc)))
                    continue
                solutions[set_label] = (ids, result.alpha)

            # The non-LDI optimum is feasible for the full set; keep the
            # better of the two candidates so enlarging the catalogue can
            # never look worse through solver noise.  Both candidates are
            # valued through the same embedding for exact comparability.
            embedded: dict[str, np.ndarray] = {}
            for set_label, (ids, alpha) in solutions.items():
                full = np.zeros(len(specs))
                full[ids] = alpha
                embedded[set_label] = full
            if SET_ALL in embedded and SET_NON_LDI in embedded:
                value_all = riskopt.entropic_risk(
                    terminal @ embedded[SET_ALL], gamma)
                value_sub = riskopt.entropic_risk(
                    terminal @ embedded[SET_NON_LDI], gamma)
                if value_sub < value_all:
                    ids, _ = solutions[SET_NON_LDI]
                    solutions[SET_ALL] = (all_ids,
                                          embedded[SET_NON_LDI].copy())
                    embedded[SET_ALL] = embedded[SET_NON_LDI]

            for set_label, (ids, alpha) in solutions.items():
                mixed = terminal @ embedded[set_label]
                rho = riskopt.entropic_risk(mixed, gamma)
                ranked = riskopt.rank_strategies(
                    terminal[:, ids], gamma,
                    k=min(plan.top_k, ids.size), ids=ids)
                wealth_pts, share_pts, excluded = _aggregate_snapshot(
                    snap_wealth[:, ids], snap_bond[:, ids], alpha)
                report.cells.append(CellResult(
                    gamma=gamma, strategy_set=set_label, liabilities=mode,
                    rho=rho, ids=ids.copy(), alpha=np.asarray(alpha),
                    mixed_terminal=mixed, ranked=ranked,
                    scatter_wealth=wealth_pts, scatter_share=share_pts,
                    scatter_excluded=excluded))
            logger.info("gamma=%g (%s liabilities): %s", gamma, mode,
                        ", ".join(f"{lbl}: {riskopt.entropic_risk(terminal @ embedded[lbl], gamma):.4f}"
                                  for lbl in solutions))

    for mode in plan.liability_modes:
        for gamma in plan.gammas:
            sub = report.cell(gamma, SET_NON_LDI, mode)
            full = report.cell(gamma, SET_ALL, mode)
            if sub is None or full is None:
                continue
            denom = abs(sub.rho)
            if denom == 0.0:
                continue
            report.reductions.append(
                (gamma, mode, 100.0 * (sub.rho - full.rho) / denom))
    return report
