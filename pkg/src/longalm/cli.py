"""Command-line entry point: run the experiment grid and write outputs."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import config as cfg
from . import economy, figures, report as report_mod
from .errors import LongalmError
from .experiment import ExperimentPlan, run_experiment
from .strategies import build_catalogue

logger = logging.getLogger(__name__)


def _parse_gammas(raw: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in raw.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad gamma list: {raw!r}")
    if not values or any(g <= 0 for g in values):
        raise argparse.ArgumentTypeError("gammas must be positive")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="longalm",
        description="Diversify parametric investment strategies against "
                    "longevity-linked claims on simulated scenarios.")
    parser.add_argument("--config", type=Path, default=None,
                        help="model INI file (default: packaged calibration)")
    parser.add_argument("--catalogue", type=Path, default=None,
                        help="strategy grid INI file (default: packaged grids)")
    parser.add_argument("--scenarios", type=int, default=None, metavar="N",
                        help="number of scenarios (default: config value)")
    parser.add_argument("--seed", type=int, default=None,
                        help="RNG seed (default: config value)")
    parser.add_argument("--gammas", type=_parse_gammas, default=None,
                        metavar="LIST",
                        help="comma-separated risk aversions "
                             "(default: 0.05,0.1,0.3,0.5)")
    parser.add_argument("--out", type=Path, default=Path("out"),
                        help="output directory (default: ./out)")
    parser.add_argument("--load-scenarios", type=Path, default=None,
                        metavar="PATH",
                        help="reuse a persisted scenario CSV instead of "
                             "simulating")
    parser.add_argument("--save-scenarios", type=Path, default=None,
                        metavar="PATH",
                        help="persist the scenario set used for this run")
    parser.add_argument("--top-k", type=int, default=5, metavar="K",
                        help="basis strategies to rank per cell (default: 5)")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip rendering PNG figures next to the CSVs")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    try:
        model = (cfg.load_model_config(args.config) if args.config
                 else cfg.default_model_config())
        grids = (cfg.load_catalogue_config(args.catalogue) if args.catalogue
                 else cfg.default_catalogue_grids())
        sim = model.simulation
        scenarios = None
        if args.load_scenarios is not None:
            scenarios = economy.load_scenarios(args.load_scenarios)
            logger.info("loaded %d scenarios over %d periods from %s",
                        scenarios.n_scenarios, scenarios.horizon,
                        args.load_scenarios)
        plan = ExperimentPlan(
            gammas=args.gammas or ExperimentPlan.gammas,
            n_scenarios=(scenarios.n_scenarios if scenarios is not None
                         else (args.scenarios or sim.n_scenarios)),
            seed=args.seed if args.seed is not None else sim.seed,
            horizon=(scenarios.horizon if scenarios is not None
                     else sim.horizon),
            top_k=args.top_k)
        catalogue = build_catalogue(grids, horizon=plan.horizon)
        logger.info("catalogue: %d strategies", len(catalogue))

        if scenarios is None and args.save_scenarios is not None:
            scenarios = _regenerate(plan, model)
        result = run_experiment(plan, model, catalogue, scenarios=scenarios)

        args.out.mkdir(parents=True, exist_ok=True)
        if args.save_scenarios is not None:
            economy.save_scenarios(scenarios, args.save_scenarios)
            logger.info("scenarios saved to %s", args.save_scenarios)
        written = report_mod.write_all(result, args.out)
        if not args.no_figures:
            written += figures.render_report_figures(args.out)
        logger.info("wrote %d files to %s", len(written), args.out)
        for label, message in result.failures:
            logger.warning("cell %s failed: %s", label, message)
        return 1 if result.failures else 0
    except (LongalmError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _regenerate(plan: ExperimentPlan, model) -> economy.ScenarioSet:
    """Re-simulate the scenario set the runner used (same seed and order)."""
    import numpy as np

    rng = np.random.default_rng(plan.seed)
    return economy.generate_scenarios(
        model.initial_state, model.coefficients, plan.horizon,
        plan.n_scenarios, rng, sampling=model.simulation.sampling)


if __name__ == "__main__":
    sys.exit(main())
