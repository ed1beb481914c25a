"""Scenario-based asset-liability management for longevity-linked claims.

The package simulates joint mortality/economic scenarios, evaluates
parametric investment strategies against a longevity-linked claim
stream, and diversifies optimally across strategies under the entropic
risk measure.
"""

from .config import (ModelConfig, SimulationSettings, default_catalogue_grids,
                     default_model_config, load_catalogue_config,
                     load_model_config)
from .economy import (EconState, ModelCoefficients, Scenario, ScenarioSet,
                      YieldCurvePoint, asset_returns, generate_scenarios,
                      lhs_normals, load_scenarios, save_scenarios, step_state,
                      yields_from_state)
from .errors import (CatalogueError, ConfigError, ConvergenceError,
                     FitDegenerateError, LongalmError)
from .experiment import (CellResult, ExperimentPlan, RunReport, run_experiment,
                         scatter_extract)
from .mortality import (CohortState, RiskFactors, basis_phi, fit_risk_factors,
                        propagate_cohort, survival_index_path, survival_prob)
from .riskopt import (OptimizedWeights, diversified_objective, entropic_risk,
                      optimize_weights, rank_strategies)
from .strategies import (CatalogueGrids, FloorPath, Observation, StrategyKind,
                         StrategySpec, WealthPath, allocate, build_catalogue,
                         cppi_floor, median_claims, non_ldi_subset,
                         propagate_wealth, propagate_wealth_batch)

__version__ = "0.1.0"

__all__ = [
    "CatalogueError", "CatalogueGrids", "CellResult", "CohortState",
    "ConfigError", "ConvergenceError", "EconState", "ExperimentPlan",
    "FitDegenerateError", "FloorPath", "LongalmError", "ModelCoefficients",
    "ModelConfig", "Observation", "OptimizedWeights", "RiskFactors",
    "RunReport", "Scenario", "ScenarioSet", "SimulationSettings",
    "StrategyKind", "StrategySpec", "WealthPath", "YieldCurvePoint",
    "allocate", "asset_returns", "basis_phi", "build_catalogue", "cppi_floor",
    "default_catalogue_grids", "default_model_config", "diversified_objective",
    "entropic_risk", "fit_risk_factors", "generate_scenarios", "lhs_normals",
    "load_catalogue_config", "load_model_config", "load_scenarios",
    "median_claims", "non_ldi_subset", "optimize_weights", "propagate_cohort",
    "propagate_wealth", "propagate_wealth_batch", "rank_strategies",
    "run_experiment", "save_scenarios",
    "scatter_extract", "step_state", "survival_index_path", "survival_prob",
    "yields_from_state",
]
