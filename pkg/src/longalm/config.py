"""Config-file parsing for the scenario model and the strategy catalogue.

Both files are INI-style.  The model file carries the time-series
coefficients, the shock covariance (row-major, one row per key), the
initial state and simulation settings.  The catalogue file holds one
section per strategy family with parameter grids; list values are
whitespace-separated, vector-valued grids put one vector per line, and
``linspace <start> <stop> <count>`` expands to an evenly spaced grid.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .economy import STATE_DIM, STATE_FIELDS, EconState, ModelCoefficients
from .errors import ConfigError
from .strategies import CatalogueGrids

_COEFF_KEYS = ("a11", "a33", "a34", "a45", "a46", "a55", "a66", "a77")


@dataclass
class SimulationSettings:
    """Scenario-count, horizon, seed and sampling scheme defaults."""

    n_scenarios: int
    horizon: int
    seed: int
    sampling: str = "lhs"

    def __post_init__(self):
        if self.n_scenarios < 1:
            raise ConfigError("simulation n must be at least 1")
        if self.horizon < 0:
            raise ConfigError("simulation horizon must be nonnegative")
        if self.seed < 0:
            raise ConfigError("simulation seed must be nonnegative")
        if self.sampling not in ("lhs", "iid"):
            raise ConfigError(f"unknown sampling scheme {self.sampling!r}")


@dataclass
class ModelConfig:
    coefficients: ModelCoefficients
    initial_state: EconState
    simulation: SimulationSettings


def _parser(path: Path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with path.open() as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parser


def _get_float(section, key: str, where: str) -> float:
    if key not in section:
        raise ConfigError(f"missing key {key!r} in [{where}]")
    try:
        return float(section[key])
    except ValueError as exc:
        raise ConfigError(f"bad float for {key!r} in [{where}]: "
                          f"{section[key]!r}") from exc


def _float_list(raw: str, where: str) -> list[float]:
    tokens = raw.replace(",", " ").split()
    if tokens and tokens[0].lower() == "linspace":
        if len(tokens) != 4:
            raise ConfigError(f"linspace in [{where}] needs start stop count")
        try:
            start, stop, count = float(tokens[1]), float(tokens[2]), int(tokens[3])
        except ValueError as exc:
            raise ConfigError(f"bad linspace in [{where}]: {raw!r}") from exc
        if count < 1:
            raise ConfigError(f"linspace count in [{where}] must be >= 1")
        return [float(v) for v in np.linspace(start, stop, count)]
    try:
        return [float(v) for v in tokens]
    except ValueError as exc:
        raise ConfigError(f"bad number list in [{where}]: {raw!r}") from exc


def _vector_rows(raw: str, where: str, width: int) -> list[tuple[float, ...]]:
    rows = []
    for line in raw.splitlines():
        if not line.strip():
            continue
        values = _float_list(line, where)
        if len(values) != width:
            raise ConfigError(f"each row in [{where}] needs {width} values, "
                              f"got {line.strip()!r}")
        rows.append(tuple(values))
    return rows


def load_model_config(path) -> ModelConfig:
    """Parse a model INI file and validate it into typed objects."""
    path = Path(path)
    parser = _parser(path)
    for name in ("coefficients", "initial_state", "shock_cov", "simulation"):
        if not parser.has_section(name):
            raise ConfigError(f"{path}: missing section [{name}]")

    coeff = parser["coefficients"]
    drift = {key: _get_float(coeff, key, "coefficients") for key in _COEFF_KEYS}
    intercepts = np.array([_get_float(coeff, f"b{i}", "coefficients")
                           for i in range(1, STATE_DIM + 1)])

    cov_section = parser["shock_cov"]
    rows = []
    for i in range(1, STATE_DIM + 1):
        key = f"row{i}"
        if key not in cov_section:
            raise ConfigError(f"{path}: missing {key!r} in [shock_cov]")
        values = _float_list(cov_section[key], "shock_cov")
        if len(values) != STATE_DIM:
            raise ConfigError(f"{path}: {key!r} must hold {STATE_DIM} values")
        rows.append(values)
    shock_cov = np.array(rows)

    state_section = parser["initial_state"]
    state = EconState(**{name: _get_float(state_section, name, "initial_state")
                         for name in STATE_FIELDS})

    sim = parser["simulation"]
    horizon_key = "horizon" if "horizon" in sim else "t"
    try:
        settings = SimulationSettings(
            n_scenarios=int(_get_float(sim, "n", "simulation")),
            horizon=int(_get_float(sim, horizon_key, "simulation")),
            seed=int(_get_float(sim, "seed", "simulation")),
            sampling=sim.get("sampling", "lhs").strip())
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: bad [simulation] entry: {exc}") from exc

    try:
        coefficients = ModelCoefficients(intercepts=intercepts,
                                         shock_cov=shock_cov, **drift)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return ModelConfig(coefficients=coefficients, initial_state=state,
                       simulation=settings)


def load_catalogue_config(path) -> CatalogueGrids:
    """Parse a catalogue INI file into per-family grids."""
    path = Path(path)
    parser = _parser(path)

    def section(name):
        if not parser.has_section(name):
            raise ConfigError(f"{path}: missing section [{name}]")
        return parser[name]

    def floats(sec, key, name, required=True):
        if key not in sec or not sec[key].strip():
            if required:
                raise ConfigError(f"{path}: missing {key!r} in [{name}]")
            return []
        return _float_list(sec[key], name)

    def vectors(sec, key, name, width, default=None):
        if key not in sec or not sec[key].strip():
            if default is None:
                raise ConfigError(f"{path}: missing {key!r} in [{name}]")
            return default
        return _vector_rows(sec[key], name, width)

    def single_vector(sec, key, name, width, default):
        rows = vectors(sec, key, name, width, default=[tuple(default)])
        if len(rows) != 1:
            raise ConfigError(f"{path}: {key!r} in [{name}] must be one vector")
        return rows[0]

    bh = section("buy_and_hold")
    fp = section("fixed_proportions")
    tdf = section("target_date")
    cp = section("cppi")
    ts = section("term_spread")
    cs = section("credit_spread")
    si = section("survival_index")
    we = section("wealth")

    cppi_m = floats(cp, "m", "cppi", required=False)
    cppi_r = floats(cp, "r", "cppi", required=False)
    return CatalogueGrids(
        buy_and_hold=vectors(bh, "pi", "buy_and_hold", 4, default=[]),
        fp_equity_share=floats(fp, "equity_share", "fixed_proportions"),
        fp_bond_mix=vectors(fp, "bond_mix", "fixed_proportions", 3),
        tdf_a=floats(tdf, "a", "target_date"),
        tdf_b=floats(tdf, "b", "target_date"),
        tdf_risky_mix=vectors(tdf, "risky_mix", "target_date", 4,
                              default=[(0.0, 0.0, 0.0, 1.0)]),
        tdf_safe_mix=vectors(tdf, "safe_mix", "target_date", 4,
                             default=[(0.0, 1.0, 0.0, 0.0)]),
        cppi_m=cppi_m,
        cppi_r=cppi_r,
        cppi_risky_mix=vectors(cp, "risky_mix", "cppi", 4,
                               default=[(0.0, 0.0, 0.0, 1.0)]),
        cppi_safe_mix=vectors(cp, "safe_mix", "cppi", 4,
                              default=[(0.0, 1.0, 0.0, 0.0)]),
        term_a=floats(ts, "a", "term_spread"),
        term_b=floats(ts, "b", "term_spread"),
        credit_a=floats(cs, "a", "credit_spread"),
        credit_b=floats(cs, "b", "credit_spread"),
        survival_a=floats(si, "a", "survival_index"),
        survival_target_mix=single_vector(si, "target_mix", "survival_index",
                                          4, (0.0, 1.0, 0.0, 0.0)),
        survival_rest_mix=single_vector(si, "rest_mix", "survival_index",
                                        4, (0.0, 0.0, 0.0, 1.0)),
        wealth_a=floats(we, "a", "wealth"),
        wealth_target_mix=single_vector(we, "target_mix", "wealth",
                                        4, (0.0, 1.0, 0.0, 0.0)),
        wealth_rest_mix=single_vector(we, "rest_mix", "wealth",
                                      4, (0.0, 0.0, 0.0, 1.0)),
    )


def _data_path(name: str) -> Path:
    return Path(str(resources.files("longalm").joinpath("data", name)))


def default_model_path() -> Path:
    return _data_path("model.ini")


def default_catalogue_path() -> Path:
    return _data_path("catalogue.ini")


def default_model_config() -> ModelConfig:
    """The calibration shipped with the package (see the data file notes)."""
    return load_model_config(default_model_path())


def default_catalogue_grids() -> CatalogueGrids:
    """The strategy grids shipped with the package."""
    return load_catalogue_config(default_catalogue_path())
