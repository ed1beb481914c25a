"""Joint economic and mortality scenario generation.

An eight-dimensional state (three mortality logits, log GDP per capita,
two log yield spreads, the log short yield and log equity level) follows
a first-order linear time series with correlated Gaussian shocks.  The
module maps states to a three-point yield curve, converts consecutive
curve points into gross asset returns for four asset classes (money
market, long government bonds, corporate bonds, equity), and bundles
everything into scenario sets with longevity-linked claim streams.

State vector layout (used everywhere arrays appear)::

    0  v1               logit survival probability at age 18
    1  v2               logit survival probability at age 50
    2  v3               logit survival probability at age 100
    3  log_gdp          log real GDP per capita
    4  term_spread      log five-year yield minus log one-year yield
    5  credit_spread    log of (log corporate yield minus log five-year yield)
    6  log_short_yield  log one-year yield
    7  log_equity       log total-return equity index
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import norm

from . import mortality

STATE_DIM = 8
STATE_FIELDS = ("v1", "v2", "v3", "log_gdp", "term_spread", "credit_spread",
                "log_short_yield", "log_equity")

# Bond durations in years for the money-market, long-government and
# corporate legs; equity carries no duration.
DURATIONS = (1.0, 5.0, 5.0)

SCENARIO_CSV_HEADER = ("scenario", "t", "R1", "R2", "R3", "R4",
                       "claim", "S", "sT", "sC", "y1")


@dataclass(frozen=True)
class EconState:
    """One point of the joint economic/mortality state."""

    v1: float
    v2: float
    v3: float
    log_gdp: float
    term_spread: float
    credit_spread: float
    log_short_yield: float
    log_equity: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError("state components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in STATE_FIELDS])

    @classmethod
    def from_array(cls, arr) -> "EconState":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (STATE_DIM,):
            raise ValueError(f"state vector must have shape ({STATE_DIM},)")
        return cls(*map(float, arr))

    def risk_factors(self) -> mortality.RiskFactors:
        return mortality.RiskFactors(self.v1, self.v2, self.v3)


def psd_factor(cov) -> np.ndarray:
    """Factor ``L`` with ``L @ L.T == cov`` for a symmetric PSD matrix.

    Plain Cholesky when the matrix is positive definite; an eigenvalue
    square root otherwise, so that singular covariances (including the
    all-zero matrix used for deterministic runs) still factor.  Raises
    on asymmetric or indefinite input.
    """
    c = np.asarray(cov, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("covariance must be a square matrix")
    if not np.all(np.isfinite(c)):
        raise ValueError("covariance must be finite")
    scale = max(float(np.abs(c).max()), 1.0)
    if float(np.abs(c - c.T).max()) > 1e-9 * scale:
        raise ValueError("covariance must be symmetric")
    c = 0.5 * (c + c.T)
    try:
        return np.linalg.cholesky(c)
    except np.linalg.LinAlgError:
        eigval, eigvec = np.linalg.eigh(c)
        if eigval.min() < -1e-10 * scale:
            raise ValueError("covariance is not positive semidefinite")
        return eigvec * np.sqrt(np.clip(eigval, 0.0, None))


@dataclass
class ModelCoefficients:
    """Drift terms and shock covariance of the eight-equation system.

    The sparse drift couplings follow the model's causal structure: the
    old-age mortality logit reacts to GDP, GDP growth reacts to the two
    spreads, and the remaining equations are autonomous AR(1) or random
    walks.  ``intercepts`` holds the eight constant terms in state-vector
    order; ``shock_cov`` is the one-period covariance of the Gaussian
    shocks.
    """

    a11: float          # v1 mean reversion
    a33: float          # v3 mean reversion
    a34: float          # v3 response to log GDP
    a45: float          # GDP-growth response to the term spread
    a46: float          # GDP-growth response to the credit spread
    a55: float          # term-spread mean reversion
    a66: float          # credit-spread mean reversion
    a77: float          # short-yield mean reversion
    intercepts: np.ndarray
    shock_cov: np.ndarray
    delta_t: float = 1.0

    def __post_init__(self):
        self.intercepts = np.asarray(self.intercepts, dtype=float)
        if self.intercepts.shape != (STATE_DIM,):
            raise ValueError(f"intercepts must have shape ({STATE_DIM},)")
        self.shock_cov = np.asarray(self.shock_cov, dtype=float)
        if self.shock_cov.shape != (STATE_DIM, STATE_DIM):
            raise ValueError(
                f"shock covariance must be {STATE_DIM}x{STATE_DIM}")
        coeffs = [self.a11, self.a33, self.a34, self.a45, self.a46,
                  self.a55, self.a66, self.a77]
        if not np.all(np.isfinite(coeffs + [self.delta_t])):
            raise ValueError("coefficients must be finite")
        if self.delta_t <= 0:
            raise ValueError("delta_t must be positive")
        # Validates symmetry and positive semidefiniteness up front.
        self._shock_factor = psd_factor(self.shock_cov)

    def shock_factor(self) -> np.ndarray:
        return self._shock_factor

    def drift_matrix(self) -> np.ndarray:
        a = np.zeros((STATE_DIM, STATE_DIM))
        a[0, 0] = self.a11
        a[2, 2] = self.a33
        a[2, 3] = self.a34
        a[3, 4] = self.a45
        a[3, 5] = self.a46
        a[4, 4] = self.a55
        a[5, 5] = self.a66
        a[6, 6] = self.a77
        return a


def step_states(states: np.ndarray, coeffs: ModelCoefficients,
                shocks: np.ndarray) -> np.ndarray:
    """One period of the linear system for a batch of state rows."""
    s = np.asarray(states, dtype=float)
    e = np.asarray(shocks, dtype=float)
    if s.shape[-1] != STATE_DIM or e.shape != s.shape:
        raise ValueError("states and shocks must be (..., 8) with equal shape")
    return s + s @ coeffs.drift_matrix().T + coeffs.intercepts + e


def step_state(state: EconState, coeffs: ModelCoefficients,
               shock) -> EconState:
    """Advance a single state one period given its shock vector."""
    new = step_states(state.as_array()[None, :], coeffs,
                      np.asarray(shock, dtype=float)[None, :])
    return EconState.from_array(new[0])


@dataclass(frozen=True)
class YieldCurvePoint:
    """Annualised one-year, five-year and corporate yields (decimals)."""

    one_year: float
    five_year: float
    corporate: float
    durations: tuple[float, float, float] = DURATIONS

    def __post_init__(self):
        ys = (self.one_year, self.five_year, self.corporate)
        if not all(np.isfinite(ys)) or min(ys) <= 0:
            raise ValueError("yields must be finite and positive")


def yields_from_state(state: EconState) -> YieldCurvePoint:
    """Decode the log-yield state components into a curve point.

    The corporate yield sits above the five-year yield by
    ``exp(credit_spread)`` in log-yield space, so it is always the
    highest of the three.
    """
    log_y1 = state.log_short_yield
    log_y2 = log_y1 + state.term_spread
    log_y3 = log_y2 + np.exp(state.credit_spread)
    return YieldCurvePoint(float(np.exp(log_y1)), float(np.exp(log_y2)),
                           float(np.exp(log_y3)))


def encode_yields(one_year: float, five_year: float,
                  corporate: float) -> tuple[float, float, float]:
    """Inverse of :func:`yields_from_state` for the three yield fields.

    Returns ``(log_short_yield, term_spread, credit_spread)``; requires
    ``corporate > five_year`` and positive yields.
    """
    if min(one_year, five_year, corporate) <= 0:
        raise ValueError("yields must be positive")
    if corporate <= five_year:
        raise ValueError("corporate yield must exceed the five-year yield")
    log_y1 = np.log(one_year)
    log_y2 = np.log(five_year)
    log_y3 = np.log(corporate)
    return float(log_y1), float(log_y2 - log_y1), float(np.log(log_y3 - log_y2))


def _yield_columns(states: np.ndarray) -> np.ndarray:
    """(n, 3) matrix of decoded yields for a batch of state rows."""
    log_y1 = states[:, 6]
    log_y2 = log_y1 + states[:, 4]
    log_y3 = log_y2 + np.exp(states[:, 5])
    return np.exp(np.column_stack([log_y1, log_y2, log_y3]))


def asset_returns(prev: YieldCurvePoint, curr: YieldCurvePoint,
                  prev_log_equity: float, curr_log_equity: float,
                  delta_t: float = 1.0) -> np.ndarray:
    """Gross one-period returns of the four asset classes.

    Bond legs earn the start-of-period yield and a duration-scaled
    capital loss on the change of their own discounting yield; the
    corporate leg carries the five-year government yield with the
    corporate-yield duration term.  Equity is the exponentiated change
    of the log index.
    """
    d1, d2, d3 = DURATIONS
    r1 = np.exp(prev.one_year * delta_t - d1 * (curr.one_year - prev.one_year))
    r2 = np.exp(prev.five_year * delta_t - d2 * (curr.five_year - prev.five_year))
    r3 = np.exp(prev.five_year * delta_t - d3 * (curr.corporate - prev.corporate))
    r4 = np.exp(curr_log_equity - prev_log_equity)
    return np.array([r1, r2, r3, r4])


def lhs_normals(n: int, dim: int, cov, rng: np.random.Generator) -> np.ndarray:
    """Latin hypercube sample of ``n`` correlated Gaussian vectors.

    Each dimension is split into ``n`` equiprobable strata; one point is
    drawn per stratum through the inverse normal CDF with a uniform
    jitter inside the stratum, the strata are permuted independently per
    dimension, and the rows are coloured by a factor of ``cov``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    factor = psd_factor(cov)
    if factor.shape != (dim, dim):
        raise ValueError("covariance dimension mismatch")
    z = np.empty((n, dim))
    for j in range(dim):
        strata = rng.permutation(n)
        u = (strata + rng.random(n)) / n
        np.clip(u, 1e-15, 1.0 - 1e-15, out=u)
        z[:, j] = norm.ppf(u)
    return z @ factor.T


def iid_normals(n: int, dim: int, cov, rng: np.random.Generator) -> np.ndarray:
    """Plain i.i.d. Gaussian sample with covariance ``cov``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    factor = psd_factor(cov)
    if factor.shape != (dim, dim):
        raise ValueError("covariance dimension mismatch")
    return rng.standard_normal((n, dim)) @ factor.T


@dataclass
class Scenario:
    """One sampled path: per-period returns plus observable processes.

    ``returns[t-1]`` holds the gross returns over period ``t`` (from
    ``t-1`` to ``t``); the remaining arrays are indexed ``0..T``.
    """

    returns: np.ndarray         # (T, 4)
    claims: np.ndarray          # (T+1,)  c_0 unused by wealth recursions
    survival: np.ndarray        # (T+1,)
    term_spread: np.ndarray     # (T+1,)
    credit_spread: np.ndarray   # (T+1,)
    log_short_yield: np.ndarray  # (T+1,)

    def __post_init__(self):
        t = self.returns.shape[0]
        if self.returns.ndim != 2 or self.returns.shape[1] != 4:
            raise ValueError("returns must have shape (T, 4)")
        for name in ("claims", "survival", "term_spread", "credit_spread",
                     "log_short_yield"):
            if getattr(self, name).shape != (t + 1,):
                raise ValueError(f"{name} must have shape (T+1,)")

    @property
    def horizon(self) -> int:
        return self.returns.shape[0]


@dataclass
class ScenarioSet:
    """A batch of scenarios stored column-wise for vectorised evaluation."""

    returns: np.ndarray         # (n, T, 4)
    claims: np.ndarray          # (n, T+1)
    survival: np.ndarray        # (n, T+1)
    term_spread: np.ndarray     # (n, T+1)
    credit_spread: np.ndarray   # (n, T+1)
    log_short_yield: np.ndarray  # (n, T+1)

    def __post_init__(self):
        n, t = self.returns.shape[0], self.returns.shape[1]
        if self.returns.ndim != 3 or self.returns.shape[2] != 4:
            raise ValueError("returns must have shape (n, T, 4)")
        for name in ("claims", "survival", "term_spread", "credit_spread",
                     "log_short_yield"):
            if getattr(self, name).shape != (n, t + 1):
                raise ValueError(f"{name} must have shape (n, T+1)")

    @property
    def n_scenarios(self) -> int:
        return self.returns.shape[0]

    @property
    def horizon(self) -> int:
        return self.returns.shape[1]

    def __len__(self) -> int:
        return self.n_scenarios

    def __getitem__(self, k: int) -> Scenario:
        return Scenario(self.returns[k], self.claims[k], self.survival[k],
                        self.term_spread[k], self.credit_spread[k],
                        self.log_short_yield[k])

    def without_claims(self) -> "ScenarioSet":
        """Same paths with the claim stream zeroed (survival untouched)."""
        return ScenarioSet(self.returns, np.zeros_like(self.claims),
                           self.survival, self.term_spread,
                           self.credit_spread, self.log_short_yield)


def generate_scenarios(initial_state: EconState, coeffs: ModelCoefficients,
                       horizon: int, n: int, rng: np.random.Generator,
                       sampling: str = "lhs",
                       start_age: int = 65) -> ScenarioSet:
    """Simulate ``n`` joint paths over ``horizon`` periods.

    All paths start from the same state.  One shock row per (scenario,
    period) is drawn — stratified per period under ``lhs`` sampling —
    and claims equal the cohort survival index of a ``start_age`` year
    old cohort with unit initial claim level.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if n < 1:
        raise ValueError("need at least one scenario")
    if sampling not in ("lhs", "iid"):
        raise ValueError(f"unknown sampling scheme {sampling!r}")
    draw = lhs_normals if sampling == "lhs" else iid_normals

    states = np.repeat(initial_state.as_array()[None, :], n, axis=0)
    returns = np.empty((n, horizon, 4))
    term_spread = np.empty((n, horizon + 1))
    credit_spread = np.empty((n, horizon + 1))
    log_short_yield = np.empty((n, horizon + 1))
    factors = np.empty((n, horizon, 3))

    term_spread[:, 0] = states[:, 4]
    credit_spread[:, 0] = states[:, 5]
    log_short_yield[:, 0] = states[:, 6]

    yields_prev = _yield_columns(states)
    d1, d2, d3 = DURATIONS
    for t in range(1, horizon + 1):
        shocks = draw(n, STATE_DIM, coeffs.shock_cov, rng)
        new_states = step_states(states, coeffs, shocks)
        yields_new = _yield_columns(new_states)
        dt = coeffs.delta_t
        returns[:, t - 1, 0] = np.exp(yields_prev[:, 0] * dt
                                      - d1 * (yields_new[:, 0] - yields_prev[:, 0]))
        returns[:, t - 1, 1] = np.exp(yields_prev[:, 1] * dt
                                      - d2 * (yields_new[:, 1] - yields_prev[:, 1]))
        returns[:, t - 1, 2] = np.exp(yields_prev[:, 1] * dt
                                      - d3 * (yields_new[:, 2] - yields_prev[:, 2]))
        returns[:, t - 1, 3] = np.exp(new_states[:, 7] - states[:, 7])
        factors[:, t - 1, :] = new_states[:, :3]
        term_spread[:, t] = new_states[:, 4]
        credit_spread[:, t] = new_states[:, 5]
        log_short_yield[:, t] = new_states[:, 6]
        states, yields_prev = new_states, yields_new

    survival = (mortality.survival_index_paths(factors, start_age=start_age)
                if horizon else np.ones((n, 1)))
    return ScenarioSet(returns=returns, claims=survival.copy(),
                       survival=survival, term_spread=term_spread,
                       credit_spread=credit_spread,
                       log_short_yield=log_short_yield)


def save_scenarios(scns: ScenarioSet, path) -> None:
    """Write a scenario set as CSV with full round-trip precision.

    Floats are serialised with ``repr`` so reading the file back
    reproduces bit-identical arrays.  Return columns are empty at
    ``t = 0`` where no period return exists.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCENARIO_CSV_HEADER)
        for k in range(scns.n_scenarios):
            for t in range(scns.horizon + 1):
                row = [str(k), str(t)]
                if t == 0:
                    row += ["", "", "", ""]
                else:
                    row += [repr(float(v)) for v in scns.returns[k, t - 1]]
                row += [repr(float(scns.claims[k, t])),
                        repr(float(scns.survival[k, t])),
                        repr(float(scns.term_spread[k, t])),
                        repr(float(scns.credit_spread[k, t])),
                        repr(float(scns.log_short_yield[k, t]))]
                writer.writerow(row)


def load_scenarios(path) -> ScenarioSet:
    """Read a scenario CSV written by :func:`save_scenarios`."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SCENARIO_CSV_HEADER:
            raise ValueError(
                f"{path}: expected header {','.join(SCENARIO_CSV_HEADER)}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")

    n = int(rows[-1][0]) + 1
    horizon = int(rows[-1][1])
    if len(rows) != n * (horizon + 1):
        raise ValueError(f"{path}: expected {n * (horizon + 1)} rows, "
                         f"got {len(rows)}")
    returns = np.empty((n, horizon, 4))
    claims = np.empty((n, horizon + 1))
    survival = np.empty((n, horizon + 1))
    term_spread = np.empty((n, horizon + 1))
    credit_spread = np.empty((n, horizon + 1))
    log_short_yield = np.empty((n, horizon + 1))
    for row in rows:
        k, t = int(row[0]), int(row[1])
        if t > 0:
            returns[k, t - 1] = [float(v) for v in row[2:6]]
        claims[k, t] = float(row[6])
        survival[k, t] = float(row[7])
        term_spread[k, t] = float(row[8])
        credit_spread[k, t] = float(row[9])
        log_short_yield[k, t] = float(row[10])
    return ScenarioSet(returns=returns, claims=claims, survival=survival,
                       term_spread=term_spread, credit_spread=credit_spread,
                       log_short_yield=log_short_yield)
