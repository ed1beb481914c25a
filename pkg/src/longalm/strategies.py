"""Parametric investment strategies and self-financing wealth dynamics.

Assets are indexed 0..3 internally (reported as 1..4): money market,
five-year government bonds, corporate bonds, equity.  A strategy maps
observables at each decision time to portfolio proportions; wealth then
follows the self-financing recursion

    w_t = sum_j R_{t,j} h_{t-1,j} - c_t,        h_t = pi_t * w_t,

with claims ``c_t`` paid at the end of each period.  Negative wealth is
carried entirely as a money-market loan accruing the one-year yield
plus a fixed margin until (and unless) it recovers; buy-and-hold is the
one family driven by holdings rather than proportions and liquidates a
fixed slice of each position to pay claims.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.special import expit

from .economy import Scenario, ScenarioSet
from .errors import CatalogueError

N_ASSETS = 4
DEFAULT_INITIAL_WEALTH = 15.0
DEFAULT_BORROW_MARGIN = 0.01

_MIX_TOL = 1e-9


class StrategyKind(str, Enum):
    BUY_AND_HOLD = "buy_and_hold"
    FIXED_PROPORTIONS = "fixed_proportions"
    TARGET_DATE = "target_date"
    CPPI = "cppi"
    TERM_SPREAD = "term_spread"
    CREDIT_SPREAD = "credit_spread"
    SURVIVAL_INDEX = "survival_index"
    WEALTH = "wealth"


# Families whose rules react to liability-side or market observables.
LIABILITY_DRIVEN_KINDS = frozenset({
    StrategyKind.CPPI, StrategyKind.TERM_SPREAD, StrategyKind.CREDIT_SPREAD,
    StrategyKind.SURVIVAL_INDEX, StrategyKind.WEALTH,
})


def _check_mix(name: str, mix) -> tuple[float, ...]:
    arr = np.asarray(mix, dtype=float)
    if arr.shape != (N_ASSETS,):
        raise ValueError(f"{name} must be a {N_ASSETS}-vector")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError(f"{name} must be nonnegative and finite")
    if abs(arr.sum() - 1.0) > _MIX_TOL:
        raise ValueError(f"{name} must sum to 1, got {arr.sum()!r}")
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class StrategySpec:
    """Immutable description of one strategy instance.

    ``pi`` is the full proportion vector for buy-and-hold and fixed
    proportions.  The remaining families place an exposure ``e_t`` on
    ``exposure_mix`` and ``1 - e_t`` on ``rest_mix``, with family
    parameters ``a``/``b`` (glide or sigmoid shape), ``m`` (CPPI
    multiplier) and ``r`` (CPPI floor discount rate).
    """

    kind: StrategyKind
    pi: tuple[float, ...] | None = None
    a: float | None = None
    b: float | None = None
    m: float | None = None
    r: float | None = None
    exposure_mix: tuple[float, ...] | None = None
    rest_mix: tuple[float, ...] | None = None

    def __post_init__(self):
        k = self.kind
        if k in (StrategyKind.BUY_AND_HOLD, StrategyKind.FIXED_PROPORTIONS):
            if self.pi is None:
                raise ValueError(f"{k.value} requires proportions")
            object.__setattr__(self, "pi", _check_mix("pi", self.pi))
            return
        if self.exposure_mix is None or self.rest_mix is None:
            raise ValueError(f"{k.value} requires exposure and rest mixes")
        object.__setattr__(self, "exposure_mix",
                           _check_mix("exposure_mix", self.exposure_mix))
        object.__setattr__(self, "rest_mix",
                           _check_mix("rest_mix", self.rest_mix))
        if k is StrategyKind.TARGET_DATE:
            if self.a is None or self.b is None:
                raise ValueError("target-date requires a and b")
            if not 0.0 <= self.a <= 1.0 or self.b < 0.0:
                raise ValueError("target-date needs 0 <= a <= 1 and b >= 0")
        elif k is StrategyKind.CPPI:
            if self.m is None or self.r is None:
                raise ValueError("cppi requires m and r")
            if self.m < 0.0:
                raise ValueError("cppi multiplier must be nonnegative")
            if self.r <= -1.0:
                raise ValueError("cppi discount rate must exceed -1")
        elif k in (StrategyKind.TERM_SPREAD, StrategyKind.CREDIT_SPREAD):
            if self.a is None or self.b is None:
                raise ValueError(f"{k.value} requires a and b")
            if self.b <= 0.0:
                raise ValueError("sigmoid steepness b must be positive")
        elif k in (StrategyKind.SURVIVAL_INDEX, StrategyKind.WEALTH):
            if self.a is None:
                raise ValueError(f"{k.value} requires a")
            if self.a < 0.0:
                raise ValueError("scale a must be nonnegative")
        else:
            raise ValueError(f"unknown strategy kind {k!r}")

    @property
    def liability_driven(self) -> bool:
        return self.kind in LIABILITY_DRIVEN_KINDS

    def describe(self) -> str:
        """Compact parameter string for reports and CSV joins."""
        def fmt(mix):
            return "(" + ",".join(f"{v:g}" for v in mix) + ")"
        k = self.kind
        if k in (StrategyKind.BUY_AND_HOLD, StrategyKind.FIXED_PROPORTIONS):
            return f"pi={fmt(self.pi)}"
        if k is StrategyKind.TARGET_DATE:
            return (f"a={self.a:g} b={self.b:g} risky={fmt(self.exposure_mix)} "
                    f"safe={fmt(self.rest_mix)}")
        if k is StrategyKind.CPPI:
            return (f"m={self.m:g} r={self.r:g} risky={fmt(self.exposure_mix)} "
                    f"safe={fmt(self.rest_mix)}")
        if k in (StrategyKind.TERM_SPREAD, StrategyKind.CREDIT_SPREAD):
            return f"a={self.a:g} b={self.b:g}"
        return (f"a={self.a:g} target={fmt(self.exposure_mix)} "
                f"rest={fmt(self.rest_mix)}")


# -- named constructors -------------------------------------------------

def buy_and_hold(pi) -> StrategySpec:
    return StrategySpec(StrategyKind.BUY_AND_HOLD, pi=tuple(pi))


def fixed_proportions(pi) -> StrategySpec:
    return StrategySpec(StrategyKind.FIXED_PROPORTIONS, pi=tuple(pi))


def target_date(a: float, b: float, risky_mix=(0, 0, 0, 1),
                safe_mix=(0, 1, 0, 0)) -> StrategySpec:
    return StrategySpec(StrategyKind.TARGET_DATE, a=a, b=b,
                        exposure_mix=tuple(risky_mix), rest_mix=tuple(safe_mix))


def cppi(m: float, r: float, risky_mix=(0, 0, 0, 1),
         safe_mix=(0, 1, 0, 0)) -> StrategySpec:
    return StrategySpec(StrategyKind.CPPI, m=m, r=r,
                        exposure_mix=tuple(risky_mix), rest_mix=tuple(safe_mix))


def term_spread(a: float, b: float) -> StrategySpec:
    """Sigmoid of the term spread into five-year bonds, rest short."""
    return StrategySpec(StrategyKind.TERM_SPREAD, a=a, b=b,
                        exposure_mix=(0, 1, 0, 0), rest_mix=(1, 0, 0, 0))


def credit_spread(a: float, b: float) -> StrategySpec:
    """Sigmoid of the credit spread into corporates, rest five-year."""
    return StrategySpec(StrategyKind.CREDIT_SPREAD, a=a, b=b,
                        exposure_mix=(0, 0, 1, 0), rest_mix=(0, 1, 0, 0))


def survival_index(a: float, target_mix=(0, 1, 0, 0),
                   rest_mix=(0, 0, 0, 1)) -> StrategySpec:
    return StrategySpec(StrategyKind.SURVIVAL_INDEX, a=a,
                        exposure_mix=tuple(target_mix), rest_mix=tuple(rest_mix))


def wealth_rule(a: float, target_mix=(0, 1, 0, 0),
                rest_mix=(0, 0, 0, 1)) -> StrategySpec:
    return StrategySpec(StrategyKind.WEALTH, a=a,
                        exposure_mix=tuple(target_mix), rest_mix=tuple(rest_mix))


# -- observables and allocation ----------------------------------------

@dataclass
class Observation:
    """What a strategy may look at when choosing proportions."""

    wealth: float
    initial_wealth: float
    survival: float = 1.0
    term_spread: float = 0.0
    credit_spread: float = 0.0
    floor: float = 0.0


@dataclass
class FloorPath:
    """CPPI floor values ``F_0..F_T`` with their construction inputs."""

    values: np.ndarray          # (T+1,)
    rate: float
    median_claims: np.ndarray   # (T,) per-period claims c_1..c_T

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.median_claims = np.asarray(self.median_claims, dtype=float)
        if self.values.shape != (self.median_claims.shape[0] + 1,):
            raise ValueError("floor must hold one more value than claims")


@dataclass
class WealthPath:
    """Wealth and holdings of one strategy on one scenario."""

    wealth: np.ndarray     # (T+1,)
    holdings: np.ndarray   # (T+1, 4), rows sum to wealth

    @property
    def terminal(self) -> float:
        return float(self.wealth[-1])


def _exposure_values(spec: StrategySpec, t: int, wealth, initial_wealth: float,
                     survival, term_spread_obs, credit_spread_obs,
                     floor: float) -> np.ndarray:
    """Vectorised exposure ``e_t`` of one spec over scenario arrays."""
    k = spec.kind
    if k is StrategyKind.TARGET_DATE:
        e = max(spec.a - spec.b * t, 0.0)
        return np.full_like(np.asarray(wealth, dtype=float), e)
    if k is StrategyKind.CPPI:
        w = np.asarray(wealth, dtype=float)
        positive = w > 0
        cushion = np.zeros_like(w)
        np.divide(floor, w, out=cushion, where=positive)
        e = spec.m * np.clip(1.0 - cushion, 0.0, None)
        return np.where(positive, e, 0.0)
    if k is StrategyKind.TERM_SPREAD:
        return expit(spec.b * (np.asarray(term_spread_obs, dtype=float) + spec.a))
    if k is StrategyKind.CREDIT_SPREAD:
        return expit(spec.b * (np.asarray(credit_spread_obs, dtype=float) + spec.a))
    if k is StrategyKind.SURVIVAL_INDEX:
        return np.clip(spec.a * np.asarray(survival, dtype=float), 0.0, 1.0)
    if k is StrategyKind.WEALTH:
        ratio = np.asarray(wealth, dtype=float) / initial_wealth
        return np.clip(spec.a * ratio, 0.0, 1.0)
    raise ValueError(f"no exposure rule for {k.value}")


def allocate(spec: StrategySpec, t: int, obs: Observation) -> np.ndarray:
    """Portfolio proportions of ``spec`` at decision time ``t``.

    Buy-and-hold has no proportional rule (its holdings evolve inside
    :func:`propagate_wealth`) and raises.  The result is nonnegative and
    sums to one.
    """
    if t < 0:
        raise ValueError("decision time must be nonnegative")
    if spec.kind is StrategyKind.BUY_AND_HOLD:
        raise ValueError("buy-and-hold allocates by holdings, not proportions")
    if spec.kind is StrategyKind.FIXED_PROPORTIONS:
        pi = np.array(spec.pi)
    else:
        e = float(_exposure_values(
            spec, t, np.array([obs.wealth]), obs.initial_wealth,
            np.array([obs.survival]), np.array([obs.term_spread]),
            np.array([obs.credit_spread]), obs.floor)[0])
        pi = e * np.array(spec.exposure_mix) + (1.0 - e) * np.array(spec.rest_mix)
    if abs(float(pi.sum()) - 1.0) > 1e-9 or np.any(pi < -1e-12):
        raise RuntimeError(f"allocation failed to normalise: {pi}")
    return pi


def _allocation_matrix(spec: StrategySpec, t: int, wealth: np.ndarray,
                       initial_wealth: float, survival: np.ndarray,
                       ts_obs: np.ndarray, cs_obs: np.ndarray,
                       floor: float) -> np.ndarray:
    """(n, 4) proportion rows for one spec across scenarios."""
    if spec.kind is StrategyKind.FIXED_PROPORTIONS:
        return np.broadcast_to(np.array(spec.pi), (wealth.shape[0], N_ASSETS))
    e = _exposure_values(spec, t, wealth, initial_wealth, survival,
                         ts_obs, cs_obs, floor)
    return (e[:, None] * np.array(spec.exposure_mix)
            + (1.0 - e)[:, None] * np.array(spec.rest_mix))


def median_claims(scns: ScenarioSet) -> np.ndarray:
    """Per-period lower median of the claim stream, ``t = 1..T``."""
    claims = scns.claims[:, 1:]
    if claims.shape[1] == 0:
        return np.empty(0)
    n = claims.shape[0]
    k = (n - 1) // 2
    return np.partition(claims, k, axis=0)[k]


def cppi_floor(median_claim_path, rate: float) -> FloorPath:
    """Backward-discounted floor: remaining median claims at rate ``rate``.

    ``F_T = 0`` and ``F_{t-1} = (F_t + cbar_t) / (1 + rate)``, so the
    floor at any time is the value of the still-outstanding typical
    claim payments.
    """
    cbar = np.asarray(median_claim_path, dtype=float)
    if cbar.ndim != 1:
        raise ValueError("median claims must be a vector")
    if rate <= -1.0:
        raise ValueError("discount rate must exceed -1")
    horizon = cbar.shape[0]
    values = np.zeros(horizon + 1)
    for t in range(horizon, 0, -1):
        values[t - 1] = (values[t] + cbar[t - 1]) / (1.0 + rate)
    return FloorPath(values=values, rate=float(rate), median_claims=cbar)


def _floor_array(spec: StrategySpec, floor: FloorPath | None,
                 horizon: int) -> np.ndarray:
    if spec.kind is not StrategyKind.CPPI:
        return np.zeros(horizon + 1)
    if floor is None:
        raise ValueError("cppi propagation requires a floor path")
    if floor.values.shape != (horizon + 1,):
        raise ValueError("floor path length must match the scenario horizon")
    return floor.values


def propagate_wealth(spec: StrategySpec, scn: Scenario,
                     w0: float = DEFAULT_INITIAL_WEALTH,
                     borrow_margin: float = DEFAULT_BORROW_MARGIN,
                     floor: FloorPath | None = None) -> WealthPath:
    """Run one strategy through one scenario.

    While wealth is negative the whole balance sits in the money-market
    column as a loan accruing the one-year yield plus ``borrow_margin``,
    and the strategy's rule resumes only if wealth turns positive again
    (impossible while claims are nonnegative, but handled).
    """
    if w0 < 0:
        raise ValueError("initial wealth must be nonnegative")
    horizon = scn.horizon
    floors = _floor_array(spec, floor, horizon)
    is_bh = spec.kind is StrategyKind.BUY_AND_HOLD

    wealth = np.empty(horizon + 1)
    holdings = np.zeros((horizon + 1, N_ASSETS))
    wealth[0] = w0
    if is_bh:
        pi0 = np.array(spec.pi)
        holdings[0] = pi0 * w0
    else:
        obs = Observation(wealth=w0, initial_wealth=w0,
                          survival=float(scn.survival[0]),
                          term_spread=float(scn.term_spread[0]),
                          credit_spread=float(scn.credit_spread[0]),
                          floor=float(floors[0]))
        holdings[0] = allocate(spec, 0, obs) * w0

    for t in range(1, horizon + 1):
        w_prev = wealth[t - 1]
        if w_prev < 0:
            rate = np.exp(scn.log_short_yield[t - 1]) + borrow_margin
            gross = w_prev * np.exp(rate)
        else:
            gross = float(scn.returns[t - 1] @ holdings[t - 1])
        w = gross - float(scn.claims[t])
        wealth[t] = w
        if w < 0:
            holdings[t, 0] = w
        elif is_bh:
            if w_prev < 0:
                holdings[t] = pi0 * w   # re-seed the ladder after recovery
            else:
                holdings[t] = (scn.returns[t - 1] * holdings[t - 1]
                               - pi0 * float(scn.claims[t]))
        else:
            obs = Observation(wealth=w, initial_wealth=w0,
                              survival=float(scn.survival[t]),
                              term_spread=float(scn.term_spread[t]),
                              credit_spread=float(scn.credit_spread[t]),
                              floor=float(floors[t]))
            holdings[t] = allocate(spec, t, obs) * w
    return WealthPath(wealth=wealth, holdings=holdings)


@dataclass
class BatchWealth:
    """Wealth/holdings of one strategy across a whole scenario set."""

    wealth: np.ndarray     # (n, T+1)
    holdings: np.ndarray   # (n, T+1, 4)

    @property
    def terminal(self) -> np.ndarray:
        return self.wealth[:, -1]


def propagate_wealth_batch(spec: StrategySpec, scns: ScenarioSet,
                           w0: float = DEFAULT_INITIAL_WEALTH,
                           borrow_margin: float = DEFAULT_BORROW_MARGIN,
                           floor: FloorPath | None = None) -> BatchWealth:
    """Vectorised :func:`propagate_wealth` over all scenarios at once."""
    if w0 < 0:
        raise ValueError("initial wealth must be nonnegative")
    n, horizon = scns.n_scenarios, scns.horizon
    floors = _floor_array(spec, floor, horizon)
    is_bh = spec.kind is StrategyKind.BUY_AND_HOLD

    wealth = np.empty((n, horizon + 1))
    holdings = np.zeros((n, horizon + 1, N_ASSETS))
    wealth[:, 0] = w0
    if is_bh:
        pi0 = np.array(spec.pi)
        holdings[:, 0, :] = pi0 * w0
    else:
        holdings[:, 0, :] = w0 * _allocation_matrix(
            spec, 0, wealth[:, 0], w0, scns.survival[:, 0],
            scns.term_spread[:, 0], scns.credit_spread[:, 0], float(floors[0]))

    for t in range(1, horizon + 1):
        w_prev = wealth[:, t - 1]
        negative = w_prev < 0
        gross = np.einsum("nj,nj->n", scns.returns[:, t - 1, :],
                          holdings[:, t - 1, :])
        if negative.any():
            rate = np.exp(scns.log_short_yield[negative, t - 1]) + borrow_margin
            gross[negative] = w_prev[negative] * np.exp(rate)
        w = gross - scns.claims[:, t]
        wealth[:, t] = w
        if is_bh:
            rows = (scns.returns[:, t - 1, :] * holdings[:, t - 1, :]
                    - np.outer(scns.claims[:, t], pi0))
            if negative.any():
                # resumed-from-loan paths restart the ladder
                rows[negative] = np.outer(w[negative], pi0)
        else:
            rows = w[:, None] * _allocation_matrix(
                spec, t, w, w0, scns.survival[:, t], scns.term_spread[:, t],
                scns.credit_spread[:, t], float(floors[t]))
        broke = w < 0
        if broke.any():
            rows[broke] = 0.0
            rows[broke, 0] = w[broke]
        holdings[:, t, :] = rows
    return BatchWealth(wealth=wealth, holdings=holdings)


# -- catalogue expansion ------------------------------------------------

@dataclass
class CatalogueGrids:
    """Parameter grids for each family, as read from a catalogue config."""

    buy_and_hold: list        # list of 4-vectors
    fp_equity_share: list     # floats
    fp_bond_mix: list         # 3-vectors over assets 1..3
    tdf_a: list
    tdf_b: list
    tdf_risky_mix: list       # 4-vectors
    tdf_safe_mix: list        # 4-vectors
    cppi_m: list
    cppi_r: list
    cppi_risky_mix: list
    cppi_safe_mix: list
    term_a: list
    term_b: list
    credit_a: list
    credit_b: list
    survival_a: list
    survival_target_mix: tuple
    survival_rest_mix: tuple
    wealth_a: list
    wealth_target_mix: tuple
    wealth_rest_mix: tuple


def build_catalogue(grids: CatalogueGrids, horizon: int = 30
                    ) -> list[StrategySpec]:
    """Expand grids family by family into a flat strategy list.

    Fixed-proportions entries put ``equity_share`` into equity and split
    the remainder over the three bond legs by ``bond_mix``.  Target-date
    entries must stay feasible over the horizon (``a - b*T >= 0``).
    """
    if horizon < 0:
        raise CatalogueError("horizon must be nonnegative")
    specs: list[StrategySpec] = []
    for pi in grids.buy_and_hold:
        specs.append(buy_and_hold(pi))
    for share in grids.fp_equity_share:
        if not 0.0 <= share <= 1.0:
            raise CatalogueError(f"equity share {share!r} outside [0, 1]")
        for mix in grids.fp_bond_mix:
            bond = np.asarray(mix, dtype=float)
            if bond.shape != (3,) or np.any(bond < 0) or abs(bond.sum() - 1.0) > _MIX_TOL:
                raise CatalogueError(f"bond mix {mix!r} must be a 3-vector summing to 1")
            pi = np.append((1.0 - share) * bond, share)
            specs.append(fixed_proportions(pi))
    for a in grids.tdf_a:
        for b in grids.tdf_b:
            if a - b * horizon < 0:
                raise CatalogueError(
                    f"target-date entry a={a:g}, b={b:g} infeasible over "
                    f"{horizon} periods: terminal exposure {a - b * horizon:g} < 0")
            for risky in grids.tdf_risky_mix:
                for safe in grids.tdf_safe_mix:
                    specs.append(target_date(a, b, risky, safe))
    for m in grids.cppi_m:
        for r in grids.cppi_r:
            for risky in grids.cppi_risky_mix:
                for safe in grids.cppi_safe_mix:
                    specs.append(cppi(m, r, risky, safe))
    for a in grids.term_a:
        for b in grids.term_b:
            specs.append(term_spread(a, b))
    for a in grids.credit_a:
        for b in grids.credit_b:
            specs.append(credit_spread(a, b))
    for a in grids.survival_a:
        specs.append(survival_index(a, grids.survival_target_mix,
                                    grids.survival_rest_mix))
    for a in grids.wealth_a:
        specs.append(wealth_rule(a, grids.wealth_target_mix,
                                 grids.wealth_rest_mix))
    return specs


def non_ldi_subset(specs) -> list[int]:
    """Indices of the strategies that ignore liability-side observables."""
    return [i for i, s in enumerate(specs) if not s.liability_driven]


def catalogue_to_csv(specs, path) -> None:
    """Echo the expanded catalogue as ``id,kind,params`` for joins."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "kind", "params"])
        for i, spec in enumerate(specs):
            writer.writerow([i, spec.kind.value, spec.describe()])
