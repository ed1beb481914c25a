"""Cohort survival modelling on a three-anchor logistic curve.

The one-year survival probability of an ``x`` year old is
``expit(v . phi(x))`` where ``phi`` are three piecewise-linear basis
functions anchored at ages 18, 50 and 100, and the risk factors ``v``
are the logit survival probabilities at those anchor ages.  The module
covers basis evaluation, survival-index paths for an ageing cohort,
cohort propagation (deterministic large-population limit or binomial
sampling), and maximum-likelihood recovery of the anchor logits from
one year of exposure/death counts.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from .errors import ConvergenceError, FitDegenerateError

AGE_MIN = 18
AGE_KNOT = 50
AGE_MAX = 100

# expit saturates to exactly 0.0 / 1.0 in float64 for |logit| > ~37; clip
# probabilities back into the open interval so downstream logs stay finite.
_P_LO = float(np.finfo(float).tiny)
_P_HI = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class RiskFactors:
    """Logit one-year survival probabilities at ages 18, 50 and 100."""

    v1: float
    v2: float
    v3: float

    def __post_init__(self):
        if not all(np.isfinite([self.v1, self.v2, self.v3])):
            raise ValueError("risk factors must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.v1, self.v2, self.v3], dtype=float)


@dataclass
class CohortState:
    """A single cohort: integer age, population size and survival index."""

    age: int
    size: float
    index: float

    def __post_init__(self):
        if self.size < 0:
            raise ValueError("cohort size must be nonnegative")
        if not 0.0 <= self.index <= 1.0:
            raise ValueError("survival index must lie in [0, 1]")


def _factor_array(factors) -> np.ndarray:
    if isinstance(factors, RiskFactors):
        return factors.as_array()
    arr = np.asarray(factors, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"expected three risk factors, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("risk factors must be finite")
    return arr


def basis_matrix(ages) -> np.ndarray:
    """Rows of basis-function values, one row per age.

    The three functions are piecewise linear with knots at 18, 50 and
    100, form a partition of unity on [18, 100], and each one peaks at
    its own anchor age.
    """
    x = np.asarray(ages, dtype=float)
    if np.any(x < AGE_MIN) or np.any(x > AGE_MAX):
        raise ValueError(f"ages must lie in [{AGE_MIN}, {AGE_MAX}]")
    young = x <= AGE_KNOT
    phi = np.zeros(x.shape + (3,))
    ramp = (x - AGE_MIN) / (AGE_KNOT - AGE_MIN)
    phi[..., 0] = np.where(young, 1.0 - ramp, 0.0)
    phi[..., 1] = np.where(young, ramp, 2.0 - x / AGE_KNOT)
    phi[..., 2] = np.where(young, 0.0, x / AGE_KNOT - 1.0)
    return phi


def basis_phi(age: float) -> tuple[float, float, float]:
    """Evaluate the three basis functions at a single age in [18, 100]."""
    row = basis_matrix([age])[0]
    return float(row[0]), float(row[1]), float(row[2])


def survival_prob(factors, age: float) -> float:
    """One-year survival probability of an ``age`` year old.

    Ages above 100 are clamped to 100 (the oldest anchor); ages below 18
    are outside the model's domain.  The result is strictly inside
    (0, 1) and the logistic is evaluated in a form that cannot overflow.
    """
    if age < AGE_MIN:
        raise ValueError(f"age must be at least {AGE_MIN}")
    v = _factor_array(factors)
    eta = float(v @ basis_matrix([min(age, AGE_MAX)])[0])
    return float(np.clip(expit(eta), _P_LO, _P_HI))


def survival_curve(factors, ages) -> np.ndarray:
    """Vector of survival probabilities at several ages (clamped at 100)."""
    v = _factor_array(factors)
    x = np.minimum(np.asarray(ages, dtype=float), AGE_MAX)
    if np.any(x < AGE_MIN):
        raise ValueError(f"ages must be at least {AGE_MIN}")
    return np.clip(expit(basis_matrix(x) @ v), _P_LO, _P_HI)


def propagate_cohort(state: CohortState, p: float, mode: str = "deterministic",
                     rng: np.random.Generator | None = None) -> CohortState:
    """Advance a cohort one year given its survival probability ``p``.

    ``deterministic`` multiplies size and index by ``p`` (the
    large-population limit); ``binomial`` draws survivors from
    ``Binomial(round(size), p)`` and scales the index by the realised
    survival fraction.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError("survival probability must lie in (0, 1]")
    if mode == "deterministic":
        return CohortState(state.age + 1, state.size * p, state.index * p)
    if mode == "binomial":
        if rng is None:
            raise ValueError("binomial propagation requires an rng")
        trials = int(round(state.size))
        if trials == 0:
            return CohortState(state.age + 1, 0.0, 0.0)
        survivors = float(rng.binomial(trials, p))
        index = min(state.index * survivors / state.size, 1.0)
        return CohortState(state.age + 1, survivors, index)
    raise ValueError(f"unknown propagation mode {mode!r}")


def survival_index_paths(factor_paths, start_age: int = 65) -> np.ndarray:
    """Survival-index paths for a cohort aged ``start_age`` at time 0.

    Parameters
    ----------
    factor_paths : array-like, shape (n, T, 3) or (T, 3)
        Risk factors realised at times 1..T, one triple per period.
    start_age : int
        Cohort age at time 0.

    Returns
    -------
    ndarray, shape (n, T+1) or (T+1,)
        Index paths starting at 1; step ``t`` multiplies by the survival
        probability of a ``start_age + t - 1`` year old under the
        period-``t`` factors.  Ages beyond 100 are clamped to 100.
    """
    arr = np.asarray(
        [f.as_array() if isinstance(f, RiskFactors) else f for f in factor_paths]
        if not isinstance(factor_paths, np.ndarray) else factor_paths,
        dtype=float,
    )
    single = arr.ndim == 2
    if single:
        arr = arr[None, ...]
    if arr.ndim != 3 or arr.shape[-1] != 3:
        raise ValueError("factor paths must have shape (n, T, 3) or (T, 3)")
    if start_age < AGE_MIN:
        raise ValueError(f"start age must be at least {AGE_MIN}")
    n, horizon, _ = arr.shape
    out = np.ones((n, horizon + 1))
    if horizon:
        ages = np.minimum(start_age + np.arange(horizon), AGE_MAX)
        phi = basis_matrix(ages)                      # (T, 3)
        eta = np.einsum("ntk,tk->nt", arr, phi)
        p = np.clip(expit(eta), _P_LO, _P_HI)
        out[:, 1:] = np.cumprod(p, axis=1)
    return out[0] if single else out


def survival_index_path(factor_path, start_age: int = 65) -> np.ndarray:
    """Single-path version of :func:`survival_index_paths`."""
    return survival_index_paths(factor_path, start_age=start_age)


def fit_risk_factors(exposures, deaths, ages=None, *, grad_tol: float = 1e-8,
                     max_iter: int = 200) -> RiskFactors:
    """Maximum-likelihood risk factors from one year of count data.

    Survivors ``E_x - D_x`` out of ``E_x`` exposed at age ``x`` follow a
    binomial with the model's survival probability.  The concave
    log-likelihood (normalised per exposed life so the tolerance is
    scale-free) is maximised with damped Newton steps, falling back to
    gradient ascent when the curvature solve fails.

    Raises
    ------
    FitDegenerateError
        If the data cannot pin down all three anchors: no deaths at all,
        no survivors at all, or an age range whose basis rows are rank
        deficient.
    """
    E = np.asarray(exposures, dtype=float)
    D = np.asarray(deaths, dtype=float)
    if E.shape != D.shape or E.ndim != 1:
        raise ValueError("exposures and deaths must be equal-length vectors")
    x = (np.arange(AGE_MIN, AGE_MIN + E.size, dtype=float)
         if ages is None else np.asarray(ages, dtype=float))
    if x.shape != E.shape:
        raise ValueError("ages must match the count vectors")
    if np.any(E < 0) or np.any(D < 0):
        raise ValueError("counts must be nonnegative")
    if np.any(D > E):
        raise ValueError("deaths cannot exceed exposures")

    keep = E > 0
    E, D, x = E[keep], D[keep], x[keep]
    if E.size == 0:
        raise FitDegenerateError("no ages with positive exposure")
    survivors = E - D
    if D.sum() == 0 or survivors.sum() == 0:
        raise FitDegenerateError(
            "all survivors or all deaths: anchor logits are unbounded")
    X = basis_matrix(x)
    if np.linalg.matrix_rank(X * np.sqrt(E)[:, None]) < 3:
        raise FitDegenerateError("age range does not identify all three anchors")

    total = E.sum()

    def evaluate(v):
        eta = X @ v
        log_p = -np.logaddexp(0.0, -eta)
        log_q = -np.logaddexp(0.0, eta)
        ll = float(survivors @ log_p + D @ log_q) / total
        p = expit(eta)
        grad = X.T @ (survivors - E * p) / total
        return ll, grad, p

    # Warm start: weighted least squares on the empirical logits.
    frac = np.clip(survivors / E, 1e-12, 1.0 - 1e-12)
    w = np.sqrt(E)
    v, *_ = np.linalg.lstsq(X * w[:, None], np.log(frac / (1.0 - frac)) * w,
                            rcond=None)
    ll, grad, p = evaluate(v)

    for _ in range(max_iter):
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= grad_tol:
            return RiskFactors(*map(float, v))
        curvature = X.T @ (X * (E * p * (1.0 - p))[:, None]) / total
        try:
            step = np.linalg.solve(curvature, grad)
            if float(step @ grad) <= 0.0:
                step = grad
        except np.linalg.LinAlgError:
            step = grad
        lam, accepted = 1.0, False
        while lam > 1e-14:
            cand = v + lam * step
            ll_new, grad_new, p_new = evaluate(cand)
            if ll_new > ll or (ll_new == ll
                               and np.linalg.norm(grad_new) < gnorm):
                v, ll, grad, p = cand, ll_new, grad_new, p_new
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            break

    gnorm = float(np.linalg.norm(grad))
    if gnorm <= grad_tol:
        return RiskFactors(*map(float, v))
    raise ConvergenceError("risk-factor fit stalled before reaching tolerance",
                           best=RiskFactors(*map(float, v)), residual=gnorm)


def load_mortality_table(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read an ``age,exposure,deaths`` CSV into three aligned arrays."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != [
                "age", "exposure", "deaths"]:
            raise ValueError(
                f"{path}: expected header 'age,exposure,deaths', got {header}")
        rows = [(float(a), float(e), float(d)) for a, e, d in reader]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    ages, exposures, deaths = (np.array(col) for col in zip(*rows))
    return ages, exposures, deaths
