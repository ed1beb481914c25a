"""Entropic risk evaluation and optimal diversification on the simplex.

The risk of a terminal-wealth sample ``x_1..x_N`` at aversion ``gamma``
is ``log(mean(exp(-gamma * x))) / gamma``, evaluated through a shifted
log-sum-exp so large magnitudes cannot overflow.  Diversifying across
strategies means minimising that risk over convex combinations of the
columns of a terminal-wealth matrix; the solver runs multiplicative
mirror-descent steps with a backtracking line search and polishes the
identified support with Newton steps until the simplex KKT conditions
hold to tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError

_ACTIVE_EPS = 1e-12


def _as_matrix(W) -> np.ndarray:
    arr = np.asarray(W, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("terminal wealth must be a nonempty (N, I) matrix")
    if not np.all(np.isfinite(arr)):
        raise ValueError("terminal wealth must be finite")
    return arr


def _check_gamma(gamma: float) -> float:
    if not np.isfinite(gamma) or gamma <= 0:
        raise ValueError("risk aversion gamma must be positive")
    return float(gamma)


def entropic_risk(samples, gamma: float) -> float:
    """Entropic risk of an equally weighted sample of outcomes."""
    gamma = _check_gamma(gamma)
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("samples must be a nonempty vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    z = -gamma * x
    m = float(z.max())
    return float((m + np.log(np.mean(np.exp(z - m)))) / gamma)


def entropic_risk_per_column(W, gamma: float) -> np.ndarray:
    """Entropic risk of every column of a terminal-wealth matrix."""
    gamma = _check_gamma(gamma)
    arr = _as_matrix(W)
    z = -gamma * arr
    m = z.max(axis=0)
    return (m + np.log(np.mean(np.exp(z - m), axis=0))) / gamma


def _objective_full(alpha: np.ndarray, W: np.ndarray, gamma: float):
    """Value, gradient and tilted scenario weights in one stable pass."""
    y = W @ alpha
    z = -gamma * y
    m = float(z.max())
    e = np.exp(z - m)
    s = float(e.sum())
    value = (m + np.log(s / y.shape[0])) / gamma
    q = e / s
    grad = -(W.T @ q)
    return float(value), grad, q


def diversified_objective(alpha, W, gamma: float):
    """Risk of the weighted strategy mixture and its gradient.

    The mixture's terminal wealth is ``W @ alpha``; the gradient with
    respect to the weights is the negative tilted-average of each
    strategy's outcomes, computed in the same stabilised pass as the
    value.
    """
    gamma = _check_gamma(gamma)
    arr = _as_matrix(W)
    a = np.asarray(alpha, dtype=float)
    if a.shape != (arr.shape[1],):
        raise ValueError("weight vector length must match the column count")
    if not np.all(np.isfinite(a)):
        raise ValueError("weights must be finite")
    value, grad, _ = _objective_full(a, arr, gamma)
    return value, grad


def _kkt_residual(alpha: np.ndarray, grad: np.ndarray) -> float:
    """Distance from the simplex first-order conditions.

    Active components should share a common multiplier (taken as
    ``grad @ alpha``); inactive components must not undercut it.
    """
    mu = float(grad @ alpha)
    active = alpha > _ACTIVE_EPS
    res = 0.0
    if active.any():
        res = float(np.abs(grad[active] - mu).max())
    if (~active).any():
        slack = mu - grad[~active]
        res = max(res, float(max(slack.max(), 0.0)))
    return res


@dataclass
class OptimizedWeights:
    """Solver output: weights, objective value and KKT certificate."""

    alpha: np.ndarray
    value: float
    residual: float
    iterations: int


def _sum_zero_basis(k: int) -> np.ndarray:
    """Orthonormal ``(k, k-1)`` basis of the directions summing to zero.

    Columns 2..k of the Householder reflection that maps the first unit
    vector onto the normalised all-ones vector.
    """
    u = np.full(k, 1.0 / np.sqrt(k))
    u[0] -= 1.0
    house = np.eye(k) - (2.0 / (u @ u)) * np.outer(u, u)
    return house[:, 1:]


def _face_newton(W, gamma, alpha, value, grad, q, evaluate, tol, budget):
    """Polish the current support with equality-constrained Newton steps.

    Operates on the face spanned by the currently positive components.
    The restricted Hessian is eigendecomposed on the sum-zero subspace
    with a floor on the eigenvalues, which keeps the step a descent
    direction even when near-duplicate columns make the face severely
    ill-conditioned.  Components that hit zero along the step are
    dropped from the face.
    """
    n_assets = alpha.shape[0]
    support = alpha > _ACTIVE_EPS
    if not np.array_equal(support, alpha > 0):
        cleaned = np.where(support, alpha, 0.0)
        cleaned /= cleaned.sum()
        v2, g2, q2 = evaluate(cleaned)
        alpha, value, grad, q = cleaned, v2, g2, q2
        support = alpha > _ACTIVE_EPS

    used = 0
    while used < budget:
        idx = np.flatnonzero(support)
        k = idx.size
        if k == 1:
            break
        g_face = grad[idx]
        mu = float(g_face @ alpha[idx])
        if np.abs(g_face - mu).max() <= 0.25 * tol:
            break
        wa = W[:, idx]
        h = wa.T @ q
        hess = gamma * (wa.T @ (wa * q[:, None]) - np.outer(h, h))
        basis = _sum_zero_basis(k)
        reduced = basis.T @ hess @ basis
        reduced = 0.5 * (reduced + reduced.T)
        try:
            eigvals, eigvecs = np.linalg.eigh(reduced)
        except np.linalg.LinAlgError:
            break
        floor = max(float(eigvals.max()), 1e-300) * 1e-10
        g_reduced = basis.T @ g_face
        step_reduced = eigvecs @ ((eigvecs.T @ g_reduced)
                                  / np.maximum(eigvals, floor))
        direction = -(basis @ step_reduced)
        slope = float(g_face @ direction)
        if not np.isfinite(slope) or slope >= 0.0:
            break

        neg = direction < -1e-300
        t_max = 1.0
        if neg.any():
            t_max = min(1.0, float((alpha[idx][neg] / -direction[neg]).min()))
        t = t_max
        accepted = False
        while t > 1e-16 and used < budget:
            trial = np.zeros(n_assets)
            trial[idx] = np.clip(alpha[idx] + t * direction, 0.0, None)
            trial /= trial.sum()
            v2, g2, q2 = evaluate(trial)
            used += 1
            if v2 <= value + 1e-4 * t * slope:
                alpha, value, grad, q = trial, v2, g2, q2
                support = alpha > _ACTIVE_EPS
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
    return alpha, value, grad, q


def optimize_weights(W, gamma: float, tol: float = 1e-8,
                     max_iters: int = 100_000,
                     init=None) -> OptimizedWeights:
    """Minimise the mixture's entropic risk over the simplex.

    Multiplicative mirror-descent steps (with backtracking on the step
    size) drive the iterate towards the optimal face; once they stop
    paying, Newton steps restricted to the active support close the
    remaining gap, re-admitting any zeroed component whose gradient
    undercuts the common multiplier.  Stops when the KKT residual falls
    below ``tol``.

    Raises
    ------
    ConvergenceError
        If the evaluation budget ``max_iters`` is exhausted first; the
        error carries the best iterate and its certificate residual.
    """
    gamma = _check_gamma(gamma)
    arr = _as_matrix(W)
    n, width = arr.shape
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if width == 1:
        value = entropic_risk(arr[:, 0], gamma)
        return OptimizedWeights(np.ones(1), value, 0.0, 0)

    if init is None:
        alpha = np.full(width, 1.0 / width)
    else:
        alpha = np.clip(np.asarray(init, dtype=float), 1e-16, None)
        if alpha.shape != (width,):
            raise ValueError("init length must match the column count")
        alpha = alpha / alpha.sum()

    evals = 0

    def evaluate(a):
        nonlocal evals
        evals += 1
        return _objective_full(a, arr, gamma)

    value, grad, q = evaluate(alpha)
    best_alpha, best_value = alpha.copy(), value
    best_residual = _kkt_residual(alpha, grad)

    def record(a, v, g):
        nonlocal best_alpha, best_value, best_residual
        res = _kkt_residual(a, g)
        if res < best_residual:
            best_alpha, best_value, best_residual = a.copy(), v, res
        return res

    # Phase 1: mirror descent until the certificate holds or steps stall.
    eta = 1.0 / max(float(np.ptp(grad)), 1e-12)
    phase_budget = min(max_iters, 200)
    while evals < phase_budget:
        residual = record(alpha, value, grad)
        if residual <= tol:
            return OptimizedWeights(alpha, value, residual, evals)
        shift = grad - float(grad @ alpha)
        moved = False
        while evals < phase_budget:
            cap = 700.0 / max(float(np.abs(shift).max()), 1e-300)
            eta_use = min(eta, cap)
            trial = alpha * np.exp(-eta_use * shift)
            trial /= trial.sum()
            v2, g2, q2 = evaluate(trial)
            if v2 < value:
                alpha, value, grad, q = trial, v2, g2, q2
                eta = eta_use * 1.5
                moved = True
                break
            eta = eta_use * 0.5
            if eta_use < 1e-16:
                break
        if not moved:
            break

    # Phase 2: Newton polish on the active face, re-admitting violators.
    stagnant = 0
    last_residual = np.inf
    for _ in range(200):
        if evals >= max_iters or stagnant >= 3:
            break
        remaining = max_iters - evals
        alpha, value, grad, q = _face_newton(
            arr, gamma, alpha, value, grad, q, evaluate, tol,
            budget=min(100, remaining))
        residual = record(alpha, value, grad)
        if residual <= tol:
            return OptimizedWeights(alpha, value, residual, evals)
        mu = float(grad @ alpha)
        violators = (alpha <= _ACTIVE_EPS) & (grad < mu - 0.5 * tol)
        if violators.any():
            alpha = alpha.copy()
            alpha[violators] = max(1e-10, float(alpha.max()) * 1e-8)
            alpha /= alpha.sum()
            if evals >= max_iters:
                break
            value, grad, q = evaluate(alpha)
            stagnant = 0
        elif residual < last_residual * (1.0 - 1e-6):
            stagnant = 0
        else:
            stagnant += 1
        last_residual = residual

    residual = record(alpha, value, grad)
    if residual <= tol:
        return OptimizedWeights(alpha, value, residual, evals)
    raise ConvergenceError(
        f"simplex optimisation stopped at certificate residual "
        f"{best_residual:.3e} after {evals} evaluations (tol {tol:.1e})",
        best=best_alpha, value=best_value, residual=best_residual,
        iterations=evals)


def rank_strategies(W, gamma: float, k: int, ids=None) -> list[tuple[int, float]]:
    """The ``k`` lowest-risk columns as ``(id, risk)`` pairs.

    Ties are broken by ascending id so rankings are deterministic.
    """
    arr = _as_matrix(W)
    rho = entropic_risk_per_column(arr, gamma)
    idents = np.arange(arr.shape[1]) if ids is None else np.asarray(ids)
    if idents.shape != (arr.shape[1],):
        raise ValueError("ids must match the column count")
    if not 1 <= k <= arr.shape[1]:
        raise ValueError("k must lie in [1, number of strategies]")
    order = np.lexsort((idents, rho))
    return [(int(idents[i]), float(rho[i])) for i in order[:k]]
