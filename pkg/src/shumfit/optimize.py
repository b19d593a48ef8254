"""Maximizers: BFGS with backtracking, Nelder-Mead, bracketed 1-D search,
and the greedy step-down composition over markers.

All routines maximize.  BFGS is for smooth objectives with analytic
gradients; Nelder-Mead handles the piecewise-constant empirical objectives;
the 1-D search runs a dense grid pre-scan (multi-modal slices are common for
empirical HUM) before local refinement.  Everything is deterministic:
identical inputs and config give bit-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import NonFiniteObjective

_MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class OptimConfig:
    max_iterations: int = 500
    grad_tol: float = 1e-6            # sup-norm on the gradient
    rel_obj_tol: float = 1e-10        # relative objective stagnation
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    nm_reflect: float = 1.0
    nm_expand: float = 2.0
    nm_contract: float = 0.5
    nm_shrink: float = 0.5
    nm_diameter_tol: float = 1e-8
    brent_half_width: float = 10.0
    grid_points: int = 101


@dataclass(frozen=True)
class OptimResult:
    argmax: np.ndarray
    value: float
    iterations: int
    converged: bool
    gradient_norm: Optional[float] = None


def _finite_or_raise(value, point, what="objective"):
    if not np.all(np.isfinite(value)):
        raise NonFiniteObjective(np.asarray(point), f"{what} returned a non-finite value")


# ---------------------------------------------------------------------------
# BFGS
# ---------------------------------------------------------------------------

def bfgs_maximize(f_and_grad: Callable, theta0, cfg: OptimConfig = OptimConfig()) -> OptimResult:
    """Quasi-Newton ascent with Armijo backtracking.

    ``f_and_grad(theta) -> (value, gradient)``.  Stops on gradient sup-norm
    below ``grad_tol``, relative objective stagnation, or the iteration cap.
    The inverse-Hessian approximation resets to identity whenever the
    curvature condition s'y <= 0 fails.
    """
    theta = np.asarray(theta0, dtype=float).copy()
    n = theta.size
    val, grad = f_and_grad(theta)
    _finite_or_raise(val, theta)
    _finite_or_raise(grad, theta, "gradient")
    if n == 0:
        return OptimResult(theta, float(val), 0, True, 0.0)

    h = np.eye(n)
    eye = np.eye(n)
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iterations + 1):
        gnorm = float(np.max(np.abs(grad)))
        if gnorm < cfg.grad_tol:
            converged = True
            iterations -= 1
            break

        p = h @ grad                       # ascent direction
        slope = float(grad @ p)
        if slope <= 0.0:                   # h lost positive definiteness
            h = eye.copy()
            p = grad.copy()
            slope = float(grad @ grad)

        step = 1.0
        new_theta = None
        for _ in range(_MAX_BACKTRACKS):
            cand = theta + step * p
            cand_val, cand_grad = f_and_grad(cand)
            if np.isfinite(cand_val) and cand_val >= val + cfg.armijo_c * step * slope:
                new_theta = cand
                break
            step *= cfg.backtrack
        if new_theta is None:              # no improving step along p
            break

        _finite_or_raise(cand_grad, cand, "gradient")
        s = new_theta - theta
        y = cand_grad - grad
        sy = float(s @ y)
        # curvature condition for a concave objective: s'y < 0 under
        # maximization of -f; in this ascent form the update needs s'y < 0,
        # i.e. -s'y > 0, so reset when it fails
        if -sy <= 0.0:
            h = eye.copy()
        else:
            rho = 1.0 / (-sy)
            v = eye - rho * np.outer(s, -y)
            h = v @ h @ v.T + rho * np.outer(s, s)

        stalled = abs(cand_val - val) <= cfg.rel_obj_tol * max(1.0, abs(val))
        theta, val, grad = new_theta, cand_val, cand_grad
        if stalled:
            converged = True
            break
    else:
        iterations = cfg.max_iterations

    gnorm = float(np.max(np.abs(grad))) if grad.size else 0.0
    if gnorm < cfg.grad_tol:
        converged = True
    return OptimResult(theta, float(val), iterations, converged, gnorm)


# ---------------------------------------------------------------------------
# Nelder-Mead
# ---------------------------------------------------------------------------

def _initial_simplex(theta0, step_rule=None):
    n = theta0.size
    simplex = [theta0.copy()]
    for i in range(n):
        pt = theta0.copy()
        pt[i] += step_rule(theta0[i]) if step_rule else max(0.1, 0.1 * abs(theta0[i]))
        simplex.append(pt)
    return simplex


def _nm_loop(f, simplex, values, cfg, budget):
    n = simplex[0].size
    iterations = 0
    converged = False
    while iterations < budget:
        order = np.argsort(np.negative(values), kind="stable")  # best first
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]

        diameter = max(
            float(np.max(np.abs(simplex[i] - simplex[0]))) for i in range(1, n + 1)
        )
        if diameter < cfg.nm_diameter_tol:
            converged = True
            break
        iterations += 1

        best, worst = values[0], values[-1]
        centroid = np.mean(simplex[:-1], axis=0)
        reflected = centroid + cfg.nm_reflect * (centroid - simplex[-1])
        f_r = f(reflected)

        if f_r > best:
            expanded = centroid + cfg.nm_expand * (reflected - centroid)
            f_e = f(expanded)
            if f_e > f_r:
                simplex[-1], values[-1] = expanded, f_e
            else:
                simplex[-1], values[-1] = reflected, f_r
            continue
        if f_r > values[-2]:
            simplex[-1], values[-1] = reflected, f_r
            continue
        if f_r > worst:
            contracted = centroid + cfg.nm_contract * (reflected - centroid)
        else:
            contracted = centroid - cfg.nm_contract * (centroid - simplex[-1])
        f_c = f(contracted)
        if f_c > max(f_r, worst):
            simplex[-1], values[-1] = contracted, f_c
            continue

        for i in range(1, n + 1):
            simplex[i] = simplex[0] + cfg.nm_shrink * (simplex[i] - simplex[0])
            values[i] = f(simplex[i])

    order = np.argsort(np.negative(values), kind="stable")
    simplex = [simplex[i] for i in order]
    values = [values[i] for i in order]
    return simplex, values, iterations, converged


def nelder_mead_maximize(f: Callable, theta0, cfg: OptimConfig = OptimConfig()) -> OptimResult:
    """Simplex maximization for possibly discontinuous objectives.

    Initial simplex steps are max(0.1, 0.1|theta0_i|) per coordinate; stops
    when the simplex diameter falls below ``nm_diameter_tol`` or at the
    iteration cap, then restarts once from the incumbent with a fresh
    simplex.  Non-finite trial values are treated as -inf (rejected), but a
    non-finite start raises.
    """
    theta0 = np.asarray(theta0, dtype=float).copy()
    v0 = f(theta0)
    _finite_or_raise(v0, theta0)
    if theta0.size == 0:
        return OptimResult(theta0, float(v0), 0, True)

    def safe_f(x):
        v = f(x)
        return float(v) if np.isfinite(v) else -np.inf

    total_iter = 0
    best_pt, best_val = theta0, float(v0)
    for _round in range(2):                 # initial run + one restart
        simplex = _initial_simplex(best_pt)
        values = [best_val] + [safe_f(p) for p in simplex[1:]]
        simplex, values, iters, converged = _nm_loop(
            safe_f, simplex, values, cfg, cfg.max_iterations
        )
        total_iter += iters
        if values[0] > best_val:
            best_pt, best_val = simplex[0].copy(), float(values[0])
    if not np.isfinite(best_val):
        raise NonFiniteObjective(best_pt)
    return OptimResult(best_pt, best_val, total_iter, converged)


# ---------------------------------------------------------------------------
# 1-D bracketed search
# ---------------------------------------------------------------------------

def brent_maximize_1d(f: Callable, cfg: OptimConfig = OptimConfig(),
                      half_width: Optional[float] = None) -> OptimResult:
    """Grid pre-scan over [-L, L] then golden-section/parabolic refinement.

    Returns the better of the refined point and the grid incumbent, so a
    rough refinement can never lose to the scan.  Non-finite grid values are
    excluded; if every value is non-finite the objective is rejected.
    """
    L = cfg.brent_half_width if half_width is None else half_width
    grid = np.linspace(-L, L, cfg.grid_points)
    if cfg.grid_points % 2 == 1:
        grid[cfg.grid_points // 2] = 0.0   # exact 0 keeps step-down monotone
    vals = np.array([f(x) for x in grid], dtype=float)
    finite = np.isfinite(vals)
    if not finite.any():
        raise NonFiniteObjective(grid[0])
    vals = np.where(finite, vals, -np.inf)
    i = int(np.argmax(vals))

    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(
        lambda x: -f(x), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-8, "maxiter": 500},
    )
    x_best, v_best = float(grid[i]), float(vals[i])
    if res.success and np.isfinite(res.fun) and -res.fun > v_best:
        x_best, v_best = float(res.x), float(-res.fun)
    return OptimResult(np.array([x_best]), v_best, int(res.nfev) + grid.size, True)


# ---------------------------------------------------------------------------
# step-down composition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepDownResult:
    """Greedy marker composition in original column order.

    ``beta[anchor_index] == 1`` (the best individual marker);
    ``stage_values[i]`` is the objective after the (i+1)-th marker joined,
    non-decreasing because every 1-D stage can choose coefficient 0.
    """

    beta: np.ndarray
    anchor_index: int
    ordering: tuple
    stage_values: tuple


def step_down(score_objective: Callable, data, cfg: OptimConfig = OptimConfig()) -> StepDownResult:
    """Rank markers by individual objective, then add one at a time.

    ``score_objective`` maps a list of per-category score vectors to a float.
    Ties in the individual ranking break toward the original column order.
    Each added marker's coefficient comes from the bracketed 1-D search over
    the combined score V + coef * column.
    """
    d = data.n_markers
    columns = [[x[:, k] for x in data.categories] for k in range(d)]
    individual = [float(score_objective(columns[k])) for k in range(d)]
    ordering = tuple(sorted(range(d), key=lambda k: (-individual[k], k)))

    anchor = ordering[0]
    combined = [col.copy() for col in columns[anchor]]
    beta = np.zeros(d)
    beta[anchor] = 1.0
    stage_values = [individual[anchor]]

    for k in ordering[1:]:
        cols = columns[k]

        def slice_objective(coef, cols=cols):
            return score_objective(
                [v + coef * c for v, c in zip(combined, cols)]
            )

        res = brent_maximize_1d(slice_objective, cfg)
        coef = float(res.argmax[0])
        beta[k] = coef
        combined = [v + coef * c for v, c in zip(combined, cols)]
        stage_values.append(res.value)

    return StepDownResult(beta, anchor, ordering, tuple(stage_values))
