"""The six combination fitters and the stratified bootstrap.

Every fitter returns a :class:`FitReport` whose ``ehum_at_solution`` is the
exact empirical HUM re-evaluated at the reported coefficients — that is the
number the study tables compare, regardless of which surrogate objective a
method optimized.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .data import Coefficients, MarkerDataset, anchored_to_full, project_scores
from .errors import (
    BootstrapUnstable,
    DimensionMismatch,
    InvalidParameter,
    ShumFitError,
    SingularCovariance,
    SmoothObjectiveRequired,
    WrongCategoryCount,
)
from .hum import average_adjacent_auc, ehum_fast, min_adjacent_auc
from .optimize import (
    OptimConfig,
    OptimResult,
    bfgs_maximize,
    brent_maximize_1d,
    nelder_mead_maximize,
    step_down,
)
from .smooth import (
    Kernel,
    SmoothingSpec,
    default_lambda,
    shum_from_scores,
    shum_gradient,
    shum_value,
)

SMOOTH_KINDS = ("sshum", "nshum")
METHOD_NAMES = (
    "sshum", "nshum", "empirical", "parametric", "minmax", "frechet", "naive",
)


@dataclass(frozen=True)
class FitConfig:
    """Knobs shared by the fitters.

    ``lam=None`` means the 1/sqrt(total n) rule; ``parametric_mode`` "auto"
    picks the 3-category integral when applicable, the closed form otherwise.
    """

    lam: Optional[float] = None
    optim: OptimConfig = field(default_factory=OptimConfig)
    parametric_mode: str = "auto"        # auto | closed_form | integral
    frechet_bound: str = "upper"         # upper | lower


@dataclass(frozen=True)
class BootstrapSummary:
    se_coefficients: np.ndarray
    se_ehum: float
    n_replicates: int
    n_failures: int
    convention: str = "unit_norm_aligned"


@dataclass(frozen=True)
class FitReport:
    method: str
    coefficients: Coefficients
    ehum_at_solution: float
    objective_at_solution: float
    iterations: int
    converged: bool
    bootstrap: Optional[BootstrapSummary] = None


def _smoothing(data: MarkerDataset, cfg: FitConfig, kernel: Kernel) -> SmoothingSpec:
    lam = cfg.lam if cfg.lam is not None else default_lambda(data.n_total)
    return SmoothingSpec(kernel, lam)


def _ehum_objective(scores) -> float:
    return ehum_fast(scores).value


def _ehum_at(data: MarkerDataset, beta) -> float:
    return ehum_fast(project_scores(data, beta)).value


def unit_norm_aligned(beta, reference=None) -> np.ndarray:
    """Scale to unit Euclidean norm, sign-aligned to ``reference``.

    The common convention for comparing coefficient vectors across bootstrap
    replicates that may anchor at different markers.
    """
    beta = np.asarray(beta, dtype=float)
    norm = float(np.linalg.norm(beta))
    if norm == 0.0:
        return beta.copy()
    out = beta / norm
    if reference is not None and float(out @ np.asarray(reference, dtype=float)) < 0:
        out = -out
    return out


# ---------------------------------------------------------------------------
# smooth-objective polish
# ---------------------------------------------------------------------------

def polish_bfgs(data: MarkerDataset, objective_kind: str, beta_init,
                anchor_index: int, cfg: FitConfig) -> OptimResult:
    """Simultaneous quasi-Newton refinement of all free coefficients.

    Only the smooth objectives are eligible; the empirical and bound
    objectives are piecewise constant and belong to the simplex polisher.
    Returns the better of the refined point and the start.
    """
    if objective_kind not in SMOOTH_KINDS:
        raise SmoothObjectiveRequired(
            f"cannot run gradient polish on objective {objective_kind!r}"
        )
    kernel = Kernel.SIGMOID if objective_kind == "sshum" else Kernel.NORMAL
    spec = _smoothing(data, cfg, kernel)
    beta_init = np.asarray(beta_init, dtype=float)
    theta0 = np.delete(beta_init, anchor_index)

    def f_and_grad(theta):
        beta = anchored_to_full(theta, anchor_index)
        return (
            shum_value(data, beta, spec),
            shum_gradient(data, beta, spec, anchor_index),
        )

    res = bfgs_maximize(f_and_grad, theta0, cfg.optim)
    v0 = shum_value(data, beta_init, spec)
    if res.value >= v0:
        return res
    return OptimResult(theta0, v0, res.iterations, res.converged, res.gradient_norm)


def _polish_nm(data: MarkerDataset, score_objective: Callable, beta_init,
               anchor_index: int, cfg: FitConfig) -> OptimResult:
    beta_init = np.asarray(beta_init, dtype=float)
    theta0 = np.delete(beta_init, anchor_index)

    def f(theta):
        beta = anchored_to_full(theta, anchor_index)
        return score_objective(project_scores(data, beta))

    return nelder_mead_maximize(f, theta0, cfg.optim)


def _report(data, method, beta, anchor, objective_value, iterations, converged) -> FitReport:
    return FitReport(
        method=method,
        coefficients=Coefficients(beta, anchor),
        ehum_at_solution=_ehum_at(data, beta),
        objective_at_solution=float(objective_value),
        iterations=int(iterations),
        converged=bool(converged),
    )


# ---------------------------------------------------------------------------
# the six methods
# ---------------------------------------------------------------------------

def _fit_smooth(data: MarkerDataset, cfg: FitConfig, kind: str) -> FitReport:
    kernel = Kernel.SIGMOID if kind == "sshum" else Kernel.NORMAL
    spec = _smoothing(data, cfg, kernel)
    sd = step_down(lambda s: shum_from_scores(s, spec), data, cfg.optim)
    res = polish_bfgs(data, kind, sd.beta, sd.anchor_index, cfg)
    beta = anchored_to_full(res.argmax, sd.anchor_index)
    return _report(data, kind, beta, sd.anchor_index, res.value,
                   res.iterations, res.converged)


def fit_sshum(data: MarkerDataset, cfg: FitConfig = FitConfig()) -> FitReport:
    """Step-down then BFGS polish on the sigmoid-smoothed objective."""
    return _fit_smooth(data, cfg, "sshum")


def fit_nshum(data: MarkerDataset, cfg: FitConfig = FitConfig()) -> FitReport:
    """Step-down then BFGS polish on the normal-CDF-smoothed objective."""
    return _fit_smooth(data, cfg, "nshum")


def fit_empirical(data: MarkerDataset, cfg: FitConfig = FitConfig()) -> FitReport:
    """Direct maximization of the exact empirical HUM.

    Step-down with the 1-D bracketed search per stage, then a Nelder-Mead
    polish over all free coefficients (the objective is piecewise constant,
    so improvement over the start is a weak inequality).
    """
    sd = step_down(_ehum_objective, data, cfg.optim)
    res = _polish_nm(data, _ehum_objective, sd.beta, sd.anchor_index, cfg)
    beta = anchored_to_full(res.argmax, sd.anchor_index)
    return _report(data, "empirical", beta, sd.anchor_index, res.value,
                   res.iterations, res.converged)


def fit_frechet(data: MarkerDataset, cfg: FitConfig = FitConfig(),
                bound: Optional[str] = None) -> FitReport:
    """Maximize a HUM envelope: upper = min adjacent AUC, lower = average.

    The upper bound is the default reporting choice; either way the report's
    ehum_at_solution is the exact empirical HUM at the solution.
    """
    bound = (bound or cfg.frechet_bound).lower()
    if bound not in ("upper", "lower"):
        raise InvalidParameter(f"unknown bound {bound!r}")
    objective = min_adjacent_auc if bound == "upper" else average_adjacent_auc
    sd = step_down(objective, data, cfg.optim)
    res = _polish_nm(data, objective, sd.beta, sd.anchor_index, cfg)
    beta = anchored_to_full(res.argmax, sd.anchor_index)
    return _report(data, f"frechet_{bound}", beta, sd.anchor_index, res.value,
                   res.iterations, res.converged)


def fit_minmax(data: MarkerDataset, cfg: FitConfig = FitConfig()) -> FitReport:
    """Single free coefficient on each subject's (max, min) marker pair."""
    if data.n_markers < 2:
        raise DimensionMismatch("min-max combination needs at least 2 markers")
    maxima = [x.max(axis=1) for x in data.categories]
    minima = [x.min(axis=1) for x in data.categories]

    def f(coef):
        return ehum_fast([hi + coef * lo for hi, lo in zip(maxima, minima)]).value

    res = brent_maximize_1d(f, cfg.optim)
    coef = float(res.argmax[0])
    return FitReport(
        method="minmax",
        coefficients=Coefficients(np.array([1.0, coef]), 0),
        ehum_at_solution=float(res.value),
        objective_at_solution=float(res.value),
        iterations=res.iterations,
        converged=res.converged,
    )


def fit_parametric_normal(data: MarkerDataset, cfg: FitConfig = FitConfig(),
                          mode: Optional[str] = None) -> FitReport:
    """Normal-model combination: closed form or 3-category integral.

    ClosedForm solves pooled_cov @ x = mean adjacent mean-difference (the
    optimum under a common covariance with equal spacing).  The integral mode
    plugs per-category moments into the Gaussian ordering probability,
    evaluated by 201-node Gauss-Legendre quadrature on [-8, 8], and maximizes
    it by BFGS with finite-difference gradients from the closed-form start.
    """
    mode = (mode or cfg.parametric_mode).lower()
    if mode == "auto":
        mode = "integral" if data.n_categories == 3 else "closed_form"
    if mode not in ("closed_form", "integral"):
        raise InvalidParameter(f"unknown parametric mode {mode!r}")

    beta_cf = _closed_form_direction(data)
    beta_cf, anchor = _anchor_preserving_orientation(beta_cf)
    if mode == "closed_form" or data.n_markers == 1:
        scores = project_scores(data, beta_cf)
        return FitReport(
            method="parametric",
            coefficients=Coefficients(beta_cf, anchor),
            ehum_at_solution=ehum_fast(scores).value,
            objective_at_solution=ehum_fast(scores).value,
            iterations=0,
            converged=True,
        )

    if data.n_categories != 3:
        raise WrongCategoryCount(
            f"integral mode needs exactly 3 categories, got {data.n_categories}"
        )
    mus, covs = _category_moments(data)
    if anchor is None:
        # orientation fallback: anchor the largest-magnitude coefficient
        anchor = int(np.argmax(np.abs(beta_cf)))
        beta_cf = beta_cf / beta_cf[anchor]

    def d_n(beta):
        return _gaussian_ordering_probability(beta, mus, covs)

    def f_and_grad(theta):
        beta = anchored_to_full(theta, anchor)
        return d_n(beta), _central_fd(lambda t: d_n(anchored_to_full(t, anchor)), theta)

    res = bfgs_maximize(f_and_grad, np.delete(beta_cf, anchor), cfg.optim)
    beta = anchored_to_full(res.argmax, anchor)
    return _report(data, "parametric", beta, anchor, res.value,
                   res.iterations, res.converged)


def fit_naive(data: MarkerDataset) -> FitReport:
    """Equal weights at unit Euclidean norm; no optimization."""
    d = data.n_markers
    beta = np.full(d, 1.0 / np.sqrt(d))
    value = _ehum_at(data, beta)
    return FitReport(
        method="naive",
        coefficients=Coefficients(beta, None),
        ehum_at_solution=value,
        objective_at_solution=value,
        iterations=0,
        converged=True,
    )


# ---------------------------------------------------------------------------
# parametric internals
# ---------------------------------------------------------------------------

def _category_moments(data: MarkerDataset):
    mus = [x.mean(axis=0) for x in data.categories]
    covs = []
    for label, x in zip(data.category_labels, data.categories):
        if x.shape[0] < 2:
            raise SingularCovariance(
                f"category {label!r} needs >= 2 rows for a covariance estimate"
            )
        covs.append(np.atleast_2d(np.cov(x.T)))
    return mus, covs


def _closed_form_direction(data: MarkerDataset) -> np.ndarray:
    mus = [x.mean(axis=0) for x in data.categories]
    weights = [x.shape[0] - 1 for x in data.categories]
    if sum(weights) <= 0:
        raise SingularCovariance("need at least one category with >= 2 rows")
    pooled = np.zeros((data.n_markers, data.n_markers))
    for w, x in zip(weights, data.categories):
        if w > 0:
            pooled += w * np.atleast_2d(np.cov(x.T))
    pooled /= sum(weights)
    delta = np.mean([mus[j + 1] - mus[j] for j in range(len(mus) - 1)], axis=0)
    try:
        direction = np.linalg.solve(pooled, delta)
    except np.linalg.LinAlgError:
        raise SingularCovariance("pooled covariance is singular") from None
    if not np.all(np.isfinite(direction)):
        raise SingularCovariance("pooled covariance is numerically singular")
    return direction


def _anchor_preserving_orientation(beta: np.ndarray):
    """Anchor at the last marker when that keeps orientation; else unit norm.

    HUM is invariant to positive scaling only, so dividing by a negative
    coefficient would flip the ranking direction.
    """
    d = beta.size
    if beta[d - 1] > 1e-10:
        return beta / beta[d - 1], d - 1
    return unit_norm_aligned(beta), None


_GL_NODES = None


def _quadrature_nodes():
    global _GL_NODES
    if _GL_NODES is None:
        x, w = np.polynomial.legendre.leggauss(201)
        u = 8.0 * x
        _GL_NODES = (u, 8.0 * w * np.exp(-0.5 * u * u) / np.sqrt(2.0 * np.pi))
    return _GL_NODES


def _gaussian_ordering_probability(beta, mus, covs) -> float:
    from scipy.special import ndtr

    u, w = _quadrature_nodes()
    s = [max(float(np.sqrt(max(beta @ c @ beta, 0.0))), 1e-150) for c in covs]
    m = [float(beta @ mu) for mu in mus]
    low = ndtr((s[1] * u + (m[1] - m[0])) / s[0])
    high = ndtr((-s[1] * u + (m[2] - m[1])) / s[2])
    return float((low * high) @ w)


def _central_fd(f, theta, step=1e-6) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    grad = np.empty(theta.size)
    for i in range(theta.size):
        hi = theta.copy()
        lo = theta.copy()
        hi[i] += step
        lo[i] -= step
        grad[i] = (f(hi) - f(lo)) / (2.0 * step)
    return grad


# ---------------------------------------------------------------------------
# bootstrap
# ---------------------------------------------------------------------------

_FITTERS = {
    "sshum": fit_sshum,
    "nshum": fit_nshum,
    "empirical": fit_empirical,
    "parametric": fit_parametric_normal,
    "minmax": fit_minmax,
    "frechet": fit_frechet,
    "naive": lambda data, cfg: fit_naive(data),
}


def fit_method(data: MarkerDataset, method: str, cfg: FitConfig = FitConfig()) -> FitReport:
    """Dispatch a fit by method name (see METHOD_NAMES)."""
    if method not in _FITTERS:
        raise InvalidParameter(f"unknown method {method!r}")
    return _FITTERS[method](data, cfg)


def _resample(data: MarkerDataset, rng) -> MarkerDataset:
    # stratified: resample with replacement within each category, sizes kept
    categories = tuple(
        x[rng.integers(0, x.shape[0], x.shape[0])] for x in data.categories
    )
    return MarkerDataset(categories, data.marker_names, data.category_labels,
                         data.n_dropped)


def bootstrap_se(data: MarkerDataset, method: str, B: int = 100, seed: int = 0,
                 cfg: FitConfig = FitConfig()) -> BootstrapSummary:
    """Stratified bootstrap standard errors for one method.

    Replicate r uses an independent generator seeded seed + r, so results do
    not depend on scheduling.  Coefficients are converted to unit Euclidean
    norm aligned with the point estimate before taking standard deviations
    (replicates may anchor at different markers).  More than 10% failed
    replicates aborts.
    """
    if B < 2:
        raise InvalidParameter(f"need B >= 2 bootstrap replicates, got {B}")
    point = fit_method(data, method, cfg)
    reference = unit_norm_aligned(point.coefficients.beta)

    coefs = []
    ehums = []
    n_failed = 0
    for r in range(B):
        rng = np.random.default_rng(seed + r)
        try:
            rep = fit_method(_resample(data, rng), method, cfg)
        except (ShumFitError, np.linalg.LinAlgError):
            n_failed += 1
            continue
        coefs.append(unit_norm_aligned(rep.coefficients.beta, reference))
        ehums.append(rep.ehum_at_solution)
    if n_failed > 0.10 * B:
        raise BootstrapUnstable(n_failed, B)

    coefs = np.asarray(coefs)
    ehums = np.asarray(ehums)
    return BootstrapSummary(
        se_coefficients=np.std(coefs, axis=0, ddof=1),
        se_ehum=float(np.std(ehums, ddof=1)),
        n_replicates=B,
        n_failures=n_failed,
    )
