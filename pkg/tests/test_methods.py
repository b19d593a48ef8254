import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import shumfit.methods as methods
from shumfit import (
    FitConfig,
    MarkerDataset,
    METHOD_NAMES,
    bootstrap_se,
    ehum_fast,
    fit_empirical,
    fit_frechet,
    fit_method,
    fit_minmax,
    fit_naive,
    fit_nshum,
    fit_parametric_normal,
    fit_sshum,
    polish_bfgs,
    project_scores,
    unit_norm_aligned,
)
from shumfit.errors import (
    BootstrapUnstable,
    DimensionMismatch,
    EmptyInput,
    InvalidParameter,
    SmoothObjectiveRequired,
    WrongCategoryCount,
)

from oracles import dot_scores, make_dataset


def separated_dataset(rng, sizes=(15, 15, 15), d=2, gap=3.0, sd=0.3):
    cats = []
    for j, n in enumerate(sizes):
        cats.append(rng.normal(gap * j, sd, size=(n, d)))
    names = tuple(f"m{k + 1}" for k in range(d))
    return MarkerDataset(tuple(cats), names, tuple(str(j) for j in range(len(sizes))))


def test_single_marker_everything_is_identity():
    rng = np.random.default_rng(0)
    data = make_dataset(rng, m=3, sizes=(10, 10, 10), d=1, spread=1.5)
    for method in ("sshum", "nshum", "empirical"):
        rep = fit_method(data, method)
        assert rep.coefficients.beta.tolist() == [1.0]
        assert rep.coefficients.anchor_index == 0


def test_smooth_fits_track_empirical_on_separated_data():
    rng = np.random.default_rng(1)
    data = separated_dataset(rng)
    emp = fit_empirical(data)
    assert emp.ehum_at_solution >= 0.99
    for fitter in (fit_sshum, fit_nshum):
        rep = fitter(data)
        assert rep.ehum_at_solution == pytest.approx(emp.ehum_at_solution, abs=0.01)
        assert rep.converged


def test_report_ehum_matches_independent_reevaluation():
    rng = np.random.default_rng(2)
    data = make_dataset(rng, m=3, sizes=(12, 11, 13), d=3, spread=1.0)
    for method in METHOD_NAMES:
        rep = fit_method(data, method)
        if method == "minmax":
            coef = rep.coefficients.beta[1]
            scores = [x.max(axis=1) + coef * x.min(axis=1) for x in data.categories]
        else:
            scores = project_scores(data, rep.coefficients.beta)
        assert rep.ehum_at_solution == pytest.approx(
            ehum_fast(scores).value, abs=1e-12
        ), method


def test_positive_rescaling_leaves_ehum_unchanged():
    rng = np.random.default_rng(3)
    data = make_dataset(rng, m=3, sizes=(9, 9, 9), d=2, spread=1.0)
    rep = fit_empirical(data)
    doubled = ehum_fast(project_scores(data, 2.0 * rep.coefficients.beta)).value
    assert doubled == rep.ehum_at_solution


def test_polish_requires_smooth_objective():
    rng = np.random.default_rng(4)
    data = make_dataset(rng, m=3, sizes=(6, 6, 6), d=2, spread=1.0)
    with pytest.raises(SmoothObjectiveRequired):
        polish_bfgs(data, "empirical", np.array([1.0, 0.5]), 0, FitConfig())


def test_closed_form_matches_hand_solved_system():
    rng = np.random.default_rng(5)
    data = make_dataset(rng, m=3, sizes=(20, 18, 22), d=3, spread=1.0)
    rep = fit_parametric_normal(data, mode="closed_form")

    mus = [np.mean(x, axis=0) for x in data.categories]
    pooled = np.zeros((3, 3))
    dof = 0
    for x in data.categories:
        n = x.shape[0]
        pooled += (n - 1) * np.cov(x.T)
        dof += n - 1
    pooled /= dof
    delta = 0.5 * ((mus[1] - mus[0]) + (mus[2] - mus[1]))
    want = np.linalg.solve(pooled, delta)

    got = unit_norm_aligned(rep.coefficients.beta, want)
    np.testing.assert_allclose(got, unit_norm_aligned(want), atol=1e-10)
    assert rep.iterations == 0 and rep.converged


def test_closed_form_recovers_known_direction_in_large_samples():
    rng = np.random.default_rng(6)
    cats = [rng.normal(mu * np.array([1.0, 2.0]), 1.0, size=(4000, 2)) for mu in range(3)]
    data = MarkerDataset(tuple(cats), ("a", "b"), ("0", "1", "2"))
    rep = fit_parametric_normal(data, mode="closed_form")
    got = unit_norm_aligned(rep.coefficients.beta, [1.0, 2.0])
    np.testing.assert_allclose(got, np.array([1.0, 2.0]) / np.sqrt(5.0), atol=0.05)


def test_closed_form_identity_covariance_returns_delta():
    # categories share one whitened row block, so the pooled sample
    # covariance is exactly I and the direction must equal the mean spacing
    rng = np.random.default_rng(21)
    z = rng.normal(size=(12, 3))
    z -= z.mean(axis=0)
    z = z @ np.linalg.inv(np.linalg.cholesky(np.cov(z.T))).T
    delta = np.array([0.4, 1.0, 1.6])
    cats = tuple(z + i * delta for i in range(3))
    data = MarkerDataset(cats, ("a", "b", "c"), ("0", "1", "2"))
    rep = fit_parametric_normal(data, mode="closed_form")
    ratio = rep.coefficients.beta / rep.coefficients.beta[0]
    np.testing.assert_allclose(ratio, delta / delta[0], atol=1e-9)


def test_integral_mode_requires_three_categories():
    rng = np.random.default_rng(7)
    data = make_dataset(rng, m=4, sizes=(8, 8, 8, 8), d=2, spread=1.0)
    with pytest.raises(WrongCategoryCount):
        fit_parametric_normal(data, mode="integral")


def test_auto_mode_selects_integral_for_three_categories():
    rng = np.random.default_rng(8)
    data = make_dataset(rng, m=3, sizes=(15, 15, 15), d=2, spread=1.0)
    auto = fit_parametric_normal(data, mode="auto")
    integral = fit_parametric_normal(data, mode="integral")
    np.testing.assert_array_equal(auto.coefficients.beta, integral.coefficients.beta)

    data4 = make_dataset(rng, m=4, sizes=(8, 8, 8, 8), d=2, spread=1.0)
    auto4 = fit_parametric_normal(data4, mode="auto")
    assert auto4.iterations == 0  # closed form needs no iterations


def test_integral_refinement_never_loses_to_its_start():
    rng = np.random.default_rng(9)
    data = make_dataset(rng, m=3, sizes=(25, 25, 25), d=2, spread=0.8)
    closed = fit_parametric_normal(data, mode="closed_form")
    refined = fit_parametric_normal(data, mode="integral")
    mus, covs = methods._category_moments(data)
    assert methods._gaussian_ordering_probability(
        refined.coefficients.beta, mus, covs
    ) >= methods._gaussian_ordering_probability(
        closed.coefficients.beta, mus, covs
    ) - 1e-12


def test_gaussian_ordering_probability_against_monte_carlo():
    rng = np.random.default_rng(10)
    mus = [np.array([0.0]), np.array([1.0]), np.array([2.0])]
    covs = [np.array([[1.0]])] * 3
    beta = np.array([1.0])
    x, y, z = (rng.normal(m[0], 1.0, size=400_000) for m in mus)
    mc = np.mean((x < y) & (y < z))
    got = methods._gaussian_ordering_probability(beta, mus, covs)
    assert got == pytest.approx(mc, abs=0.005)


def test_minmax_needs_two_markers_and_reports_derived_pair():
    rng = np.random.default_rng(11)
    with pytest.raises(DimensionMismatch):
        fit_minmax(make_dataset(rng, m=3, sizes=(6, 6, 6), d=1, spread=1.0))
    data = separated_dataset(rng, d=3)
    rep = fit_minmax(data)
    assert rep.method == "minmax"
    assert rep.coefficients.beta[0] == 1.0
    assert rep.coefficients.anchor_index == 0
    assert rep.ehum_at_solution >= 0.9  # max of separated markers still separates


def test_frechet_bounds_and_bad_bound():
    rng = np.random.default_rng(12)
    data = make_dataset(rng, m=3, sizes=(10, 10, 10), d=2, spread=1.0)
    upper = fit_frechet(data, bound="upper")
    lower = fit_frechet(data, bound="lower")
    assert upper.method == "frechet_upper"
    assert lower.method == "frechet_lower"
    assert fit_frechet(data).method == "frechet_upper"
    with pytest.raises(InvalidParameter):
        fit_frechet(data, bound="middle")


@given(st.integers(1, 12))
@settings(max_examples=12, deadline=None)
def test_naive_weights_have_unit_norm(d):
    rng = np.random.default_rng(d)
    data = make_dataset(rng, m=3, sizes=(5, 5, 5), d=d, spread=1.0)
    rep = fit_naive(data)
    assert np.linalg.norm(rep.coefficients.beta) == pytest.approx(1.0)
    assert len(set(rep.coefficients.beta.tolist())) == 1
    assert rep.coefficients.anchor_index is None


def test_unknown_method_rejected():
    rng = np.random.default_rng(13)
    data = make_dataset(rng, m=3, sizes=(5, 5, 5), d=2, spread=1.0)
    with pytest.raises(InvalidParameter):
        fit_method(data, "logit")


def test_unit_norm_aligned_conventions():
    v = unit_norm_aligned([3.0, 4.0])
    np.testing.assert_allclose(v, [0.6, 0.8])
    flipped = unit_norm_aligned([-3.0, -4.0], reference=[1.0, 1.0])
    np.testing.assert_allclose(flipped, [0.6, 0.8])
    assert unit_norm_aligned([0.0, 0.0]).tolist() == [0.0, 0.0]


def test_bootstrap_is_deterministic_for_fixed_seed():
    rng = np.random.default_rng(14)
    data = make_dataset(rng, m=3, sizes=(10, 9, 11), d=2, spread=1.2)
    a = bootstrap_se(data, "minmax", B=6, seed=99)
    b = bootstrap_se(data, "minmax", B=6, seed=99)
    np.testing.assert_array_equal(a.se_coefficients, b.se_coefficients)
    assert a.se_ehum == b.se_ehum
    assert a.n_replicates == 6 and a.n_failures == 0
    assert a.convention == "unit_norm_aligned"


def test_bootstrap_differs_across_seeds():
    rng = np.random.default_rng(15)
    data = make_dataset(rng, m=3, sizes=(10, 9, 11), d=2, spread=1.2)
    a = bootstrap_se(data, "minmax", B=6, seed=1)
    b = bootstrap_se(data, "minmax", B=6, seed=2)
    assert a.se_ehum != b.se_ehum


def test_bootstrap_degenerate_data_gives_zero_se():
    # every row within a category identical: resampling is a no-op
    cats = tuple(np.tile([[float(j), 2.0 * j]], (5, 1)) for j in range(3))
    data = MarkerDataset(cats, ("a", "b"), ("0", "1", "2"))
    summary = bootstrap_se(data, "naive", B=2, seed=0)
    assert summary.se_ehum == 0.0
    np.testing.assert_array_equal(summary.se_coefficients, [0.0, 0.0])


def test_bootstrap_rejects_tiny_b():
    rng = np.random.default_rng(16)
    data = make_dataset(rng, m=3, sizes=(8, 8, 8), d=2, spread=1.0)
    with pytest.raises(InvalidParameter):
        bootstrap_se(data, "naive", B=1)


def test_bootstrap_tolerates_sparse_failures(monkeypatch):
    rng = np.random.default_rng(17)
    data = make_dataset(rng, m=3, sizes=(8, 8, 8), d=2, spread=1.0)
    calls = {"n": 0}

    def flaky(d, cfg):
        calls["n"] += 1
        if calls["n"] == 3:  # point fit is call 1; fail one replicate
            raise EmptyInput("injected")
        return fit_naive(d)

    monkeypatch.setitem(methods._FITTERS, "naive", flaky)
    summary = bootstrap_se(data, "naive", B=20, seed=0)
    assert summary.n_failures == 1
    assert summary.n_replicates == 20


def test_bootstrap_aborts_when_most_replicates_fail(monkeypatch):
    rng = np.random.default_rng(18)
    data = make_dataset(rng, m=3, sizes=(8, 8, 8), d=2, spread=1.0)
    calls = {"n": 0}

    def flaky(d, cfg):
        calls["n"] += 1
        if calls["n"] > 1:
            raise EmptyInput("injected")
        return fit_naive(d)

    monkeypatch.setitem(methods._FITTERS, "naive", flaky)
    with pytest.raises(BootstrapUnstable) as exc:
        bootstrap_se(data, "naive", B=5, seed=0)
    assert exc.value.n_failed == 5
    assert exc.value.n_total == 5


def test_resample_preserves_shapes_and_pool():
    rng = np.random.default_rng(19)
    data = make_dataset(rng, m=3, sizes=(7, 6, 9), d=2, spread=1.0)
    boot = methods._resample(data, np.random.default_rng(0))
    assert boot.sizes == data.sizes
    assert boot.marker_names == data.marker_names
    for orig, out in zip(data.categories, boot.categories):
        pool = {tuple(row) for row in orig}
        assert all(tuple(row) in pool for row in out)


def test_fit_reports_are_on_the_anchored_scale():
    rng = np.random.default_rng(20)
    data = make_dataset(rng, m=3, sizes=(10, 10, 10), d=3, spread=1.0)
    for method in ("sshum", "nshum", "empirical"):
        rep = fit_method(data, method)
        anchor = rep.coefficients.anchor_index
        assert rep.coefficients.beta[anchor] == 1.0
