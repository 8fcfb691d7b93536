import math

import numpy as np
import pytest
import statsmodels.api as sm
from hypothesis import given, settings
from hypothesis import strategies as st

from asylum_gdp import econ, kalman, models
from asylum_gdp.errors import DegenerateRegressor, MissingBaseline, SeriesTooShort
from asylum_gdp.series import AnnualSeries, SeedSpec, Unit, generate_synthetic

seeds = st.integers(0, 2**31 - 1)


def synthetic_levels(seed, n=40, omega=0.8, mu=0.3, sigma_eps=0.05, scale=0.05):
    x, y = generate_synthetic(SeedSpec(seed, "tvp_loglog", n, omega=omega, mu=mu,
                                       sigma_eps=sigma_eps, scale=scale))
    level = lambda s: AnnualSeries("SY", s.start_year, np.exp(s.values), Unit.PER_CAPITA_10K)
    return level(y), level(x)


@given(seeds, st.integers(6, 40))
@settings(max_examples=30, deadline=None)
def test_loglog_matches_statsmodels(seed, n):
    y, x = synthetic_levels(seed, n, sigma_eps=0.3, scale=0.3)
    fit = models.fit_loglog(y, x.window(y.start_year), lag=0)
    ly, lx = np.log(y.values), np.log(x.window(y.start_year).values)
    ref = sm.OLS(ly, sm.add_constant(lx)).fit()
    np.testing.assert_allclose([fit.mu, fit.omega], ref.params, rtol=1e-9, atol=1e-12)
    assert fit.r_squared == pytest.approx(ref.rsquared, abs=1e-10)


def test_loglog_lag_pairs_with_previous_year():
    y, x = synthetic_levels(1, 30, sigma_eps=0.0)
    fit = models.fit_loglog(y, x, lag=1)
    assert fit.mu == pytest.approx(0.3, abs=1e-9) and fit.omega == pytest.approx(0.8, abs=1e-9)
    assert fit.residuals.start_year == y.start_year


def test_loglog_rejects_degenerate_input():
    y = AnnualSeries("C", 2000, np.arange(1.0, 7.0))
    with pytest.raises(DegenerateRegressor):
        models.fit_loglog(y, AnnualSeries("C", 2000, np.full(6, 3.0)))
    with pytest.raises(SeriesTooShort):
        models.fit_loglog(y.window(2000, 2002), y.window(2000, 2002))


def test_ratio_model_outputs():
    y, x = synthetic_levels(2, 25)
    fit = models.fit_ratio_model(y, x, ratio_lag=1, burn_in=2)
    assert fit.smoothed.start_year == y.start_year + 2 and fit.smoothed.end_year == y.end_year
    Y, X = y.window(fit.crude.start_year), x.window(fit.crude.start_year, y.end_year)
    np.testing.assert_allclose(fit.crude.values, Y.values / X.values)
    assert fit.smoothed.values[-1] == fit.filtered.values[-1]
    assert set(fit.variances) == {"sigma2_eps", "sigma2_rho"}
    assert np.all(fit.smoothed_var.values >= 0)


def test_ratio_model_with_constant_ratio_recovers_it():
    rng = np.random.default_rng(0)
    x = AnnualSeries("C", 1990, 100 + np.cumsum(rng.normal(size=30)))
    y = AnnualSeries("C", 1991, 0.02 * x.values[:-1] * (1 + 0.001 * rng.normal(size=29)))
    fit = models.fit_ratio_model(y, x, ratio_lag=1)
    np.testing.assert_allclose(fit.smoothed.values, 0.02, rtol=5e-3)


def test_ratio_model_checks():
    x = AnnualSeries("C", 2000, np.arange(1.0, 8.0))
    with pytest.raises(SeriesTooShort):
        models.fit_ratio_model(x, x)
    with pytest.raises(ValueError):
        models.fit_ratio_model(x, x, ratio_lag=2)


def test_fully_restricted_fit_is_the_ridge_posterior():
    y, x = synthetic_levels(5, 30)
    fit = models.fit_elasticity_model(y, x, restrict="both")
    ly = np.log(y.values)
    Z = np.column_stack([np.ones(30), np.log(x.values[:-1])])
    h = fit.variances["sigma2_eps"]
    ridge = np.linalg.solve(Z.T @ Z + h / kalman.DIFFUSE_KAPPA * np.eye(2), Z.T @ ly)
    np.testing.assert_allclose([fit.mu_hat, fit.mean_omega], ridge, rtol=1e-7)
    assert np.ptp(fit.omega_path.values) < 1e-9
    assert fit.variances["sigma2_mu"] == fit.variances["sigma2_omega"] == 0.0


def test_fully_restricted_fit_is_ols_on_well_conditioned_data():
    rng = np.random.default_rng(3)
    n = 30
    lx = rng.normal(scale=1.0, size=n + 1)
    ly = 0.3 + 0.8 * lx[:-1] + 0.05 * rng.normal(size=n)
    y = AnnualSeries("W", 1981, np.exp(ly))
    x = AnnualSeries("W", 1980, np.exp(lx))
    fit = models.fit_elasticity_model(y, x, restrict="both")
    ols = models.fit_loglog(y, x, lag=1)
    assert fit.mu_hat == pytest.approx(ols.mu, abs=1e-4)
    assert fit.mean_omega == pytest.approx(ols.omega, abs=1e-4)


@given(st.integers(0, 200))
@settings(max_examples=8, deadline=None)
def test_auto_restriction_follows_the_intercept_rule(seed):
    y, x = synthetic_levels(seed, 20, mu=0.05 * (seed % 3))
    free = models.fit_elasticity_model(y, x, restrict="none")
    auto = models.fit_elasticity_model(y, x, restrict="auto")
    assert auto.mu_restricted == (abs(free.mu_hat) < models.Z_CRIT * free.mu_se)
    if auto.mu_restricted:
        assert auto.variances["sigma2_mu"] == 0.0
        assert np.ptp(auto.mu_path.values) < 1e-8


def test_elasticity_recovers_constant_slope():
    y, x = synthetic_levels(0, 200)
    fit = models.fit_elasticity_model(y, x)
    assert fit.omega_path.start_year == y.start_year + 2
    assert np.max(np.abs(fit.omega_path.values - 0.8)) < 0.05
    assert fit.significant and not fit.low_reliability
    assert fit.n_obs == 200


def test_elasticity_reliability_and_notes():
    y, x = synthetic_levels(4, 12)
    fit = models.fit_elasticity_model(y, x)
    assert fit.low_reliability
    short = synthetic_levels(4, 7)
    with pytest.raises(SeriesTooShort):
        models.fit_elasticity_model(*short)


def test_elasticity_normalization_only_changes_the_scale_of_errors():
    y, x = synthetic_levels(6, 30)
    a = models.fit_elasticity_model(y, x, normalization="log")
    b = models.fit_elasticity_model(y, x, normalization="raw")
    np.testing.assert_array_equal(a.omega_path.values, b.omega_path.values)
    e = a.residuals.values
    assert a.diagnostics.are_pct == pytest.approx(100 * np.abs(e).sum() / np.log(y.values[2:]).sum())
    assert b.diagnostics.are_pct == pytest.approx(100 * np.abs(e).sum() / y.values[2:].sum())


def test_elasticity_argument_checks():
    y, x = synthetic_levels(0, 20)
    with pytest.raises(ValueError):
        models.fit_elasticity_model(y, x, restrict="sometimes")
    with pytest.raises(ValueError):
        models.fit_elasticity_model(y, x, normalization="z")
    flat = AnnualSeries("SY", x.start_year, np.full(len(x), 50.0))
    with pytest.raises(DegenerateRegressor):
        models.fit_elasticity_model(y, flat)


def test_diagnostics_block():
    e = np.array([1.0, -1.0, 2.0, -2.0, 0.5, -0.5, 1.0, -1.0])
    d = models.compute_diagnostics(e, np.full(8, 10.0))
    assert d.are_pct == pytest.approx(100 * 9 / 80)
    assert d.sse_pct == pytest.approx(100 * 12.5 / 80)
    assert d.box_pierce.reference["df"] == 2


def test_year_table_relative_to_baseline():
    fits = {c: models.fit_elasticity_model(*synthetic_levels(s, 20)) for c, s in (("A", 1), ("B", 2))}
    years = list(range(fits["A"].omega_path.start_year, fits["A"].omega_path.end_year + 1))
    rel = models.elasticity_year_table(fits, "A", years, relative=True)
    assert rel.row_for("A")["mean"] == 1.0
    b = rel.row_for("B")
    y0 = years[0]
    assert b[str(y0)] == pytest.approx(fits["B"].omega_path.value_at(y0) / fits["A"].omega_path.value_at(y0))
    with pytest.raises(MissingBaseline):
        models.elasticity_year_table(fits, "Z")


@pytest.mark.parametrize("c", [0.01, 3.0, 250.0])
def test_ratio_model_is_scale_equivariant(c):
    y, x = synthetic_levels(8, 25, sigma_eps=0.1, scale=0.1)
    a = models.fit_ratio_model(y, x)
    b = models.fit_ratio_model(y.with_values(c * y.values), x)
    np.testing.assert_allclose(b.crude.values, c * a.crude.values, rtol=1e-12)
    np.testing.assert_allclose(b.smoothed.values, c * a.smoothed.values, rtol=1e-4)


def test_mean_omega_is_the_mean_of_the_path(study):
    for r in study.reports.values():
        if r.elasticity is not None:
            e = r.elasticity
            assert e.mean_omega == float(np.mean(e.omega_path.values))
            assert len(e.residuals) == len(e.omega_path) == e.n_obs - 2
            assert np.isfinite(e.diagnostics.are_pct) and e.diagnostics.are_pct >= 0
            assert e.diagnostics.box_pierce.detail["n"] == len(e.residuals)


def test_diagnostics_of_a_perfect_fit():
    d = models.compute_diagnostics(np.zeros(12), np.full(12, 2.0))
    assert d.are_pct == 0.0 and d.sse_pct == 0.0
    assert d.box_pierce.decision.value == "Accept"


def test_diagnostics_flag_strong_autocorrelation():
    e = generate_synthetic(SeedSpec(0, "ar1", 25, phi=0.9)).values
    assert models.compute_diagnostics(e, np.full(25, 1.0)).box_pierce.decision.value == "Reject"
    draws = [generate_synthetic(SeedSpec(s, "ar1", 25, phi=0.9)).values for s in range(200)]
    power = np.mean([econ.box_pierce(d).decision.value == "Reject" for d in draws])
    assert power > 0.5
