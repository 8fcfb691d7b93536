import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from statsmodels.tsa.statespace.kalman_smoother import KalmanSmoother

from asylum_gdp import kalman
from asylum_gdp.errors import DegenerateInnovationVariance, TooFewObservations
from asylum_gdp.montecarlo import joint_moments, random_spec

seeds = st.integers(0, 2**31 - 1)


def draw(seed, n=12, m=2):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, n, m)
    mean, cov = joint_moments(spec)
    return spec, rng.multivariate_normal(mean, cov), mean, cov


def statsmodels_smoother(spec, y):
    """The same model in statsmodels, whose initial state is the first predicted one."""
    n, m = spec.Z.shape
    ks = KalmanSmoother(k_endog=1, k_states=m)
    ks.bind(y[:, None])
    ks["design"] = spec.Z.T[None, :, :]
    ks["obs_cov"] = np.array([[spec.meas_var]])
    ks["transition"] = spec.T
    ks["selection"] = np.eye(m)
    ks["state_cov"] = spec.Q
    ks.initialize_known(spec.T @ spec.a0, spec.T @ spec.P0 @ spec.T.T + spec.Q)
    return ks.smooth()


@given(seeds, st.integers(1, 2))
@settings(max_examples=40, deadline=None)
def test_loglik_equals_joint_gaussian_density(seed, m):
    spec, y, mean, cov = draw(seed, 10, m)
    ll = kalman.filter(spec, y, burn_in=0).loglik
    assert ll == pytest.approx(stats.multivariate_normal(mean, cov).logpdf(y), abs=1e-8)


@given(seeds, st.integers(0, 3))
@settings(max_examples=40, deadline=None)
def test_compiled_loglik_matches_filter(seed, burn_in):
    spec, y, *_ = draw(seed)
    assert kalman.loglik(spec, y, burn_in) == pytest.approx(kalman.filter(spec, y, burn_in).loglik,
                                                            abs=1e-9)


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_filter_and_smoother_match_statsmodels(seed):
    spec, y, *_ = draw(seed)
    ref = statsmodels_smoother(spec, y)
    run = kalman.smooth(kalman.filter(spec, y, burn_in=0), spec)
    assert run.loglik == pytest.approx(ref.llf_obs.sum(), abs=1e-8)
    np.testing.assert_allclose(run.filtered_mean, ref.filtered_state.T, atol=1e-8)
    np.testing.assert_allclose(run.innovation_var, ref.forecasts_error_cov[0, 0], rtol=1e-9)
    np.testing.assert_allclose(run.smoothed_mean, ref.smoothed_state.T, atol=1e-8)
    np.testing.assert_allclose(run.smoothed_cov, np.moveaxis(ref.smoothed_state_cov, 2, 0),
                               atol=1e-8)


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_smoother_final_step_is_the_filter(seed):
    spec, y, *_ = draw(seed)
    run = kalman.smooth(kalman.filter(spec, y), spec)
    assert np.array_equal(run.smoothed_mean[-1], run.filtered_mean[-1])
    assert np.array_equal(run.smoothed_cov[-1], run.filtered_cov[-1])


@given(seeds, st.floats(0.1, 10.0))
@settings(max_examples=25, deadline=None)
def test_loglik_rescaling(seed, c):
    """Scaling y by c and every variance by c^2 shifts the loglik by -n log c."""
    spec, y, *_ = draw(seed)
    scaled = kalman.StateSpaceSpec(spec.Z, spec.T, c**2 * spec.meas_var, c**2 * spec.Q,
                                   c * spec.a0, c**2 * spec.P0)
    burn = 2
    base = kalman.filter(spec, y, burn).loglik
    got = kalman.filter(scaled, c * y, burn).loglik
    assert got == pytest.approx(base - (y.size - burn) * math.log(c), abs=1e-8)


def test_burn_in_drops_leading_terms():
    spec, y, *_ = draw(7)
    full = kalman.filter(spec, y, 0)
    terms = -0.5 * (np.log(2 * np.pi) + np.log(full.innovation_var) + full.innovation**2
                    / full.innovation_var)
    assert kalman.filter(spec, y, 3).loglik == pytest.approx(terms[3:].sum(), abs=1e-10)


def test_constant_states_smooth_to_final_filtered_value():
    rng = np.random.default_rng(0)
    Z = np.column_stack([np.ones(15), rng.normal(size=15)])
    spec = kalman.StateSpaceSpec.random_walk_regression(Z, 0.3, 0.0)
    y = Z @ [1.0, 2.0] + rng.normal(scale=0.5, size=15)
    run = kalman.smooth(kalman.filter(spec, y), spec)
    np.testing.assert_allclose(run.smoothed_mean, np.broadcast_to(run.filtered_mean[-1], (15, 2)),
                               atol=1e-9)


def test_constant_state_filter_is_ridge_regression():
    """With no state noise the final filtered state is the posterior mean of a ridge fit."""
    rng = np.random.default_rng(1)
    Z = np.column_stack([np.ones(20), 4.6 + np.cumsum(rng.normal(scale=0.05, size=20))])
    y = Z @ [0.5, 1.2] + rng.normal(scale=0.1, size=20)
    H, kappa = 0.01, 1e6
    spec = kalman.StateSpaceSpec.random_walk_regression(Z, H, 0.0, kappa)
    final = kalman.filter(spec, y).filtered_mean[-1]
    ridge = np.linalg.solve(Z.T @ Z + H / kappa * np.eye(2), Z.T @ y)
    np.testing.assert_allclose(final, ridge, rtol=1e-8)


def test_degenerate_innovation_variance():
    spec = kalman.StateSpaceSpec(Z=np.zeros((4, 1)), T=np.eye(1), meas_var=0.0, Q=np.zeros((1, 1)),
                                 a0=np.zeros(1), P0=np.eye(1))
    with pytest.raises(DegenerateInnovationVariance):
        kalman.filter(spec, np.zeros(4))
    with pytest.raises(DegenerateInnovationVariance):
        kalman.loglik(spec, np.zeros(4))


def test_spec_validation():
    with pytest.raises(ValueError):
        kalman.StateSpaceSpec(np.ones((3, 1)), np.eye(1), -1.0, np.zeros((1, 1)), [0.0], np.eye(1))
    with pytest.raises(ValueError):
        kalman.StateSpaceSpec(np.ones((3, 2)), np.eye(2), 1.0, np.zeros((2, 2)), [0.0, 0.0],
                              [[1.0, 0.5], [0.0, 1.0]])
    spec = kalman.StateSpaceSpec.random_walk_regression(np.ones((3, 1)), 1.0, 1.0)
    with pytest.raises(ValueError):
        kalman.filter(spec, np.zeros(4))
    with pytest.raises(TooFewObservations):
        kalman.filter(kalman.StateSpaceSpec.random_walk_regression(np.ones((1, 1)), 1.0, 1.0), [1.0])


def test_mle_recovers_local_level_variances():
    rng = np.random.default_rng(42)
    n, s_eps, s_eta = 400, 0.5, 0.2
    level = np.cumsum(rng.normal(scale=s_eta, size=n))
    y = level + rng.normal(scale=s_eps, size=n)
    template = kalman.StateSpaceSpec.random_walk_regression(np.ones((n, 1)), 1.0, 1.0)
    res = kalman.fit_mle(template, y, {"eps": "meas", "eta": 0}, burn_in=1)
    assert res.variance_estimates["eps"] == pytest.approx(s_eps**2, rel=0.25)
    assert res.variance_estimates["eta"] == pytest.approx(s_eta**2, rel=0.5)
    # the optimum beats the truth and nearby points
    truth = template.with_variances(s_eps**2, {0: s_eta**2})
    assert res.loglik_at_optimum >= kalman.loglik(truth, y, 1) - 1e-9
    for f in (0.9, 1.1):
        moved = res.spec.with_variances(res.spec.meas_var * f)
        assert res.loglik_at_optimum >= kalman.loglik(moved, y, 1) - 1e-9


def test_mle_reports_vanishing_variance_as_zero():
    rng = np.random.default_rng(3)
    n = 60
    y = 2.0 + rng.normal(scale=0.3, size=n)
    template = kalman.StateSpaceSpec.random_walk_regression(np.ones((n, 1)), 1.0, 1.0)
    res = kalman.fit_mle(template, y, {"eps": "meas", "eta": 0})
    assert res.variance_estimates["eta"] < 1e-4 * res.variance_estimates["eps"]


def test_mle_argument_checks():
    template = kalman.StateSpaceSpec.random_walk_regression(np.ones((5, 1)), 1.0, 1.0)
    with pytest.raises(TooFewObservations):
        kalman.fit_mle(template, np.zeros(5), {"eps": "meas"})
    with pytest.raises(ValueError):
        kalman.fit_mle(template, np.zeros(5), {})


@given(seeds, st.integers(3, 40))
@settings(max_examples=30, deadline=None)
def test_static_local_level_tracks_running_mean(seed, n):
    y = np.random.default_rng(seed).normal(loc=3.0, size=n)
    spec = kalman.StateSpaceSpec.random_walk_regression(np.ones((n, 1)), 1.0, 0.0)
    run = kalman.filter(spec, y)
    running = np.cumsum(y) / np.arange(1, n + 1)
    # the big-kappa prior shrinks towards zero by a factor 1 / (1 + 1 / (t kappa))
    np.testing.assert_allclose(run.filtered_mean[:, 0], running, rtol=1e-5, atol=1e-6)


def test_early_innovation_variances_exceed_late_ones():
    rng = np.random.default_rng(2)
    Z = np.column_stack([np.ones(20), 4.6 + np.cumsum(rng.normal(scale=0.05, size=20))])
    spec = kalman.StateSpaceSpec.random_walk_regression(Z, 0.05, (0.01, 0.001))
    F = kalman.filter(spec, Z @ [0.3, 0.8] + rng.normal(scale=0.2, size=20)).innovation_var
    assert F[:2].min() > F[10:].max()
