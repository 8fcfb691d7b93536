"""Asylum/GDP models built on the state-space engine.

* ratio model: per-capita asylum regressed through the origin on (lagged)
  per-capita GDP with a random-walk coefficient, the smoothed ratio;
* constant-elasticity log-log regression;
* time-varying elasticity model: log asylum on ``[1, lagged log GDP]`` with
  random-walk intercept and slope, plus residual diagnostics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import econ, kalman
from .errors import DegenerateRegressor, MissingBaseline, SeriesTooShort
from .series import AnnualSeries, Unit, log_transform, overlap
from .tables import Table

MIN_SPAN = 8
RELIABLE_SPAN = 14
Z_CRIT = 1.96


@dataclass(frozen=True)
class RatioFit:
    crude: AnnualSeries
    smoothed: AnnualSeries
    smoothed_var: AnnualSeries
    filtered: AnnualSeries
    variances: dict
    loglik: float
    ratio_lag: int

    def to_dict(self) -> dict:
        return {
            "crude": self.crude.to_dict(),
            "smoothed": self.smoothed.to_dict(),
            "smoothed_var": self.smoothed_var.to_dict(),
            "filtered": self.filtered.to_dict(),
            "variances": self.variances,
            "loglik": self.loglik,
            "ratio_lag": self.ratio_lag,
        }


@dataclass(frozen=True)
class LogLogFit:
    mu: float
    omega: float
    residuals: AnnualSeries
    r_squared: float
    lag: int = 0

    def to_dict(self) -> dict:
        return {"mu": self.mu, "omega": self.omega, "r_squared": self.r_squared,
                "lag": self.lag, "residuals": self.residuals.to_dict()}


@dataclass(frozen=True)
class DiagnosticsBlock:
    are_pct: float
    sse_pct: float
    box_pierce: econ.TestOutcome
    arch: econ.TestOutcome

    def to_dict(self) -> dict:
        return {"are_pct": self.are_pct, "sse_pct": self.sse_pct,
                "box_pierce": self.box_pierce.to_dict(), "arch": self.arch.to_dict()}


@dataclass(frozen=True)
class ElasticityFit:
    mu_path: AnnualSeries
    omega_path: AnnualSeries
    omega_var_path: AnnualSeries
    mean_omega: float
    mu_hat: float
    mu_se: float
    variances: dict
    diagnostics: DiagnosticsBlock
    mu_restricted: bool
    n_obs: int
    significant: bool
    low_reliability: bool
    filtered_omega: AnnualSeries
    conditional_variance: AnnualSeries
    residuals: AnnualSeries
    loglik: float
    converged: bool = True
    notes: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "mu_path": self.mu_path.to_dict(),
            "omega_path": self.omega_path.to_dict(),
            "omega_var_path": self.omega_var_path.to_dict(),
            "filtered_omega": self.filtered_omega.to_dict(),
            "conditional_variance": self.conditional_variance.to_dict(),
            "residuals": self.residuals.to_dict(),
            "mean_omega": self.mean_omega,
            "mu_hat": self.mu_hat,
            "mu_se": self.mu_se,
            "variances": self.variances,
            "diagnostics": self.diagnostics.to_dict(),
            "mu_restricted": self.mu_restricted,
            "n_obs": self.n_obs,
            "significant": self.significant,
            "low_reliability": self.low_reliability,
            "loglik": self.loglik,
            "converged": self.converged,
            "notes": list(self.notes),
        }


def _lagged_design(y: AnnualSeries, x: AnnualSeries, lag: int):
    """Pair y_t with x_{t-lag} over the common years; returns (y_obs, x_lagged)."""
    if lag:
        x = x.with_values(x.values, start_year=x.start_year + lag)
    return overlap(y, x)


def fit_ratio_model(asylum_pc: AnnualSeries, gdp_pc: AnnualSeries, ratio_lag: int = 1,
                    burn_in: int = kalman.DEFAULT_BURN_IN,
                    kappa: float = kalman.DIFFUSE_KAPPA) -> RatioFit:
    """Crude ratio Y_t/X_t and the smoothed random-walk ratio from y_t = x_{t-lag} rho_t + e_t."""
    if ratio_lag not in (0, 1):
        raise ValueError("ratio_lag must be 0 or 1")
    Y, X = overlap(asylum_pc, gdp_pc)
    # the lag uses the full GDP series, so a year before the span costs nothing
    yo, xo = _lagged_design(asylum_pc, gdp_pc, ratio_lag)
    if len(yo) < MIN_SPAN:
        raise SeriesTooShort(f"{Y.country}: {len(yo)} aligned years, need {MIN_SPAN}")
    if np.any(X.values <= 0) or np.any(xo.values <= 0):
        raise DegenerateRegressor(f"{Y.country}: GDP must be positive")
    crude = Y.with_values(Y.values / X.values, unit=Unit.RATIO)

    template = kalman.StateSpaceSpec.random_walk_regression(xo.values[:, None], 1.0, 1.0, kappa)
    mle = kalman.fit_mle(template, yo, {"sigma2_eps": "meas", "sigma2_rho": 0}, burn_in=burn_in)
    run = kalman.smooth(kalman.filter(mle.spec, yo, burn_in), mle.spec)

    lo = yo.start_year + burn_in
    mk = lambda v: AnnualSeries(Y.country, yo.start_year, v, Unit.RATIO).window(lo)
    return RatioFit(
        crude=crude.window(lo, yo.end_year),
        smoothed=mk(run.smoothed_mean[:, 0]),
        smoothed_var=mk(run.smoothed_cov[:, 0, 0]),
        filtered=mk(run.filtered_mean[:, 0]),
        variances=mle.variance_estimates,
        loglik=mle.loglik_at_optimum,
        ratio_lag=ratio_lag,
    )


def fit_loglog(asylum_pc: AnnualSeries, gdp_pc: AnnualSeries, lag: int = 0) -> LogLogFit:
    """OLS of log Y_t on [1, log X_{t-lag}]."""
    y, x = _lagged_design(log_transform(asylum_pc), log_transform(gdp_pc), lag)
    if len(y) < 4:
        raise SeriesTooShort(f"{y.country}: {len(y)} overlapping years, need 4")
    if np.ptp(x.values) == 0:
        raise DegenerateRegressor(f"{y.country}: regressor has zero variance")
    fit = econ.ols_arrays(y.values, np.column_stack([np.ones(len(y)), x.values]),
                          ["mu", "omega"], y.start_year, y.country)
    tss = float(np.sum((y.values - y.values.mean()) ** 2))
    r2 = 1.0 - fit.rss / tss if tss > 0 else 1.0
    return LogLogFit(float(fit.params[0]), float(fit.params[1]), fit.residuals, r2, lag)


def compute_diagnostics(residuals, reference: AnnualSeries, standardized=None,
                        bp_lags: int | None = None, alpha: float = 0.05) -> DiagnosticsBlock:
    """ARE/SSE as a percentage of the reference total; Box-Pierce and ARCH on the residuals.

    ``standardized`` (e.g. innovations scaled by their conditional standard
    deviation) replaces the raw residuals in the two tests when given.
    """
    e = residuals.values if isinstance(residuals, AnnualSeries) else np.asarray(residuals, float)
    ref = reference.values if isinstance(reference, AnnualSeries) else np.asarray(reference, float)
    total = float(np.sum(ref))
    are = 100.0 * float(np.sum(np.abs(e))) / total if total else math.inf
    sse = 100.0 * float(np.sum(e**2)) / total if total else math.inf
    s = e if standardized is None else np.asarray(
        standardized.values if isinstance(standardized, AnnualSeries) else standardized, float)
    return DiagnosticsBlock(
        are_pct=are,
        sse_pct=sse,
        box_pierce=econ.box_pierce(s, bp_lags, alpha),
        arch=econ.arch_lm_test(s, 1, alpha),
    )


def _tvp_run(y_obs: AnnualSeries, xl: AnnualSeries, free: Mapping, fixed_q: Sequence[float],
             burn_in, kappa):
    Z = np.column_stack([np.ones(len(y_obs)), xl.values])
    template = kalman.StateSpaceSpec.random_walk_regression(Z, 1.0, fixed_q, kappa)
    mle = kalman.fit_mle(template, y_obs, free, burn_in=burn_in)
    run = kalman.smooth(kalman.filter(mle.spec, y_obs, burn_in), mle.spec)
    return mle, run


def fit_elasticity_model(asylum_pc: AnnualSeries, gdp_pc: AnnualSeries,
                         burn_in: int = kalman.DEFAULT_BURN_IN, restrict: str = "auto",
                         normalization: str = "log", alpha: float = 0.05,
                         kappa: float = kalman.DIFFUSE_KAPPA) -> ElasticityFit:
    """Time-varying elasticity of asylum on last year's GDP.

    ``restrict``: ``"auto"`` starts with a stochastic intercept and refits with
    a constant one when the final smoothed intercept is within 1.96 standard
    errors of zero; ``"none"`` keeps it stochastic; ``"mu"`` fixes it from the
    start; ``"both"`` fixes intercept and slope (a recursive least-squares fit).
    ``normalization`` selects the denominator of ARE/SSE: the log dependent
    variable (``"log"``) or raw per-capita applications (``"raw"``).
    ``kappa`` is the prior variance of both states around zero.
    """
    if restrict not in ("auto", "none", "mu", "both"):
        raise ValueError(f"unknown restriction {restrict!r}")
    if normalization not in ("log", "raw"):
        raise ValueError(f"unknown normalization {normalization!r}")
    y_obs, xl = _lagged_design(log_transform(asylum_pc), log_transform(gdp_pc), 1)
    Y = asylum_pc.window(y_obs.start_year, y_obs.end_year)
    if len(y_obs) < 3:
        raise SeriesTooShort(f"{Y.country}: {len(y_obs)} usable years")
    if np.ptp(xl.values) == 0:
        raise DegenerateRegressor(f"{Y.country}: lagged log GDP is constant")
    notes = []
    if len(y_obs) < MIN_SPAN:
        notes.append(f"{len(y_obs)} observations is below {MIN_SPAN}")

    eps = {"sigma2_eps": "meas"}
    if restrict in ("auto", "none"):
        mle, run = _tvp_run(y_obs, xl, {**eps, "sigma2_mu": 0, "sigma2_omega": 1}, (1.0, 1.0),
                            burn_in, kappa)
        mu_T, var_T = run.smoothed_mean[-1, 0], run.smoothed_cov[-1, 0, 0]
        restricted = restrict == "auto" and abs(mu_T) < Z_CRIT * math.sqrt(max(var_T, 0.0))
        if restricted:
            mle, run = _tvp_run(y_obs, xl, {**eps, "sigma2_omega": 1}, (0.0, 1.0), burn_in, kappa)
    elif restrict == "mu":
        mle, run = _tvp_run(y_obs, xl, {**eps, "sigma2_omega": 1}, (0.0, 1.0), burn_in, kappa)
        restricted = True
    else:
        mle, run = _tvp_run(y_obs, xl, eps, (0.0, 0.0), burn_in, kappa)
        restricted = True

    variances = {"sigma2_eps": mle.variance_estimates["sigma2_eps"],
                 "sigma2_mu": mle.variance_estimates.get("sigma2_mu", 0.0),
                 "sigma2_omega": mle.variance_estimates.get("sigma2_omega", 0.0)}

    lo = y_obs.start_year + burn_in
    mk = lambda v: AnnualSeries(Y.country, y_obs.start_year, v, Unit.RATIO).window(lo)
    omega_path = mk(run.smoothed_mean[:, 1])
    omega_var = mk(np.maximum(run.smoothed_cov[:, 1, 1], 0.0))
    mu_path = mk(run.smoothed_mean[:, 0])
    mean_omega = float(np.mean(omega_path.values))
    mean_sd = float(np.mean(np.sqrt(omega_var.values)))
    if mean_sd > 0:
        significant = abs(mean_omega) / mean_sd >= Z_CRIT
    else:
        significant = mean_omega != 0.0
    low_rel = len(y_obs) < RELIABLE_SPAN or not significant

    resid = mk(run.innovation)
    std_resid = mk(run.standardized_innovations())
    ref = y_obs.window(lo) if normalization == "log" else Y.window(lo)
    try:
        diag = compute_diagnostics(resid, ref, std_resid, alpha=alpha)
    except SeriesTooShort as exc:
        raise SeriesTooShort(f"{Y.country}: too few post-burn-in residuals ({exc})") from exc

    return ElasticityFit(
        mu_path=mu_path,
        omega_path=omega_path,
        omega_var_path=omega_var,
        mean_omega=mean_omega,
        mu_hat=float(run.smoothed_mean[-1, 0]),
        mu_se=float(math.sqrt(max(run.smoothed_cov[-1, 0, 0], 0.0))),
        variances=variances,
        diagnostics=diag,
        mu_restricted=bool(restricted),
        n_obs=len(y_obs),
        significant=bool(significant),
        low_reliability=bool(low_rel),
        filtered_omega=mk(run.filtered_mean[:, 1]),
        conditional_variance=mk(run.innovation_var),
        residuals=resid,
        loglik=mle.loglik_at_optimum,
        converged=mle.converged,
        notes=tuple(notes),
    )


def elasticity_year_table(fits: Mapping[str, ElasticityFit], baseline: str,
                          years: Sequence[int] | None = None,
                          relative: bool = False, name: str | None = None) -> Table:
    """Per-country smoothed elasticities by year, optionally divided by the baseline's."""
    if baseline not in fits:
        raise MissingBaseline(f"baseline {baseline!r} has no elasticity fit")
    if years is None:
        b = fits[baseline].omega_path
        years = list(range(b.start_year, b.end_year + 1))
    years = list(years)
    base = fits[baseline].omega_path
    table = Table(name or ("tableA4" if relative else "table2"),
                  ["country", *map(str, years), "mean"])
    for country in sorted(fits):
        path = fits[country].omega_path
        cells = []
        for yr in years:
            if not path.start_year <= yr <= path.end_year:
                cells.append(None)
                continue
            v = path.value_at(yr)
            if relative:
                if country == baseline:
                    v = 1.0
                elif base.start_year <= yr <= base.end_year and base.value_at(yr) != 0:
                    v = v / base.value_at(yr)
                else:
                    v = None
            cells.append(v)
        present = [c for c in cells if c is not None]
        mean = float(np.mean(present)) if present else None
        if relative and country == baseline:
            mean = 1.0
        table.add([country, *cells, mean])
    return table
