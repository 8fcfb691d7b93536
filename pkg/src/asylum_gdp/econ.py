"""Small-sample test battery: OLS, unit roots, bounds cointegration, ECM Granger
causality, portmanteau and ARCH diagnostics, binomial grouping."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import RankDeficient, SeriesTooShort, SpanMismatch
from .series import AnnualSeries, Unit, overlap

DEFAULT_BOUNDS = (3.79, 4.85)


class Decision(str, Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"
    UNDECIDED = "Undecided"


@dataclass(frozen=True)
class TestOutcome:
    """Result of one hypothesis test.

    ``decision`` follows the reporting convention of the test: for most tests
    it refers to the null hypothesis, but the ARCH test reports ``Accept`` when
    a time-varying conditional variance is detected.
    """

    __test__ = False  # not a pytest class

    name: str
    statistic: float
    reference: dict
    decision: Decision
    alpha: float
    p_value: float | None = None
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "reference": self.reference,
            "decision": self.decision.value,
            "alpha": self.alpha,
            "p_value": self.p_value,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class RegressionFit:
    names: tuple[str, ...]
    params: np.ndarray
    bse: np.ndarray
    residuals: AnnualSeries
    rss: float
    df_resid: int

    @property
    def coefficients(self) -> dict[str, float]:
        return dict(zip(self.names, map(float, self.params)))

    @property
    def n_obs(self) -> int:
        return len(self.residuals)

    @property
    def tvalues(self) -> np.ndarray:
        return self.params / self.bse

    def t_pvalue(self, name: str) -> float:
        i = self.names.index(name)
        return float(2.0 * stats.t.sf(abs(self.tvalues[i]), self.df_resid))


def _lstsq(y: np.ndarray, X: np.ndarray):
    """Householder-QR least squares; returns (beta, resid, rss, bse)."""
    n, k = X.shape
    if n <= k:
        raise SeriesTooShort(f"{n} observations for {k} coefficients")
    Qm, R = np.linalg.qr(X)
    d = np.abs(np.diag(R))
    scale = max(d.max(initial=0.0), np.linalg.norm(X, axis=0).max(initial=0.0))
    if d.min(initial=np.inf) <= 1e-10 * max(scale, 1e-300):
        raise RankDeficient("regressor matrix is rank deficient")
    beta = np.linalg.solve(R, Qm.T @ y)
    resid = y - X @ beta
    rss = float(resid @ resid)
    Rinv = np.linalg.solve(R, np.eye(k))
    sigma2 = rss / (n - k)
    bse = np.sqrt(sigma2 * np.sum(Rinv**2, axis=1))
    return beta, resid, rss, bse


def ols_arrays(y, X, names: Sequence[str], start_year: int = 0, country: str = "") -> RegressionFit:
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float).reshape(y.size, -1)
    beta, resid, rss, bse = _lstsq(y, X)
    return RegressionFit(
        names=tuple(names),
        params=beta,
        bse=bse,
        residuals=AnnualSeries(country, start_year, resid, Unit.RATIO),
        rss=rss,
        df_resid=y.size - X.shape[1],
    )


def ols(y: AnnualSeries, regressors: Sequence[AnnualSeries], intercept: bool = True) -> RegressionFit:
    """Least squares of ``y`` on the regressors over their common span."""
    aligned = overlap(y, *regressors) if regressors else (y,)
    ya, xs = aligned[0], aligned[1:]
    cols, names = [], []
    if intercept:
        cols.append(np.ones(len(ya)))
        names.append("const")
    for i, x in enumerate(xs):
        cols.append(x.values)
        names.append(x.country if x.country and x.country not in names else f"x{i}")
    if not cols:
        raise ValueError("no regressors")
    return ols_arrays(ya.values, np.column_stack(cols), names, ya.start_year, ya.country)


def f_test_nested(full: RegressionFit, restricted: RegressionFit, alpha: float = 0.05) -> TestOutcome:
    """Classical F test of the restrictions; ``detail['f_prob']`` is P(F <= f)."""
    if (full.n_obs != restricted.n_obs
            or full.residuals.start_year != restricted.residuals.start_year):
        raise SpanMismatch("nested models must share the observation span")
    q = restricted.df_resid - full.df_resid
    if q < 0:
        raise ValueError("restricted model has more coefficients than the full model")
    if q == 0:
        return TestOutcome("F", 0.0, {"df_num": 0, "df_den": full.df_resid}, Decision.ACCEPT,
                           alpha, 1.0, {"f_prob": 0.0})
    num = max(restricted.rss - full.rss, 0.0) / q
    den = full.rss / full.df_resid
    if den > 0:
        F = num / den
    else:
        F = 0.0 if num == 0 else math.inf
    f_prob = float(stats.f.cdf(F, q, full.df_resid))
    p = 1.0 - f_prob
    return TestOutcome(
        "F", F, {"df_num": q, "df_den": full.df_resid},
        Decision.REJECT if p < alpha else Decision.ACCEPT, alpha, p, {"f_prob": f_prob},
    )


# --------------------------------------------------------------------------
# unit roots
# --------------------------------------------------------------------------

# MacKinnon (2010) response surface, constant / no trend, one variable:
# crit(T) = b0 + b1/T + b2/T^2 + b3/T^3
_ADF_C = {
    0.01: (-3.43035, -6.5393, -16.786, -79.433),
    0.05: (-2.86154, -2.8903, -4.234, -40.040),
    0.10: (-2.56677, -1.5384, -2.809, 0.0),
}

# Elliott-Rothenberg-Stock DF-GLS critical values, constant only.
_DFGLS_T = np.array([50.0, 100.0, 200.0, np.inf])
_DFGLS_C = {
    0.01: np.array([-2.62, -2.60, -2.58, -2.57]),
    0.05: np.array([-1.95, -1.95, -1.95, -1.94]),
    0.10: np.array([-1.61, -1.61, -1.62, -1.62]),
}


def _alpha_key(alpha: float, table: dict) -> float:
    for k in table:
        if abs(k - alpha) < 1e-12:
            return k
    raise ValueError(f"critical values available only for alpha in {sorted(table)}")


def adf_critical_value(nobs: int, alpha: float = 0.05) -> float:
    b = _ADF_C[_alpha_key(alpha, _ADF_C)]
    return b[0] + b[1] / nobs + b[2] / nobs**2 + b[3] / nobs**3


def dfgls_critical_value(nobs: int, alpha: float = 0.05) -> float:
    cv = _DFGLS_C[_alpha_key(alpha, _DFGLS_C)]
    inv = 1.0 / np.maximum(_DFGLS_T, 1.0)
    inv[-1] = 0.0
    # table rows below T=50 are not available; hold the T=50 value
    return float(np.interp(1.0 / max(nobs, 50), inv[::-1], cv[::-1]))


def max_adf_lag(n: int) -> int:
    return int(math.floor((n - 1) ** (1.0 / 3.0) + 1e-12))


def _df_design(x: np.ndarray, lags: int, start: int, constant: bool):
    """Dependent and regressors of the augmented DF regression from index ``start``."""
    dx = np.diff(x)
    # row t (t indexes dx) uses x[t] as the lagged level and dx[t-1..t-lags]
    rows = range(start, dx.size)
    Y = dx[start:]
    cols = [x[start: dx.size]]
    for i in range(1, lags + 1):
        cols.append(dx[start - i: dx.size - i])
    if constant:
        cols.append(np.ones(len(rows)))
    return Y, np.column_stack(cols)


def _df_tstat(x: np.ndarray, constant: bool, max_lag: int | None = None):
    """AIC lag choice on a common sample, then the t-ratio on the lagged level."""
    n = x.size
    maxlag = max_adf_lag(n) if max_lag is None else max_lag
    while maxlag > 0 and n - 1 - maxlag <= maxlag + 2 + int(constant):
        maxlag -= 1
    best_aic, best_lag = np.inf, 0
    for lags in range(maxlag + 1):
        Y, X = _df_design(x, lags, maxlag, constant)
        _, _, rss, _ = _lstsq(Y, X)
        nobs = Y.size
        aic = nobs * math.log(max(rss, 1e-300) / nobs) + 2 * X.shape[1]
        if aic < best_aic - 1e-12:
            best_aic, best_lag = aic, lags
    Y, X = _df_design(x, best_lag, best_lag, constant)
    beta, _, rss, bse = _lstsq(Y, X)
    return float(beta[0] / bse[0]), best_lag, Y.size


@dataclass(frozen=True)
class IntegrationVerdict:
    order: int
    level_stat: float
    diff_stat: float
    lags_used: int
    critical_level: float
    critical_diff: float
    test: str = "ADF"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _verdict(values: np.ndarray, alpha: float, stat_fn, crit_fn, name: str) -> IntegrationVerdict:
    s_level, lag_level, n_level = stat_fn(values)
    s_diff, _, n_diff = stat_fn(np.diff(values))
    c_level = crit_fn(n_level, alpha)
    c_diff = crit_fn(n_diff, alpha)
    if s_level < c_level:
        order = 0
    elif s_diff < c_diff:
        order = 1
    else:
        order = 2
    return IntegrationVerdict(order, s_level, s_diff, lag_level, c_level, c_diff, name)


def adf_statistic(values, max_lag: int | None = None):
    """(t-statistic, lags, nobs) of the constant-only augmented DF regression."""
    return _df_tstat(np.asarray(values, dtype=float), True, max_lag)


def adf_test(s: AnnualSeries, alpha: float = 0.05) -> IntegrationVerdict:
    if len(s) < 8:
        raise SeriesTooShort(f"{s.country}: ADF needs at least 8 observations")
    return _verdict(s.values, alpha, adf_statistic, adf_critical_value, "ADF")


def gls_demean(values, cbar: float = -7.0) -> np.ndarray:
    """Quasi-difference at abar = 1 + cbar/n, regress on the quasi-differenced constant."""
    y = np.asarray(values, dtype=float)
    n = y.size
    abar = 1.0 + cbar / n
    yq = np.r_[y[0], y[1:] - abar * y[:-1]]
    zq = np.r_[1.0, np.full(n - 1, 1.0 - abar)]
    beta = float(zq @ yq / (zq @ zq))
    return y - beta


def dfgls_statistic(values, max_lag: int | None = None):
    """(t-statistic, lags, nobs) of the DF regression on the GLS-demeaned series.

    The lag count is chosen by AIC on the OLS-demeaned series; choosing it on
    the GLS-demeaned one lets the first observation, which anchors the GLS
    mean, inflate the lag count on stationary data.
    """
    x = np.asarray(values, dtype=float)
    _, lags, _ = _df_tstat(x - x.mean(), False, max_lag)
    Y, X = _df_design(gls_demean(x), lags, lags, False)
    beta, _, _, bse = _lstsq(Y, X)
    return float(beta[0] / bse[0]), lags, Y.size


def dfgls_test(s: AnnualSeries, alpha: float = 0.05) -> IntegrationVerdict:
    if len(s) < 8:
        raise SeriesTooShort(f"{s.country}: DF-GLS needs at least 8 observations")
    return _verdict(s.values, alpha, dfgls_statistic, dfgls_critical_value, "DF-GLS")


# --------------------------------------------------------------------------
# bounds test and causality
# --------------------------------------------------------------------------

def bounds_decision(F: float, bounds=DEFAULT_BOUNDS) -> Decision:
    lo, hi = bounds
    if F < lo:
        return Decision.ACCEPT
    if F > hi:
        return Decision.REJECT
    return Decision.UNDECIDED


def _lagmat(v: np.ndarray, start: int, lags: Sequence[int]) -> list[np.ndarray]:
    return [v[start - i: v.size - i] for i in lags]


def ardl_bounds_test(y: AnnualSeries, x: AnnualSeries, p: int = 2,
                     bounds=DEFAULT_BOUNDS, alpha: float = 0.05) -> TestOutcome:
    """F test on the lagged levels of the conditional error-correction regression.

    Null of no level relationship: Accept below the lower bound, Reject above
    the upper bound, Undecided in between.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    ya, xa = overlap(y, x)
    yv, xv = ya.values, xa.values
    dy, dx = np.diff(yv), np.diff(xv)
    # dy[j] is the change into year index j+1; need dy lags up to p-1
    start = p - 1
    n = dy.size - start
    k_full = 3 + 2 * (p - 1) + 1
    if n <= k_full:
        raise SeriesTooShort(f"{ya.country}: {n} usable observations for the bounds test")
    dep = dy[start:]
    const = np.ones(n)
    short = _lagmat(dy, start, range(1, p)) + _lagmat(dx, start, range(1, p)) + [dx[start:]]
    levels = [xv[start: start + n], yv[start: start + n]]
    short_names = [f"dy_l{i}" for i in range(1, p)] + [f"dx_l{i}" for i in range(1, p)] + ["dx"]
    first_year = ya.start_year + 1 + start
    full = ols_arrays(dep, np.column_stack([const, *levels, *short]),
                      ["const", "x_l1", "y_l1", *short_names], first_year, ya.country)
    restricted = ols_arrays(dep, np.column_stack([const, *short]),
                            ["const", *short_names], first_year, ya.country)
    ft = f_test_nested(full, restricted, alpha)
    return TestOutcome(
        "ARDL bounds", ft.statistic, {"lower": bounds[0], "upper": bounds[1]},
        bounds_decision(ft.statistic, bounds), alpha, ft.p_value,
        {"n_obs": n, "p": p, "caveat": "classical F reference; bounds from tabulated values"},
    )


class Direction(str, Enum):
    NONE = "None"
    ASYLUM_TO_GDP = "AsylumToGdp"
    GDP_TO_ASYLUM = "GdpToAsylum"
    BIDIRECTIONAL = "Bidirectional"


def combine_direction(asylum_to_gdp: bool, gdp_to_asylum: bool) -> Direction:
    if asylum_to_gdp and gdp_to_asylum:
        return Direction.BIDIRECTIONAL
    if asylum_to_gdp:
        return Direction.ASYLUM_TO_GDP
    if gdp_to_asylum:
        return Direction.GDP_TO_ASYLUM
    return Direction.NONE


@dataclass(frozen=True)
class CausalityResult:
    direction: Direction
    asylum_to_gdp: dict
    gdp_to_asylum: dict
    ect_included: bool
    ect_significance: float | None
    threshold: float
    per_lag: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "direction": self.direction.value,
            "asylum_to_gdp": self.asylum_to_gdp,
            "gdp_to_asylum": self.gdp_to_asylum,
            "ect_included": self.ect_included,
            "ect_significance": self.ect_significance,
            "threshold": self.threshold,
            "per_lag": self.per_lag,
        }


def error_correction_term(y: AnnualSeries, x: AnnualSeries) -> AnnualSeries:
    """Residuals of the static level regression of y on [1, x]."""
    return ols(y, [x], intercept=True).residuals


def _ecm_pair(dep, own, cross, ect, names_own, names_cross, first_year):
    n = dep.size
    cols = [np.ones(n), *own]
    names = ["const", *names_own]
    if ect is not None:
        cols.append(ect)
        names.append("ect_l1")
    restricted = ols_arrays(dep, np.column_stack(cols), names, first_year)
    full = ols_arrays(dep, np.column_stack(cols + list(cross)), names + list(names_cross), first_year)
    return full, restricted


def _aic(fit: RegressionFit) -> float:
    n = fit.n_obs
    return n * math.log(max(fit.rss, 1e-300) / n) + 2 * len(fit.names)


def granger_ecm(y: AnnualSeries, x: AnnualSeries, include_ect: bool = False,
                threshold: float = 0.95, lags: Sequence[int] = (1, 2, 3, 4),
                ect: AnnualSeries | None = None, lag_rule: str = "aic") -> CausalityResult:
    """Granger causality in differenced ECMs between ``y`` (asylum) and ``x`` (GDP).

    For each lag count p the full model for one variable's change holds p of
    its own lagged changes and p of the other's; the restricted model drops the
    other's. When ``include_ect`` the lagged error-correction term enters the
    asylum equation.

    ``lag_rule`` picks the reported lag per direction: ``"aic"`` minimises the
    AIC of the full model on a common sample, ``"max_fprob"`` keeps the lag with
    the largest F-probability (that choice is not size-controlled).
    """
    if lag_rule not in ("aic", "max_fprob"):
        raise ValueError(f"unknown lag rule {lag_rule!r}")
    ya, xa = overlap(y, x)
    if include_ect and ect is None:
        ect = error_correction_term(ya, xa)
    dy, dx = np.diff(ya.values), np.diff(xa.values)
    ect_vals = None
    if include_ect:
        e = ect.window(ya.start_year, ya.end_year)
        if len(e) != len(ya):
            raise SpanMismatch("ECT must cover the series span")
        ect_vals = e.values

    def fit_pair(p, start):
        n = dy.size - start
        if n - (1 + 2 * p + int(include_ect)) < 1:
            raise SeriesTooShort(f"lag {p} not estimable")
        ly = _lagmat(dy, start, range(1, p + 1))
        lx = _lagmat(dx, start, range(1, p + 1))
        ny = [f"dy_l{i}" for i in range(1, p + 1)]
        nx = [f"dx_l{i}" for i in range(1, p + 1)]
        first_year = ya.start_year + 1 + start
        # dy[j] is the change into year j+1, so ECT_{t-1} is ect_vals[j]
        e_l1 = ect_vals[start: start + n] if include_ect else None
        a = _ecm_pair(dx[start:], lx, ly, None, nx, ny, first_year)
        g = _ecm_pair(dy[start:], ly, lx, e_l1, ny, nx, first_year)
        return a, g

    feasible, per_lag, fits = [], [], {}
    for p in lags:
        try:
            fits[p] = fit_pair(p, p)
        except (SeriesTooShort, RankDeficient):
            continue
        feasible.append(p)
        (fa, ra), (fg, rg) = fits[p]
        per_lag.append({
            "lag": p,
            "asylum_to_gdp": f_test_nested(fa, ra).detail["f_prob"],
            "gdp_to_asylum": f_test_nested(fg, rg).detail["f_prob"],
            "n_obs": fa.n_obs,
        })
    if not feasible:
        raise SeriesTooShort(f"{ya.country}: no lag order is estimable")

    if lag_rule == "max_fprob":
        pick_a = max(per_lag, key=lambda r: r["asylum_to_gdp"])["lag"]
        pick_g = max(per_lag, key=lambda r: r["gdp_to_asylum"])["lag"]
    else:
        common = max(feasible)
        aic_a, aic_g = {}, {}
        for p in feasible:
            try:
                (fa, _), (fg, _) = fit_pair(p, common)
            except (SeriesTooShort, RankDeficient):
                continue
            aic_a[p], aic_g[p] = _aic(fa), _aic(fg)
        pick_a = min(aic_a, key=aic_a.get) if aic_a else feasible[0]
        pick_g = min(aic_g, key=aic_g.get) if aic_g else feasible[0]

    row = {r["lag"]: r for r in per_lag}
    a2g = {"f_prob": row[pick_a]["asylum_to_gdp"], "lag": pick_a}
    g2a = {"f_prob": row[pick_g]["gdp_to_asylum"], "lag": pick_g}
    ect_sig = fits[pick_g][1][0].t_pvalue("ect_l1") if include_ect else None
    return CausalityResult(
        direction=combine_direction(a2g["f_prob"] >= threshold, g2a["f_prob"] >= threshold),
        asylum_to_gdp=a2g,
        gdp_to_asylum=g2a,
        ect_included=include_ect,
        ect_significance=ect_sig,
        threshold=threshold,
        per_lag=per_lag,
    )


# --------------------------------------------------------------------------
# residual diagnostics
# --------------------------------------------------------------------------

def _values(r) -> np.ndarray:
    return r.values if isinstance(r, AnnualSeries) else np.asarray(r, dtype=float).reshape(-1)


def default_bp_lags(n: int) -> int:
    return max(1, min(5, n // 4))


def autocorrelations(e: np.ndarray, m: int) -> np.ndarray:
    d = e - e.mean()
    g0 = float(d @ d)
    if g0 == 0.0:
        return np.zeros(m)
    return np.array([float(d[k:] @ d[:-k]) / g0 for k in range(1, m + 1)])


def box_pierce(residuals, m: int | None = None, alpha: float = 0.05) -> TestOutcome:
    """Portmanteau Q = n * sum of squared autocorrelations against chi-square(m)."""
    e = _values(residuals)
    n = e.size
    m = default_bp_lags(n) if m is None else m
    if m < 1 or n <= m:
        raise SeriesTooShort(f"Box-Pierce needs more than {m} observations")
    Q = float(n * np.sum(autocorrelations(e, m) ** 2))
    crit = float(stats.chi2.ppf(1.0 - alpha, m))
    p = float(stats.chi2.sf(Q, m))
    return TestOutcome("Box-Pierce", Q, {"df": m, "critical": crit},
                       Decision.REJECT if Q > crit else Decision.ACCEPT, alpha, p, {"n": n})


def arch_lm_test(residuals, q: int = 1, alpha: float = 0.05) -> TestOutcome:
    """Engle's LM test; ``Accept`` means the conditional variance changes over time."""
    e = _values(residuals)
    n = e.size
    if n <= q + 2:
        raise SeriesTooShort(f"ARCH test needs more than {q + 2} observations")
    e2 = e**2
    dep = e2[q:]
    X = np.column_stack([np.ones(dep.size)] + [e2[q - i: n - i] for i in range(1, q + 1)])
    tss = float(np.sum((dep - dep.mean()) ** 2))
    if tss <= 1e-300 * max(1.0, float(dep @ dep)):
        r2 = 0.0
    else:
        try:
            _, _, rss, _ = _lstsq(dep, X)
            r2 = max(0.0, 1.0 - rss / tss)
        except RankDeficient:
            r2 = 0.0
    stat = dep.size * r2
    crit = float(stats.chi2.ppf(1.0 - alpha, q))
    p = float(stats.chi2.sf(stat, q))
    present = stat > crit
    return TestOutcome("ARCH LM", stat, {"df": q, "critical": crit},
                       Decision.ACCEPT if present else Decision.REJECT, alpha, p,
                       {"arch_present": bool(present), "r_squared": r2})


class Group(str, Enum):
    HIGHER = "higher"
    SIMILAR = "similar"
    LOWER = "lower"


def binomial_group_test(successes: int, n_years: int, p0: float = 0.5,
                        alpha: float = 0.05) -> tuple[TestOutcome, Group]:
    """Exact two-sided binomial test of years-above-baseline; the side sets the group."""
    if n_years < 1 or not 0 <= successes <= n_years:
        raise ValueError("need 0 <= successes <= n_years and n_years >= 1")
    p = float(stats.binomtest(successes, n_years, p0, alternative="two-sided").pvalue)
    prop = successes / n_years
    if p < alpha:
        group = Group.HIGHER if prop > p0 else Group.LOWER
    else:
        group = Group.SIMILAR
    out = TestOutcome("Binomial", prop, {"p0": p0, "n": n_years},
                      Decision.REJECT if p < alpha else Decision.ACCEPT, alpha, p,
                      {"successes": successes})
    return out, group
