"""Per-country orchestration of every model and test, study tables and output files."""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np

from . import __version__, econ, models
from .config import StudyConfig
from .errors import AnalysisError, EmptyPanel, IoError, MissingBaseline
from .panel import CountryPanel, StandardSeries, standardize_country
from .series import AnnualSeries, log_transform
from .tables import Table, to_csv

TABLE_NAMES = ("table1", "table2", "tableA1", "tableA2", "tableA3a", "tableA3b", "tableA4")


@dataclass
class CountryReport:
    country: str
    span: tuple[int, int]
    standardized: StandardSeries | None = None
    ratio: models.RatioFit | None = None
    loglog: models.LogLogFit | None = None
    elasticity: models.ElasticityFit | None = None
    adf: tuple | None = None          # (asylum, gdp) IntegrationVerdict
    dfgls: tuple | None = None
    bounds: econ.TestOutcome | None = None
    causality: econ.CausalityResult | None = None
    bounds_gls: econ.TestOutcome | None = None
    causality_gls: econ.CausalityResult | None = None
    groups: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    ect_alpha: float = 0.10

    @property
    def zero_floored(self) -> bool:
        return bool(self.standardized and self.standardized.zero_floored)

    @property
    def low_reliability(self) -> bool:
        return self.elasticity is None or self.elasticity.low_reliability

    @property
    def ect_significant(self) -> bool | None:
        c = self.causality
        if c is None or c.ect_significance is None:
            return None
        return c.ect_significance < self.ect_alpha

    def to_dict(self) -> dict:
        d = lambda v: None if v is None else v.to_dict()
        pair = lambda p: None if p is None else {"asylum": p[0].to_dict(), "gdp": p[1].to_dict()}
        return {
            "country": self.country,
            "span": list(self.span),
            "standardized": d(self.standardized),
            "ratio": d(self.ratio),
            "loglog": d(self.loglog),
            "elasticity": d(self.elasticity),
            "adf": pair(self.adf),
            "dfgls": pair(self.dfgls),
            "bounds": d(self.bounds),
            "causality": d(self.causality),
            "bounds_gls": d(self.bounds_gls),
            "causality_gls": d(self.causality_gls),
            "ect_significant": self.ect_significant,
            "groups": self.groups,
            "zero_floored": self.zero_floored,
            "low_reliability": self.low_reliability,
            "errors": self.errors,
            "notes": self.notes,
        }


@dataclass
class StudyReport:
    reports: dict[str, CountryReport]
    tables: dict[str, Table]
    config: StudyConfig
    excluded: dict[str, str] = field(default_factory=dict)
    provenance: dict[str, str] = field(default_factory=dict)
    version: str = __version__
    elapsed_seconds: float | None = None

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "version": self.version,
            "config": self.config.to_dict(),
            "config_digest": self.config.digest(),
            "provenance": self.provenance,
            "excluded": self.excluded,
            "tables": {k: self.tables[k].to_dict() for k in sorted(self.tables)},
            "countries": {c: self.reports[c].to_dict() for c in sorted(self.reports)},
        }
        if include_timing:
            out["elapsed_seconds"] = self.elapsed_seconds
        return out


# --------------------------------------------------------------------------
# one country
# --------------------------------------------------------------------------

_CAUGHT = (AnalysisError, ValueError, ArithmeticError, np.linalg.LinAlgError)


def _stage(report: CountryReport, name: str, fn: Callable, *args, **kwargs):
    """Run one stage; record the error and return None if it fails."""
    try:
        return fn(*args, **kwargs)
    except _CAUGHT as exc:
        report.errors[name] = f"{type(exc).__name__}: {exc}"
        return None


def _cointegration_and_causality(report, y, x, orders, config, suffix=""):
    """Bounds test then causality (with the ECT only when the bounds test rejects).

    ``orders`` is given for the DF-GLS variant only: there the bounds test is
    reported as not applicable when both series look stationary.
    """
    n = len(y)
    if n < models.MIN_SPAN:
        report.notes.append(f"span {n} < {models.MIN_SPAN}: bounds{suffix} and causality{suffix} skipped")
        return None, None
    bounds = None
    if orders is not None and orders[0] == 0 and orders[1] == 0:
        report.notes.append(f"bounds{suffix} not applicable: both series integrated of order 0")
    else:
        bounds = _stage(report, "bounds" + suffix, econ.ardl_bounds_test, y, x,
                        p=config.ardl_lag, bounds=config.bounds, alpha=config.alpha_unit_root)
    with_ect = bounds is not None and bounds.decision == econ.Decision.REJECT
    causality = _stage(report, "causality" + suffix, econ.granger_ecm, y, x,
                       include_ect=with_ect, threshold=config.causality_threshold,
                       lags=config.causality_lags, lag_rule=config.lag_rule)
    return bounds, causality


def _orders(pair):
    return None if pair is None else (pair[0].order, pair[1].order)


def run_country(country: str, panel: CountryPanel, config: StudyConfig | None = None,
                baseline_report: CountryReport | None = None) -> CountryReport:
    """Every model and test for one country; stage failures are recorded, not raised.

    Group labels are assigned against ``baseline_report``; when it is not
    given the baseline is fitted first (unless ``country`` is the baseline).
    """
    config = config or StudyConfig()
    data = panel.countries[country]
    report = CountryReport(country, data.span, ect_alpha=config.ect_alpha)

    std = _stage(report, "standardize", standardize_country, country, data, panel.eu27_reference)
    report.standardized = std
    if std is None:
        return report
    lo, hi = std.span
    Y, X = std.asylum_index, std.gdp_index
    Xs = X.window(lo, hi)

    report.ratio = _stage(report, "ratio", models.fit_ratio_model, Y, X,
                          ratio_lag=config.ratio_lag, burn_in=config.burn_in,
                          kappa=config.prior_scale)
    report.loglog = _stage(report, "loglog", models.fit_loglog, Y, Xs)

    ly = _stage(report, "log", log_transform, Y)
    lx = _stage(report, "log", log_transform, Xs)
    if ly is not None and lx is not None:
        a = _stage(report, "adf", lambda: (econ.adf_test(ly, config.alpha_unit_root),
                                           econ.adf_test(lx, config.alpha_unit_root)))
        g = _stage(report, "dfgls", lambda: (econ.dfgls_test(ly, config.alpha_unit_root),
                                             econ.dfgls_test(lx, config.alpha_unit_root)))
        report.adf, report.dfgls = a, g
        report.bounds, report.causality = _cointegration_and_causality(
            report, ly, lx, None, config)
        report.bounds_gls, report.causality_gls = _cointegration_and_causality(
            report, ly, lx, _orders(g), config, suffix="_gls")

    report.elasticity = _stage(report, "elasticity", models.fit_elasticity_model, Y, X,
                               burn_in=config.burn_in, normalization=config.normalization,
                               alpha=config.alpha_tests, kappa=config.prior_scale)

    base = config.baseline_country
    if baseline_report is None and country != base and base in panel.countries:
        baseline_report = run_country(base, panel, config, baseline_report=None)
    if country == base:
        baseline_report = report
    if baseline_report is not None:
        report.groups = group_labels(report, baseline_report, config)
    return report


# --------------------------------------------------------------------------
# baseline comparisons
# --------------------------------------------------------------------------

def _relative(path: AnnualSeries | None, base: AnnualSeries | None, years, is_baseline: bool):
    """Year-wise ratio to the baseline over ``years`` (None where undefined)."""
    cells = []
    for yr in years:
        if path is None or base is None or not (path.start_year <= yr <= path.end_year) \
                or not (base.start_year <= yr <= base.end_year):
            cells.append(None)
        elif is_baseline:
            cells.append(1.0)
        else:
            b = base.value_at(yr)
            cells.append(path.value_at(yr) / b if b != 0 else None)
    return cells


def compare_to_baseline(cells, alpha: float = 0.05) -> dict:
    """Proportion of years above 1 (ties count half), binomial group and average."""
    vals = [c for c in cells if c is not None]
    if not vals:
        return {"proportion": None, "group": None, "p_value": None, "average": None, "n_years": 0}
    above = sum(v > 1 for v in vals)
    ties = sum(v == 1 for v in vals)
    trials = len(vals) - ties
    if trials:
        outcome, group = econ.binomial_group_test(above, trials, 0.5, alpha)
        p, label = outcome.p_value, group.value
    else:
        p, label = 1.0, econ.Group.SIMILAR.value
    return {
        "proportion": (above + 0.5 * ties) / len(vals),
        "group": label,
        "p_value": p,
        "average": float(np.mean(vals)),
        "n_years": len(vals),
    }


def _paths(report: CountryReport):
    std = report.standardized
    return {
        "per_capita": None if std is None else std.asylum_pc,
        "ratio": None if report.ratio is None else report.ratio.smoothed,
        "elasticity": None if report.elasticity is None else report.elasticity.omega_path,
    }


def _windows(config: StudyConfig):
    yrs = lambda w: list(range(w[0], w[1] + 1))
    return {"per_capita": yrs(config.a1_years), "ratio": yrs(config.a1_years),
            "elasticity": yrs(config.a4_years)}


def group_labels(report: CountryReport, baseline: CountryReport, config: StudyConfig) -> dict:
    mine, base = _paths(report), _paths(baseline)
    is_base = report.country == baseline.country
    out = {}
    for key, years in _windows(config).items():
        cells = _relative(mine[key], base[key], years, is_base)
        out[key] = {"years": years, "values": cells, **compare_to_baseline(cells, config.alpha_tests)}
    return out


# --------------------------------------------------------------------------
# study
# --------------------------------------------------------------------------

def run_study(panel: CountryPanel, config: StudyConfig | None = None,
              countries: Iterable[str] | None = None) -> StudyReport:
    """Run every country and assemble the tables; results do not depend on order."""
    config = config or StudyConfig()
    start = time.perf_counter()
    codes = sorted(panel.countries if countries is None else set(countries))
    if not codes:
        raise EmptyPanel("no countries to analyse")
    base = config.baseline_country
    if base not in panel.countries:
        raise MissingBaseline(f"baseline {base!r} is not in the panel")
    if base not in codes:
        codes = sorted({*codes, base})
    missing = [c for c in codes if c not in panel.countries]
    if missing:
        raise EmptyPanel(f"countries not in panel: {', '.join(missing)}")

    base_report = run_country(base, panel, config)
    reports = {base: base_report}
    for code in codes:
        if code != base:
            reports[code] = run_country(code, panel, config, baseline_report=base_report)

    tables = build_tables(reports, config)
    return StudyReport(reports, tables, config, dict(panel.excluded), dict(panel.provenance),
                       elapsed_seconds=time.perf_counter() - start)


def _decision(t: econ.TestOutcome | None):
    return None if t is None else t.decision.value


def _table1(reports: Mapping[str, CountryReport]) -> Table:
    t = Table("table1", ["country", "n", "sigma2_eps", "sigma2_mu", "sigma2_omega", "mu_hat",
                         "mean_omega", "are_pct", "sse_pct", "box_pierce_accept", "arch_accept",
                         "significant", "low_reliability", "mu_restricted", "zero_floored"])

    def key(code):
        e = reports[code].elasticity
        return (e is None, -(e.mean_omega if e else 0.0), code)

    for code in sorted(reports, key=key):
        r, e = reports[code], reports[code].elasticity
        if e is None:
            t.add({"country": code, "low_reliability": True, "zero_floored": r.zero_floored})
            continue
        d = e.diagnostics
        t.add({
            "country": code, "n": e.n_obs,
            "sigma2_eps": e.variances["sigma2_eps"], "sigma2_mu": e.variances["sigma2_mu"],
            "sigma2_omega": e.variances["sigma2_omega"], "mu_hat": e.mu_hat,
            "mean_omega": e.mean_omega, "are_pct": d.are_pct, "sse_pct": d.sse_pct,
            "box_pierce_accept": d.box_pierce.decision == econ.Decision.ACCEPT,
            "arch_accept": d.arch.decision == econ.Decision.ACCEPT,
            "significant": e.significant, "low_reliability": e.low_reliability,
            "mu_restricted": e.mu_restricted, "zero_floored": r.zero_floored,
        })
    return t


def _relative_table(name: str, reports, key: str, years, average_col: str = "average") -> Table:
    t = Table(name, ["country", *map(str, years), "proportion", "group", "p_value", average_col])
    for code in sorted(reports):
        g = reports[code].groups.get(key)
        if g is None:
            t.add([code, *[None] * len(years), None, None, None, None])
            continue
        t.add([code, *g["values"], g["proportion"], g["group"], g["p_value"], g["average"]])
    return t


def _test_table(name: str, reports, verdicts: str, bounds: str, causality: str) -> Table:
    t = Table(name, ["country", "N", "order_asylum", "order_gdp", "bounds_F", "bounds_result",
                     "a2g_fprob", "a2g_lag", "g2a_fprob", "g2a_lag", "direction",
                     "ect_significance"])
    for code in sorted(reports):
        r = reports[code]
        v, b, c = getattr(r, verdicts), getattr(r, bounds), getattr(r, causality)
        t.add({
            "country": code,
            "N": None if b is None else b.detail["n_obs"],
            "order_asylum": None if v is None else v[0].order,
            "order_gdp": None if v is None else v[1].order,
            "bounds_F": None if b is None else b.statistic,
            "bounds_result": _decision(b),
            "a2g_fprob": None if c is None else c.asylum_to_gdp["f_prob"],
            "a2g_lag": None if c is None else c.asylum_to_gdp["lag"],
            "g2a_fprob": None if c is None else c.gdp_to_asylum["f_prob"],
            "g2a_lag": None if c is None else c.gdp_to_asylum["lag"],
            "direction": None if c is None else c.direction.value,
            "ect_significance": None if c is None else c.ect_significance,
        })
    return t


def build_tables(reports: Mapping[str, CountryReport], config: StudyConfig) -> dict[str, Table]:
    base = config.baseline_country
    fits = {c: r.elasticity for c, r in reports.items() if r.elasticity is not None}
    yrs = lambda w: list(range(w[0], w[1] + 1))

    tables = {"table1": _table1(reports)}
    if base in fits:
        t2 = models.elasticity_year_table(fits, base, yrs(config.table2_years), name="table2")
    else:
        t2 = Table("table2", ["country", *map(str, yrs(config.table2_years)), "mean"])
    _fill_missing(t2, reports)
    t2.columns.append("reliable")
    for row in t2.rows:
        row.append(not reports[row[0]].low_reliability)
    tables["table2"] = t2

    tables["tableA1"] = _relative_table("tableA1", reports, "per_capita", yrs(config.a1_years))
    tables["tableA2"] = _relative_table("tableA2", reports, "ratio", yrs(config.a1_years))
    tables["tableA3a"] = _test_table("tableA3a", reports, "adf", "bounds", "causality")
    tables["tableA3b"] = _test_table("tableA3b", reports, "dfgls", "bounds_gls", "causality_gls")
    tables["tableA4"] = _relative_table("tableA4", reports, "elasticity", yrs(config.a4_years),
                                        average_col="mean")
    return tables


def _fill_missing(table: Table, reports) -> None:
    """Add all-N/A rows for countries without a fit so every table has the same rows."""
    have = {r[0] for r in table.rows}
    for code in sorted(set(reports) - have):
        table.add([code, *[None] * (len(table.columns) - 1)])
    table.rows.sort(key=lambda r: r[0])


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if hasattr(v, "value") and isinstance(getattr(v, "value"), str):
        return v.value
    return v


def report_json(report: StudyReport, include_timing: bool = False) -> str:
    return json.dumps(_jsonable(report.to_dict(include_timing)), sort_keys=True, indent=1) + "\n"


def emit(report: StudyReport, out_dir: str | Path, formats: Iterable[str] = ("csv", "json"),
         include_timing: bool = False) -> list[Path]:
    """Write one CSV per table (when ``csv`` is requested) and always the JSON bundle.

    Wall-clock time is left out unless ``include_timing`` so that repeated runs
    produce identical bytes.
    """
    formats = set(formats)
    unknown = formats - {"csv", "json"}
    if unknown:
        raise ValueError(f"unknown formats: {sorted(unknown)}")
    out_dir = Path(out_dir)
    written = []
    digest = report.config.digest()
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if "csv" in formats:
            for name in TABLE_NAMES:
                p = out_dir / f"{name}.csv"
                p.write_text(to_csv(report.tables[name], digest), encoding="utf-8")
                written.append(p)
        p = out_dir / "report.json"
        p.write_text(report_json(report, include_timing), encoding="utf-8")
        written.append(p)
    except OSError as exc:
        raise IoError(f"cannot write to {out_dir}: {exc}") from exc
    return written
