import json

import numpy as np
import pytest

from asylum_gdp import models, pipeline
from asylum_gdp.config import StudyConfig
from asylum_gdp.errors import EmptyPanel, IoError, MissingBaseline
from asylum_gdp.pipeline import TABLE_NAMES, compare_to_baseline, emit, report_json, run_study
from asylum_gdp.tables import read_csv_table


def test_every_table_has_every_country(study):
    codes = sorted(study.reports)
    assert len(codes) == 29
    for name in TABLE_NAMES:
        assert sorted(study.tables[name].column("country")) == codes, name


def test_table1_is_sorted_by_mean_elasticity(study):
    t = study.tables["table1"]
    vals = [v for v in t.column("mean_omega") if v is not None]
    assert vals == sorted(vals, reverse=True)


def test_baseline_rows_are_ones(study):
    base = study.config.baseline_country
    for name in ("tableA1", "tableA2", "tableA4"):
        t = study.tables[name]
        row = t.row_for(base)
        cells = [row[c] for c in t.columns[1:-4] if row[c] is not None]
        assert cells and all(c == 1.0 for c in cells), name
        assert row["proportion"] == 0.5 and row["group"] == "similar"


def test_ect_only_after_a_bounds_rejection(study):
    for r in study.reports.values():
        for b, c in ((r.bounds, r.causality), (r.bounds_gls, r.causality_gls)):
            if c is not None:
                assert c.ect_included == (b is not None and b.decision.value == "Reject")


def test_gls_bounds_not_applicable_when_both_stationary(study):
    for r in study.reports.values():
        if r.dfgls is not None and r.dfgls[0].order == 0 and r.dfgls[1].order == 0:
            assert r.bounds_gls is None
            assert study.tables["tableA3b"].row_for(r.country)["bounds_result"] is None
        if r.adf is not None:
            assert r.bounds is not None


def test_smoother_final_year_is_the_filter(study):
    for r in study.reports.values():
        e = r.elasticity
        if e is not None:
            assert e.omega_path.values[-1] == e.filtered_omega.values[-1]


def test_reports_do_not_depend_on_country_order(panel, study):
    sub = run_study(panel, StudyConfig(), countries=["UK", "SE", "LU"])
    assert sorted(sub.reports) == ["IE", "LU", "SE", "UK"]
    for code in sub.reports:
        assert json.dumps(pipeline._jsonable(sub.reports[code].to_dict()), sort_keys=True) == \
            json.dumps(pipeline._jsonable(study.reports[code].to_dict()), sort_keys=True)


def test_single_country_study_is_its_own_baseline(panel):
    rep = run_study(panel, StudyConfig(), countries=["IE"])
    assert list(rep.reports) == ["IE"]
    row = rep.tables["tableA1"].row_for("IE")
    assert row["average"] == 1.0


def test_missing_baseline_and_empty_selection(panel):
    with pytest.raises(MissingBaseline):
        run_study(panel, StudyConfig(baseline_country="XX"))
    with pytest.raises(EmptyPanel):
        run_study(panel, StudyConfig(), countries=[])


def test_a_failing_stage_is_isolated(panel, monkeypatch):
    real = models.fit_elasticity_model

    def flaky(y, x, **kw):
        if y.country == "SE":
            raise FloatingPointError("boom")
        return real(y, x, **kw)

    monkeypatch.setattr(models, "fit_elasticity_model", flaky)
    rep = run_study(panel, StudyConfig(), countries=["SE", "UK"])
    assert "elasticity" in rep.reports["SE"].errors
    assert rep.reports["SE"].ratio is not None and rep.reports["UK"].elasticity is not None
    assert rep.tables["table1"].row_for("SE")["mean_omega"] is None
    assert rep.tables["table2"].row_for("SE")["reliable"] is False


@pytest.mark.parametrize("cells,prop,group", [
    ([1.2, 1.3, 0.9, 1.0], (2 + 0.5) / 4, "similar"),
    ([1.5] * 10, 1.0, "higher"),
    ([0.5] * 10, 0.0, "lower"),
    ([None, None], None, None),
])
def test_compare_to_baseline(cells, prop, group):
    out = compare_to_baseline(cells)
    assert out["proportion"] == prop and out["group"] == group


def test_emit_round_trips_tables(study, tmp_path):
    files = emit(study, tmp_path)
    assert {p.name for p in files} == {f"{n}.csv" for n in TABLE_NAMES} | {"report.json"}
    t, digest = read_csv_table(tmp_path / "table1.csv")
    assert digest == study.config.digest()
    orig = study.tables["table1"]
    assert t.columns == orig.columns and len(t.rows) == len(orig.rows)
    for a, b in zip(t.rows, orig.rows):
        for x, y in zip(a, b):
            if isinstance(y, float):
                assert x == pytest.approx(y, rel=1e-5)
            else:
                assert x == y
    bundle = json.loads((tmp_path / "report.json").read_text())
    assert "elapsed_seconds" not in bundle
    assert bundle["config_digest"] == study.config.digest()


def test_emit_json_only_and_errors(study, tmp_path):
    assert [p.name for p in emit(study, tmp_path / "j", {"json"})] == ["report.json"]
    with pytest.raises(ValueError):
        emit(study, tmp_path, {"xlsx"})
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(IoError):
        emit(study, blocker / "sub")


def test_timing_is_opt_in(study):
    assert "elapsed_seconds" in json.loads(report_json(study, include_timing=True))


def test_report_json_is_stable(study):
    assert report_json(study) == report_json(study)
    assert np.isfinite(json.loads(report_json(study))["countries"]["IE"]["elasticity"]["mean_omega"])
