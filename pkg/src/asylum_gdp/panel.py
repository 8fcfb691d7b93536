"""Reading the three input CSVs, GDP splicing, span alignment and standardization."""
from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import REFERENCE_CODE
from .econ import ols_arrays
from .errors import (
    DuplicateCountryYear,
    EmptyPanel,
    InputError,
    InsufficientOverlap,
    MissingFile,
    NonPositiveValue,
    ParseError,
)
from .series import AnnualSeries, Unit, index_to_eu27, per_capita_10k

ASYLUM_FILE = "asylum.csv"
POPULATION_FILE = "population.csv"
GDP_FILE = "gdp_pps.csv"


@dataclass(frozen=True)
class CountryData:
    """Raw aligned inputs for one country.

    ``asylum`` and ``population`` cover ``span`` exactly; ``gdp_pps`` also
    keeps the year before the span when the source has it, so the lagged
    regressor does not cost an observation.
    """

    asylum: AnnualSeries
    population: AnnualSeries
    gdp_pps: AnnualSeries

    @property
    def span(self) -> tuple[int, int]:
        return self.asylum.start_year, self.asylum.end_year


@dataclass
class CountryPanel:
    countries: dict[str, CountryData]
    eu27_reference: CountryData
    excluded: dict[str, str] = field(default_factory=dict)
    provenance: dict[str, str] = field(default_factory=dict)

    def subset(self, codes) -> "CountryPanel":
        missing = [c for c in codes if c not in self.countries]
        if missing:
            raise InputError(f"countries not in panel: {', '.join(missing)}")
        return CountryPanel({c: self.countries[c] for c in codes}, self.eu27_reference,
                            dict(self.excluded), dict(self.provenance))


@dataclass(frozen=True)
class StandardSeries:
    """Model inputs for one country (EU-27 indexed) plus the raw per-capita rate."""

    country: str
    span: tuple[int, int]
    asylum_pc: AnnualSeries
    asylum_index: AnnualSeries
    gdp_index: AnnualSeries
    zero_floored: bool = False

    def to_dict(self) -> dict:
        return {
            "span": list(self.span),
            "asylum_pc": self.asylum_pc.to_dict(),
            "asylum_index": self.asylum_index.to_dict(),
            "gdp_index": self.gdp_index.to_dict(),
            "zero_floored": self.zero_floored,
        }


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _read_table(path: Path, value_col: str):
    """Rows as ``{(country, source): {year: value}}``; blank values are gaps."""
    if not path.is_file():
        raise MissingFile(f"{path} not found")
    out: dict[tuple[str, str], dict[int, float]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError(path, 1, "empty file")
        header = [h.strip() for h in header]
        for col in ("country", "year", value_col):
            if col not in header:
                raise ParseError(path, 1, f"missing column {col!r}")
        ic, iy, iv = header.index("country"), header.index("year"), header.index(value_col)
        isrc = header.index("source") if "source" in header else None
        for line_no, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(path, line_no, f"expected {len(header)} fields, got {len(row)}")
            country = row[ic].strip()
            if not country:
                raise ParseError(path, line_no, "empty country code")
            try:
                year = int(row[iy])
            except ValueError:
                raise ParseError(path, line_no, f"bad year {row[iy]!r}") from None
            cell = row[iv].strip()
            if not cell:
                continue
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(path, line_no, f"bad number {cell!r}") from None
            if not math.isfinite(value):
                raise ParseError(path, line_no, f"non-finite value {cell!r}")
            source = row[isrc].strip() if isrc is not None else ""
            bucket = out.setdefault((country, source), {})
            if year in bucket:
                raise DuplicateCountryYear(f"{path.name}:{line_no}: {country} {year} repeated")
            bucket[year] = value
    return out


def _by_country(table) -> dict[str, dict[int, float]]:
    out = {}
    for (country, _source), years in table.items():
        dst = out.setdefault(country, {})
        for yr, v in years.items():
            if yr in dst:
                raise DuplicateCountryYear(f"{country} {yr} appears under two sources")
            dst[yr] = v
    return out


def _contiguous(country: str, years: dict[int, float], unit: Unit, what: str) -> AnnualSeries:
    lo, hi = min(years), max(years)
    missing = [y for y in range(lo, hi + 1) if y not in years]
    if missing:
        raise InputError(f"{what} has a gap in {missing[0]}")
    return AnnualSeries(country, lo, [years[y] for y in range(lo, hi + 1)], unit)


def splice_gdp(old_source: AnnualSeries, new_source: AnnualSeries) -> AnnualSeries:
    """Extend ``old_source`` with the later years of ``new_source``.

    The old series is regressed on the new one (intercept and slope) over the
    shared years, and the new values beyond the old series' end are mapped
    through that line.
    """
    lo = max(old_source.start_year, new_source.start_year)
    hi = min(old_source.end_year, new_source.end_year)
    n = hi - lo + 1
    if n < 3:
        raise InsufficientOverlap(f"{old_source.country}: {max(n, 0)} overlapping years, need 3")
    o = old_source.window(lo, hi).values
    w = new_source.window(lo, hi).values
    fit = ols_arrays(o, np.column_stack([np.ones(n), w]), ["a", "b"])
    a, b = fit.params
    if new_source.end_year <= old_source.end_year:
        return old_source
    tail = new_source.window(old_source.end_year + 1).values
    return old_source.with_values(np.r_[old_source.values, a + b * tail])


def _gdp_series(country: str, table) -> AnnualSeries:
    sources = sorted(((min(v), s, v) for (c, s), v in table.items() if c == country and v),
                     key=lambda t: (t[0], t[1]))
    if not sources:
        raise InputError("no GDP rows")
    out = _contiguous(country, sources[0][2], Unit.RAW_COUNT, f"GDP source {sources[0][1]!r}")
    for _, name, years in sources[1:]:
        out = splice_gdp(out, _contiguous(country, years, Unit.RAW_COUNT, f"GDP source {name!r}"))
    return out


def _align(country: str, asylum: dict, population: dict, gdp: AnnualSeries) -> CountryData:
    if not asylum:
        raise InputError("no asylum rows")
    if not population:
        raise InputError("no population rows")
    lo = max(min(asylum), min(population), gdp.start_year)
    hi = min(max(asylum), max(population), gdp.end_year)
    if lo > hi:
        raise InputError("asylum, population and GDP share no year")
    years = range(lo, hi + 1)
    gaps = [y for y in years if y not in asylum]
    if gaps:
        raise InputError(f"asylum missing in {gaps[0]} inside {lo}-{hi}")
    known = np.array(sorted(population))
    pop = np.interp(list(years), known, [population[y] for y in known])
    a = AnnualSeries(country, lo, [asylum[y] for y in years], Unit.RAW_COUNT)
    p = AnnualSeries(country, lo, pop, Unit.POPULATION)
    g = gdp.window(max(gdp.start_year, lo - 1), hi)
    return CountryData(a, p, g)


def load_panel(data_dir: str | Path) -> CountryPanel:
    """Read and align the input files in ``data_dir``.

    Countries whose series cannot be aligned are listed in ``excluded`` with
    the reason instead of aborting the whole load.
    """
    data_dir = Path(data_dir)
    paths = [data_dir / f for f in (ASYLUM_FILE, POPULATION_FILE, GDP_FILE)]
    for p in paths:
        if not p.is_file():
            raise MissingFile(f"{p} not found")
    asylum = _by_country(_read_table(paths[0], "applications"))
    population = _by_country(_read_table(paths[1], "population"))
    gdp_table = _read_table(paths[2], "gdp_per_capita_pps")
    provenance = {p.name: _digest(p) for p in paths}

    if REFERENCE_CODE not in asylum or REFERENCE_CODE not in population:
        raise InputError(f"{REFERENCE_CODE} reference rows missing from asylum/population files")
    ref_gdp = _gdp_series(REFERENCE_CODE, gdp_table)
    ref = CountryData(
        _contiguous(REFERENCE_CODE, asylum[REFERENCE_CODE], Unit.RAW_COUNT, "reference asylum"),
        _contiguous(REFERENCE_CODE, population[REFERENCE_CODE], Unit.POPULATION, "reference population"),
        ref_gdp,
    )

    codes = sorted((set(asylum) | set(population) | {c for c, _ in gdp_table}) - {REFERENCE_CODE})
    countries, excluded = {}, {}
    for code in codes:
        try:
            data = _align(code, asylum.get(code, {}), population.get(code, {}),
                          _gdp_series(code, gdp_table))
            _check_reference(data, ref)
        except InputError as exc:
            excluded[code] = str(exc)
            continue
        countries[code] = data
    return CountryPanel(countries, ref, excluded, provenance)


def _check_reference(data: CountryData, ref: CountryData) -> None:
    lo, hi = data.span
    for name, s, need in (("asylum", ref.asylum, (lo, hi)), ("population", ref.population, (lo, hi)),
                          ("GDP", ref.gdp_pps, (data.gdp_pps.start_year, hi))):
        if s.start_year > need[0] or s.end_year < need[1]:
            raise InputError(f"{REFERENCE_CODE} {name} does not cover {need[0]}-{need[1]}")


# --------------------------------------------------------------------------
# standardization
# --------------------------------------------------------------------------

def zero_floor(s: AnnualSeries) -> tuple[AnnualSeries, bool]:
    """Replace values <= 0 by half the smallest positive value; flag if any changed."""
    v = s.values
    if np.all(v > 0):
        return s, False
    pos = v[v > 0]
    if pos.size == 0:
        raise NonPositiveValue(s.start_year, "asylum rate (no positive year)")
    return s.with_values(np.where(v > 0, v, 0.5 * pos.min())), True


def reference_rates(ref: CountryData) -> tuple[AnnualSeries, AnnualSeries]:
    return per_capita_10k(ref.asylum, ref.population), ref.gdp_pps


def standardize_country(code: str, data: CountryData, ref: CountryData) -> StandardSeries:
    ref_pc, ref_gdp = reference_rates(ref)
    pc, floored = zero_floor(per_capita_10k(data.asylum, data.population))
    return StandardSeries(
        country=code,
        span=data.span,
        asylum_pc=pc,
        asylum_index=index_to_eu27(pc, ref_pc),
        gdp_index=index_to_eu27(data.gdp_pps, ref_gdp),
        zero_floored=floored,
    )


def standardize(panel: CountryPanel) -> dict[str, StandardSeries]:
    """Per-capita rates and EU-27 indices for every country in the panel."""
    if not panel.countries:
        raise EmptyPanel("panel has no countries")
    return {c: standardize_country(c, d, panel.eu27_reference) for c, d in sorted(panel.countries.items())}
