from pathlib import Path

import pytest

from asylum_gdp.config import StudyConfig
from asylum_gdp.panel import load_panel
from asylum_gdp.pipeline import run_study

ROOT = Path(__file__).resolve().parents[1]
FIXTURE = ROOT / "data" / "fixture"


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURE


@pytest.fixture(scope="session")
def panel():
    return load_panel(FIXTURE)


@pytest.fixture(scope="session")
def study(panel):
    return run_study(panel, StudyConfig())


def write_inputs(directory: Path, asylum: dict, population: dict, gdp: dict, gdp_sources=None):
    """Write the three input CSVs from ``{country: {year: value}}`` maps.

    ``gdp_sources`` optionally maps country -> {source: {year: value}} and
    adds a ``source`` column to the GDP file.
    """
    directory.mkdir(parents=True, exist_ok=True)

    def dump(name, col, table):
        lines = [f"country,year,{col}"]
        for c in sorted(table):
            for y in sorted(table[c]):
                lines.append(f"{c},{y},{float(table[c][y])!r}")
        (directory / name).write_text("\n".join(lines) + "\n")

    dump("asylum.csv", "applications", asylum)
    dump("population.csv", "population", population)
    if gdp_sources is None:
        dump("gdp_pps.csv", "gdp_per_capita_pps", gdp)
    else:
        lines = ["country,year,gdp_per_capita_pps,source"]
        for c in sorted(gdp_sources):
            for src in sorted(gdp_sources[c]):
                for y in sorted(gdp_sources[c][src]):
                    lines.append(f"{c},{y},{float(gdp_sources[c][src][y])!r},{src}")
        (directory / "gdp_pps.csv").write_text("\n".join(lines) + "\n")
    return directory
