"""Annual series container, deterministic transforms and a seeded synthetic generator."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import (
    EmptyOverlap,
    NonPositivePopulation,
    NonPositiveReference,
    NonPositiveValue,
    SeriesTooShort,
)


class Unit(str, Enum):
    RAW_COUNT = "raw_count"
    POPULATION = "population"
    PER_CAPITA_10K = "per_capita_10k"
    PPS_INDEX = "pps_index"
    LOG_VALUE = "log_value"
    RATIO = "ratio"


@dataclass(frozen=True)
class AnnualSeries:
    """Yearly values for one country; ``values[k]`` belongs to ``start_year + k``.

    The value array is copied and made read-only on construction, so instances
    can be shared freely.
    """

    country: str
    start_year: int
    values: np.ndarray
    unit: Unit = Unit.RAW_COUNT

    def __post_init__(self):
        arr = np.array(self.values, dtype=float).reshape(-1)
        if arr.size < 1:
            raise SeriesTooShort(f"{self.country}: empty series")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise ValueError(f"{self.country}: non-finite value in year {self.start_year + bad}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "unit", Unit(self.unit))
        object.__setattr__(self, "start_year", int(self.start_year))

    def __len__(self) -> int:
        return self.values.size

    @property
    def end_year(self) -> int:
        return self.start_year + len(self) - 1

    @property
    def years(self) -> np.ndarray:
        return np.arange(self.start_year, self.end_year + 1)

    def value_at(self, year: int) -> float:
        if not self.start_year <= year <= self.end_year:
            raise KeyError(year)
        return float(self.values[year - self.start_year])

    def window(self, start: int | None = None, end: int | None = None) -> "AnnualSeries":
        """Restrict to ``[start, end]`` (inclusive, clipped to the span)."""
        lo = self.start_year if start is None else max(start, self.start_year)
        hi = self.end_year if end is None else min(end, self.end_year)
        if lo > hi:
            raise EmptyOverlap(f"{self.country}: no years in [{start}, {end}]")
        return self.with_values(self.values[lo - self.start_year: hi - self.start_year + 1], start_year=lo)

    def with_values(self, values, unit: Unit | None = None, start_year: int | None = None) -> "AnnualSeries":
        return AnnualSeries(
            self.country,
            self.start_year if start_year is None else start_year,
            values,
            self.unit if unit is None else unit,
        )

    def to_dict(self) -> dict:
        return {
            "country": self.country,
            "start_year": self.start_year,
            "unit": self.unit.value,
            "values": [float(v) for v in self.values],
        }


def overlap(*series: AnnualSeries) -> tuple[AnnualSeries, ...]:
    """Trim every series to the common year span."""
    lo = max(s.start_year for s in series)
    hi = min(s.end_year for s in series)
    if lo > hi:
        raise EmptyOverlap("series share no common years")
    return tuple(s.window(lo, hi) for s in series)


def log_transform(s: AnnualSeries) -> AnnualSeries:
    bad = np.flatnonzero(s.values <= 0)
    if bad.size:
        raise NonPositiveValue(s.start_year + int(bad[0]))
    return s.with_values(np.log(s.values), unit=Unit.LOG_VALUE)


def per_capita_10k(counts: AnnualSeries, population: AnnualSeries) -> AnnualSeries:
    c, p = overlap(counts, population)
    bad = np.flatnonzero(p.values <= 0)
    if bad.size:
        raise NonPositivePopulation(p.start_year + int(bad[0]))
    return c.with_values(10000.0 * c.values / p.values, unit=Unit.PER_CAPITA_10K)


def index_to_eu27(s: AnnualSeries, eu27_avg: AnnualSeries) -> AnnualSeries:
    a, ref = overlap(s, eu27_avg)
    bad = np.flatnonzero(ref.values <= 0)
    if bad.size:
        raise NonPositiveReference(ref.start_year + int(bad[0]))
    return a.with_values(100.0 * a.values / ref.values, unit=Unit.PPS_INDEX)


def lag(s: AnnualSeries, k: int = 1) -> AnnualSeries:
    """Shift forward by ``k`` years: the value of year t is reported at t + k."""
    if k < 1:
        raise ValueError("lag must be a positive integer")
    if len(s) <= k:
        raise SeriesTooShort(f"{s.country}: length {len(s)} cannot be lagged by {k}")
    return s.with_values(s.values, start_year=s.start_year + k)


def diff(s: AnnualSeries) -> AnnualSeries:
    if len(s) < 2:
        raise SeriesTooShort(f"{s.country}: cannot difference a single value")
    return s.with_values(np.diff(s.values), start_year=s.start_year + 1)


def zscore(s: AnnualSeries) -> AnnualSeries:
    """Mean 0 / sd 1 rescaling, used only for plot output."""
    sd = s.values.std(ddof=1) if len(s) > 1 else 0.0
    centred = s.values - s.values.mean()
    return s.with_values(centred / sd if sd > 0 else centred)


# --------------------------------------------------------------------------
# synthetic data
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SeedSpec:
    """Recipe for a reproducible synthetic series.

    ``process`` is one of ``white_noise``, ``random_walk``, ``ar1``, ``arch1`` or
    ``tvp_loglog``. ``phi`` is the AR(1) coefficient or the ARCH(1) loading.
    For ``tvp_loglog`` the regressor is a random walk around ``x_level`` with
    step size ``scale`` and ``omega`` is either a scalar or one value per
    generated observation.
    """

    seed: int
    process: str
    length: int
    scale: float = 1.0
    phi: float = 0.0
    mu: float = 0.0
    omega: float | Sequence[float] = 1.0
    sigma_eps: float = 0.1
    x_level: float = 4.6
    start_year: int = 1900
    country: str = "SYN"

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("length must be positive")
        if self.scale < 0:
            raise ValueError("scale must be non-negative")
        if self.process not in {"white_noise", "random_walk", "ar1", "arch1", "tvp_loglog"}:
            raise ValueError(f"unknown process {self.process!r}")


def generate_synthetic(spec: SeedSpec):
    """Draw the series described by ``spec`` with numpy's PCG64 generator.

    Returns one :class:`AnnualSeries`, or ``(x, y)`` for ``tvp_loglog`` where
    ``x`` starts one year before ``y`` and
    ``y_t = mu + omega_t * x_{t-1} + eps_t``.
    """
    rng = np.random.default_rng(np.uint64(spec.seed))
    n = spec.length
    mk = lambda v, start=spec.start_year: AnnualSeries(spec.country, start, v, Unit.RATIO)

    if spec.process == "white_noise":
        return mk(spec.scale * rng.standard_normal(n))
    if spec.process == "random_walk":
        return mk(np.cumsum(spec.scale * rng.standard_normal(n)))
    if spec.process == "ar1":
        e = spec.scale * rng.standard_normal(n + 100)
        out = np.empty_like(e)
        out[0] = e[0]
        for t in range(1, e.size):
            out[t] = spec.phi * out[t - 1] + e[t]
        return mk(out[100:])
    if spec.process == "arch1":
        z = rng.standard_normal(n + 100)
        out = np.zeros_like(z)
        for t in range(1, z.size):
            out[t] = z[t] * np.sqrt(spec.scale**2 + spec.phi * out[t - 1] ** 2)
        return mk(out[100:])

    omega = np.broadcast_to(np.asarray(spec.omega, dtype=float), (n,))
    steps = spec.scale * rng.standard_normal(n + 1)
    steps[0] = 0.0
    x = spec.x_level + np.cumsum(steps)
    eps = spec.sigma_eps * rng.standard_normal(n)
    y = spec.mu + omega * x[:-1] + eps
    return mk(x, spec.start_year - 1), mk(y)
