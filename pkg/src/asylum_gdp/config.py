"""Study configuration: defaults, a flat ``key = value`` file format and a digest."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .errors import ConfigError, MissingFile

REFERENCE_CODE = "EU27"


@dataclass(frozen=True)
class StudyConfig:
    alpha_unit_root: float = 0.05
    bounds: tuple[float, float] = (3.79, 4.85)
    ardl_lag: int = 2
    causality_lags: tuple[int, ...] = (1, 2, 3, 4)
    causality_threshold: float = 0.95
    lag_rule: str = "aic"
    ect_alpha: float = 0.10
    alpha_tests: float = 0.05
    burn_in: int = 2
    prior_scale: float = 1e6
    baseline_country: str = "IE"
    ratio_lag: int = 1
    normalization: str = "log"
    seed: int = 0
    a1_years: tuple[int, int] = (1997, 2009)
    a4_years: tuple[int, int] = (1998, 2009)
    table2_years: tuple[int, int] = (2006, 2009)

    def __post_init__(self):
        lo, hi = self.bounds
        if not lo < hi:
            raise ConfigError(f"bounds must satisfy lo < hi, got {self.bounds}")
        for name in ("alpha_unit_root", "ect_alpha", "alpha_tests"):
            a = getattr(self, name)
            if not 0 < a < 1:
                raise ConfigError(f"{name} must lie in (0, 1), got {a}")
        if not 0 < self.causality_threshold < 1:
            raise ConfigError("causality_threshold must lie in (0, 1)")
        if not self.prior_scale > 0:
            raise ConfigError("prior_scale must be positive")
        if self.burn_in < 0:
            raise ConfigError("burn_in must be >= 0")
        if self.ardl_lag < 1:
            raise ConfigError("ardl_lag must be >= 1")
        if not self.causality_lags or min(self.causality_lags) < 1:
            raise ConfigError("causality_lags must be positive integers")
        if self.ratio_lag not in (0, 1):
            raise ConfigError("ratio_lag must be 0 or 1")
        if self.lag_rule not in ("aic", "max_fprob"):
            raise ConfigError(f"unknown lag_rule {self.lag_rule!r}")
        if self.normalization not in ("log", "raw"):
            raise ConfigError(f"unknown normalization {self.normalization!r}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        for name in ("a1_years", "a4_years", "table2_years"):
            a, b = getattr(self, name)
            if a > b:
                raise ConfigError(f"{name} is an empty window")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def replace(self, **changes) -> "StudyConfig":
        return dataclasses.replace(self, **changes)


def _int_range(text: str) -> tuple[int, ...]:
    text = text.strip()
    if ".." in text:
        a, b = text.split("..", 1)
        return tuple(range(int(a), int(b) + 1))
    return tuple(int(t) for t in text.replace(",", " ").split())


def _window(text: str) -> tuple[int, int]:
    vals = _int_range(text)
    return (min(vals), max(vals))


_PARSERS = {
    "alpha_unit_root": float,
    "bounds": lambda t: tuple(float(v) for v in t.replace(",", " ").split()),
    "ardl_lag": int,
    "causality_lags": _int_range,
    "causality_threshold": float,
    "lag_rule": str.strip,
    "ect_alpha": float,
    "alpha_tests": float,
    "burn_in": int,
    "prior_scale": float,
    "baseline_country": str.strip,
    "ratio_lag": int,
    "normalization": str.strip,
    "seed": int,
    "a1_years": _window,
    "a4_years": _window,
    "table2_years": _window,
}


def config_from_mapping(values: Mapping[str, str], base: StudyConfig | None = None) -> StudyConfig:
    base = base or StudyConfig()
    changes = {}
    for key, raw in values.items():
        if key not in _PARSERS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            changes[key] = _PARSERS[key](raw) if isinstance(raw, str) else raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    if "bounds" in changes and len(changes["bounds"]) != 2:
        raise ConfigError("bounds needs exactly two numbers")
    return base.replace(**changes)


def load_config(path: str | Path) -> StudyConfig:
    """Read ``key = value`` lines; ``#`` starts a comment, blank lines are ignored."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"config file {path} not found")
    values = {}
    for no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected 'key = value'")
        key, val = (p.strip() for p in line.split("=", 1))
        if key in values:
            raise ConfigError(f"{path}:{no}: duplicate key {key!r}")
        values[key] = val
    return config_from_mapping(values)
