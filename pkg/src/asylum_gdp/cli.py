"""Command-line entry point: ``run``, ``selftest`` and ``fit``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .config import StudyConfig, config_from_mapping, load_config
from .errors import InputError

log = logging.getLogger("asylum_gdp")

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2


def _config(args) -> StudyConfig:
    cfg = load_config(args.config) if args.config else StudyConfig()
    overrides = {}
    if getattr(args, "baseline", None):
        overrides["baseline_country"] = args.baseline
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return config_from_mapping(overrides, cfg) if overrides else cfg


def cmd_run(args) -> int:
    from .panel import load_panel
    from .pipeline import emit, run_study

    cfg = _config(args)
    formats = {f.strip() for f in args.formats.split(",") if f.strip()}
    t0 = time.perf_counter()
    panel = load_panel(args.data)
    for code, reason in sorted(panel.excluded.items()):
        log.warning("excluded %s: %s", code, reason)
    report = run_study(panel, cfg, countries=args.country or None)
    files = emit(report, args.out, formats, include_timing=args.timing)
    for code, rep in sorted(report.reports.items()):
        for stage, msg in sorted(rep.errors.items()):
            log.warning("%s %s failed: %s", code, stage, msg)
    log.info("%d countries, %d files in %s (%.1fs)", len(report.reports), len(files), args.out,
             time.perf_counter() - t0)
    for f in files:
        print(f)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .montecarlo import SUITES

    names = args.suite or list(SUITES)
    ok = True
    for name in names:
        res = SUITES[name]()
        print(res.line(), flush=True)
        ok &= res.passed
    return EXIT_OK if ok else EXIT_INTERNAL


def cmd_fit(args) -> int:
    from . import models
    from .panel import load_panel, standardize_country
    from .pipeline import _jsonable

    cfg = _config(args)
    panel = load_panel(args.data)
    if args.country not in panel.countries:
        raise InputError(f"country {args.country!r} not in panel"
                         + (f" ({panel.excluded[args.country]})" if args.country in panel.excluded else ""))
    std = standardize_country(args.country, panel.countries[args.country], panel.eu27_reference)
    lo, hi = std.span
    if args.model == "ratio":
        fit = models.fit_ratio_model(std.asylum_index, std.gdp_index, cfg.ratio_lag, cfg.burn_in,
                                     cfg.prior_scale)
    elif args.model == "loglog":
        fit = models.fit_loglog(std.asylum_index, std.gdp_index.window(lo, hi))
    else:
        fit = models.fit_elasticity_model(std.asylum_index, std.gdp_index, cfg.burn_in,
                                          normalization=cfg.normalization, alpha=cfg.alpha_tests,
                                          kappa=cfg.prior_scale)
    print(json.dumps(_jsonable(fit.to_dict()), indent=1, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="asylum-gdp", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full study and write tables")
    run.add_argument("--data", required=True, type=Path, help="directory with the three input CSVs")
    run.add_argument("--out", required=True, type=Path)
    run.add_argument("--config", type=Path)
    run.add_argument("--country", action="append", metavar="CODE",
                     help="restrict to these countries (repeatable); the baseline is always added")
    run.add_argument("--baseline", metavar="CODE")
    run.add_argument("--formats", default="csv,json", help="comma list from {csv,json}")
    run.add_argument("--seed", type=int)
    run.add_argument("--timing", action="store_true", help="record wall-clock time in the JSON bundle")
    run.set_defaults(func=cmd_run)

    st = sub.add_parser("selftest", help="run the Monte-Carlo checks")
    from .montecarlo import SUITES
    st.add_argument("--suite", action="append", choices=sorted(SUITES))
    st.set_defaults(func=cmd_selftest)

    fit = sub.add_parser("fit", help="fit one model for one country and print it as JSON")
    fit.add_argument("--model", required=True, choices=["ratio", "elasticity", "loglog"])
    fit.add_argument("--country", required=True, metavar="CODE")
    fit.add_argument("--data", type=Path, default=Path("data/fixture"))
    fit.add_argument("--config", type=Path)
    fit.set_defaults(func=cmd_fit)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - top-level guard maps to the internal-failure code
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
