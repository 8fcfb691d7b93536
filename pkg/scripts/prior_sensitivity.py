"""Mean elasticities and the restricted-fit gap to OLS for several prior scales.

Usage: python scripts/prior_sensitivity.py [--data data/fixture] [--countries IE UK SE]
"""
from __future__ import annotations

import argparse

from asylum_gdp import models
from asylum_gdp.panel import load_panel, standardize

SCALES = (1.0, 1e2, 1e4, 1e6, 1e8, 1e10, 1e12)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", default="data/fixture")
    ap.add_argument("--countries", nargs="*", default=["IE", "UK", "SE"])
    args = ap.parse_args()
    std = standardize(load_panel(args.data))

    print("prior_scale  " + "  ".join(f"{c:>8}" for c in args.countries) + "  max|restricted-OLS|")
    for kappa in SCALES:
        means = []
        for c in args.countries:
            s = std[c]
            means.append(models.fit_elasticity_model(s.asylum_index, s.gdp_index, kappa=kappa).mean_omega)
        gap = 0.0
        for s in std.values():
            fit = models.fit_elasticity_model(s.asylum_index, s.gdp_index, restrict="both", kappa=kappa)
            ols = models.fit_loglog(s.asylum_index, s.gdp_index, lag=1)
            gap = max(gap, abs(fit.mu_hat - ols.mu), abs(fit.mean_omega - ols.omega))
        print(f"{kappa:11.0e}  " + "  ".join(f"{m:8.3f}" for m in means) + f"  {gap:.3g}")


if __name__ == "__main__":
    main()
