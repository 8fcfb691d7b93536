"""Write the frozen 29-country input snapshot to data/fixture/.

Values are approximate annual figures transcribed from public UNHCR/Eurostat
asylum tables, Eurostat population totals and Gapminder GDP per capita
(constant 2005 international dollars). Population is interpolated linearly
between 1985 and 2009 levels; GDP log-linearly between anchor years, with a
seeded 1% (log scale) year-to-year perturbation so that growth rates are not
piecewise constant between anchors. The GDP
file carries two sources so that the loader's splice is exercised: the long
historical series up to 2006 and a rescaled recent series for 2000-2009.

Run once; the CSVs are committed and never regenerated by the tests.
"""
from __future__ import annotations

import argparse
import csv
from pathlib import Path

import numpy as np

YEARS = np.arange(1985, 2010)

# applications per year; the first entry is the first reported year
ASYLUM = {
    "DE": (1985, [73832, 99650, 57379, 103076, 121318, 193063, 256112, 438191, 322599, 127210,
                  127937, 116367, 104353, 98644, 95113, 78564, 88287, 71127, 50563, 35607,
                  28914, 21029, 19164, 22085, 27649]),
    "UK": (1985, [5444, 4811, 5863, 5739, 16775, 38195, 73400, 32300, 28000, 42200, 55000,
                  37000, 41500, 58500, 91200, 98900, 91600, 103080, 60050, 40625, 30840,
                  28320, 28300, 31315, 30675]),
    "FR": (1991, [47380, 28872, 27564, 25964, 20415,
                  17405, 21416, 22375, 30907, 38747, 47291, 51087, 52204, 50547, 42578,
                  26269, 29387, 35404, 41980]),
    "SE": (1985, [14500, 14600, 18114, 19595, 30335, 29420, 27351, 84018, 37581, 18640, 9047,
                  5753, 9662, 12844, 11231, 16303, 23515, 33016, 31348, 23161, 17530, 24322,
                  36207, 24353, 24194]),
    "CH": (1986, [8546, 10913, 16726, 24425, 35836, 41629, 17960, 24739, 16134, 17021,
                  18001, 23982, 41302, 46068, 17611, 20633, 26125, 20806, 14248, 10061, 10537,
                  10387, 16606, 16005]),
    "AT": (1985, [6724, 8639, 11406, 15790, 21882, 22789, 27306, 16238, 4744, 5082, 5920, 6991,
                  6719, 13805, 20129, 18284, 30127, 39354, 32359, 24634, 22461, 13349, 11921,
                  12841, 15821]),
    "NL": (1985, [5644, 5865, 13460, 7486, 13898, 21208, 21615, 20346, 35399, 52576, 29258,
                  22857, 34443, 45217, 39299, 43895, 32579, 18667, 13402, 9782, 12347, 14465,
                  7102, 13399, 14905]),
    "BE": (1985, [5299, 7644, 5976, 4510, 8112, 12963, 15444, 17647, 26882, 14340, 11420,
                  12433, 11788, 21965, 35778, 42691, 24549, 18805, 16940, 15357, 15957, 11587,
                  11115, 12252, 17186]),
    "DK": (1985, [8698, 9300, 2750, 4668, 4588, 5292, 4609, 13884, 14347, 6651, 5104, 5893,
                  5092, 5699, 6530, 10347, 12512, 6068, 4593, 3235, 2260, 1918, 1852, 2360,
                  3819]),
    "NO": (1985, [829, 2722, 8613, 6602, 4433, 3962, 4569, 5238, 12876, 3379, 1460, 1778, 2271,
                  8374, 10160, 10842, 14782, 17480, 15959, 7945, 5402, 5320, 6528, 14431,
                  17226]),
    "FI": (1985, [18, 23, 49, 64, 179, 2743, 2137, 3634, 2023, 836, 849, 711, 973, 1272, 3106,
                  3170, 1651, 3443, 3221, 3861, 3574, 2324, 1505, 4035, 5988]),
    "IT": (1985, [5400, 6500, 11000, 1300, 2250, 4573, 26472, 2589, 1323, 1786, 1732, 675,
                  1858, 11122, 33364, 15564, 9620, 16015, 13455, 9722, 9548, 10348, 14053,
                  30324, 17603]),
    "ES": (1985, [2300, 2300, 2500, 3300, 4000, 8647, 8138, 11708, 12615, 11992, 5678, 4730,
                  4975, 6654, 8405, 7926, 9490, 6309, 5918, 5535, 5254, 5297, 7664, 4517, 3007]),
    "PT": (1985, [70, 300, 450, 400, 120, 70, 255, 690, 2090, 770, 450, 270, 300, 340, 310, 220,
                  230, 250, 110, 110, 110, 130, 220, 160, 140]),
    "GR": (1985, [1400, 4300, 6300, 9300, 6500, 4100, 2700, 2000, 800, 1300, 1400, 1600, 4400,
                  2950, 1530, 3080, 5500, 5660, 8180, 4470, 9050, 12270, 25110, 19880, 15930]),
    "LU": (1985, [80, 60, 90, 100, 90, 110, 240, 120, 225, 270, 380, 260, 430, 1710, 2930, 620,
                  690, 1040, 1550, 1580, 800, 520, 430, 460, 480]),
    "PL": (1994, [600, 840, 3210, 3530, 3370, 3060, 4590, 4510, 5170, 6910, 8080, 6860, 4430,
                  7210, 8520, 10590]),
    "HU": (1998, [7100, 11500, 7800, 9550, 6410, 2400, 1600, 1610, 2120, 3420, 3120, 4670]),
    "CZ": (1997, [2110, 4090, 7220, 8790, 18090, 8480, 11400, 5460, 4020, 3020, 1880, 1650,
                  1260]),
    "SK": (1992, [90, 100, 140, 360, 420, 650, 510, 1320, 1560, 8150, 9740, 10360, 11400, 3550,
                  2850, 2640, 910, 820]),
    "SI": (1994, [20, 10, 35, 70, 500, 870, 9240, 1510, 650, 1100, 1170, 1600, 580, 430, 260,
                  200]),
    "BG": (1997, [430, 830, 1330, 1760, 2430, 2890, 1550, 1130, 820, 640, 980, 750, 850]),
    "RO": (1991, [100, 500, 200, 150, 130, 590, 1430, 1240, 1670, 1370, 2430, 1150, 1080, 660,
                  590, 460, 660, 1180, 830]),
    "LT": (1997, [300, 160, 140, 200, 260, 370, 400, 170, 120, 140, 120, 520, 450]),
    "LV": (1998, [60, 20, 5, 15, 30, 5, 10, 20, 10, 35, 55, 60]),
    "EE": (1998, [25, 20, 5, 10, 10, 15, 15, 10, 5, 15, 15, 40]),
    "CY": (1998, [230, 790, 650, 1770, 950, 4410, 9860, 7710, 4550, 6780, 3920, 3200]),
    "MT": (1997, [70, 160, 260, 160, 140, 350, 570, 1000, 1170, 1270, 1380, 2610, 2390]),
    "IE": (1995, [424, 1179, 3883, 4626, 7724, 10938, 10325, 11634, 7900, 4766, 4323, 4314,
                  3985, 3866, 2689]),
}

# population in millions, 1985 and 2009
POPULATION = {
    "AT": (7.56, 8.36), "BE": (9.86, 10.75), "BG": (8.95, 7.59), "CY": (0.55, 0.80),
    "CZ": (10.34, 10.47), "DK": (5.11, 5.51), "EE": (1.52, 1.34), "FI": (4.90, 5.33),
    "FR": (56.6, 64.3), "DE": (77.7, 82.0), "GR": (9.9, 11.26), "HU": (10.6, 10.03),
    "IE": (3.54, 4.45), "IT": (56.6, 60.0), "LV": (2.58, 2.26), "LT": (3.55, 3.35),
    "LU": (0.366, 0.494), "MT": (0.345, 0.414), "NL": (14.45, 16.49), "PL": (37.2, 38.1),
    "PT": (10.0, 10.6), "RO": (22.7, 21.5), "SK": (5.16, 5.41), "SI": (1.97, 2.03),
    "ES": (38.4, 45.8), "SE": (8.35, 9.26), "UK": (56.6, 61.6), "NO": (4.15, 4.80),
    "CH": (6.47, 7.70),
}

GDP_ANCHOR_YEARS = [1985, 1990, 1993, 1995, 2000, 2003, 2007, 2008, 2009]
GDP = {
    "IE": [14500, 18000, 19700, 22500, 33000, 36300, 42000, 40500, 37600],
    "UK": [21000, 24500, 24300, 26000, 29800, 31900, 34800, 34400, 32500],
    "SE": [23500, 26000, 24500, 25500, 29500, 31000, 35500, 35000, 33000],
    "DE": [22000, 24800, 25500, 26300, 28800, 29200, 32000, 32400, 30700],
    "FR": [22000, 25000, 25000, 25800, 28900, 29600, 31300, 31200, 30300],
    "AT": [22000, 25300, 26300, 27200, 31500, 32000, 35600, 36100, 34700],
    "BE": [21300, 24400, 25100, 26100, 29900, 30700, 33100, 33300, 32300],
    "NL": [22000, 25000, 26000, 27500, 33000, 33400, 37000, 37600, 36100],
    "DK": [24000, 25900, 26600, 28700, 32000, 32400, 34700, 34300, 32400],
    "FI": [19500, 23000, 19500, 20800, 26300, 27600, 33000, 33000, 30000],
    "NO": [29000, 31000, 33500, 36000, 42500, 44000, 48500, 48800, 47500],
    "CH": [30000, 33600, 32500, 32800, 35600, 35100, 39000, 39600, 38200],
    "IT": [20500, 23700, 23800, 25000, 27500, 27700, 28900, 28400, 26900],
    "ES": [15600, 18800, 18800, 19700, 24000, 25300, 28200, 28100, 26800],
    "PT": [12300, 15500, 15700, 16600, 20000, 20000, 20900, 20900, 20200],
    "GR": [15800, 16500, 16600, 17200, 20200, 23000, 27300, 27500, 26600],
    "LU": [33000, 44000, 48500, 50000, 67000, 67500, 80000, 77000, 70000],
    "CY": [14000, 18300, 19700, 20500, 24000, 24700, 27900, 28400, 27600],
    "MT": [11500, 14300, 16400, 18200, 20800, 20400, 22600, 23400, 22800],
    "CZ": [15500, 16500, 14300, 15400, 16500, 18600, 23300, 23800, 22700],
    "SK": [11000, 12500, 9900, 11000, 12800, 14800, 20000, 21200, 20200],
    "SI": [15000, 16500, 14300, 15700, 19600, 21400, 26300, 27200, 24900],
    "HU": [12000, 12500, 10800, 11500, 13700, 15600, 17900, 18100, 16900],
    "PL": [8800, 8200, 7600, 8600, 11000, 11900, 15200, 15900, 16400],
    "BG": [8500, 8500, 7200, 7600, 7000, 8400, 11100, 11800, 11200],
    "RO": [8000, 7500, 6000, 6700, 6400, 7800, 10500, 11300, 10400],
    "LT": [13000, 13500, 8000, 8500, 10400, 12600, 17300, 17800, 15100],
    "LV": [11000, 12000, 6400, 6800, 8800, 10800, 15600, 15000, 12600],
    "EE": [12000, 13000, 8500, 9000, 12100, 14800, 20000, 18800, 16100],
}

NON_EU = {"NO", "CH"}
OLD_SOURCE_END = 2006
NEW_SOURCE_START = 2000
# recent-source units: an affine rescaling of the historical series
NEW_SCALE, NEW_SHIFT = 0.83, 500.0


def population_path(code: str) -> np.ndarray:
    a, b = POPULATION[code]
    return 1e6 * np.interp(YEARS, [1985, 2009], [a, b])


GDP_NOISE = 0.01


def gdp_path(code: str, rng: np.random.Generator) -> np.ndarray:
    log_path = np.interp(YEARS, GDP_ANCHOR_YEARS, np.log(GDP[code]))
    return np.exp(log_path + GDP_NOISE * rng.standard_normal(YEARS.size))


def asylum_map(code: str) -> dict[int, float]:
    start, vals = ASYLUM[code]
    return {start + k: float(v) for k, v in enumerate(vals)}


def eu27_reference(gdp_paths: dict[str, np.ndarray]):
    members = [c for c in POPULATION if c not in NON_EU]
    pop = sum(population_path(c) for c in members)
    gdp = sum(population_path(c) * gdp_paths[c] for c in members) / pop
    asy = np.zeros(YEARS.size)
    for c in members:
        for yr, v in asylum_map(c).items():
            asy[yr - YEARS[0]] += v
    return asy, pop, gdp


def gdp_rows(code: str, path: np.ndarray, rng: np.random.Generator):
    rows = []
    for yr, v in zip(YEARS, path):
        if yr <= OLD_SOURCE_END:
            rows.append([code, int(yr), f"{v:.1f}", "gapminder"])
    noise = 1.0 + 0.002 * rng.standard_normal(YEARS.size)
    for yr, v, e in zip(YEARS, path, noise):
        if yr >= NEW_SOURCE_START:
            rows.append([code, int(yr), f"{(NEW_SCALE * v + NEW_SHIFT) * e:.1f}", "eurostat"])
    return rows


def write(path: Path, header, rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=Path(__file__).resolve().parents[1] / "data" / "fixture", type=Path)
    ap.add_argument("--seed", default=20100101, type=int)
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    codes = sorted(POPULATION)
    gdp_paths = {c: gdp_path(c, rng) for c in codes}
    asy_ref, pop_ref, gdp_ref = eu27_reference(gdp_paths)

    asylum_rows, pop_rows, gdp_out = [], [], []
    for code in codes:
        for yr, v in sorted(asylum_map(code).items()):
            asylum_rows.append([code, yr, int(v)])
        for yr, v in zip(YEARS, population_path(code)):
            pop_rows.append([code, int(yr), int(round(v))])
        gdp_out += gdp_rows(code, gdp_paths[code], rng)
    for yr, a, p in zip(YEARS, asy_ref, pop_ref):
        asylum_rows.append(["EU27", int(yr), int(a)])
        pop_rows.append(["EU27", int(yr), int(round(p))])
    gdp_out += gdp_rows("EU27", gdp_ref, rng)

    write(args.out / "asylum.csv", ["country", "year", "applications"], asylum_rows)
    write(args.out / "population.csv", ["country", "year", "population"], pop_rows)
    write(args.out / "gdp_pps.csv", ["country", "year", "gdp_per_capita_pps", "source"], gdp_out)
    print(f"wrote {len(codes)} countries + EU27 reference to {args.out}")


if __name__ == "__main__":
    main()
