#!/usr/bin/env python3
"""Writes the bundled synthetic desk dataset into data/.

Monthly returns for five assets in four currencies, driven by a common
heavy-tailed (Student t, 4 dof) market factor plus idiosyncratic t noise,
with occasional joint crash months. Fully deterministic.
"""
import json
import math
import pathlib
import random

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data"
rng = random.Random(20240601)

ASSETS = [  # name, mean, factor loading, idiosyncratic scale
    ("eq.USD", 0.0140, 0.035, 0.015),
    ("eq.EUR", 0.0130, 0.036, 0.018),
    ("eq.GBP", 0.0120, 0.032, 0.016),
    ("bond.USD", 0.0035, -0.004, 0.006),
    ("bond.JPY", 0.0020, -0.002, 0.005),
]
FX = [("EUR", 0.0005, 0.008, 0.015), ("GBP", 0.0000, 0.006, 0.015), ("JPY", -0.0005, -0.010, 0.016)]
RATES = {"USD": 0.0030, "EUR": 0.0015, "GBP": 0.0035, "JPY": 0.0001}


def student_t(df=4):
    chi2 = sum(rng.gauss(0.0, 1.0) ** 2 for _ in range(df))
    return rng.gauss(0.0, 1.0) / math.sqrt(chi2 / df) * math.sqrt((df - 2) / df)


def panel(start_year, months):
    header = ["period"] + [a[0] for a in ASSETS] + [f[0] for f in FX] + [f"rate.{c}" for c in RATES]
    rows = []
    for m in range(months):
        year, month = start_year + m // 12, m % 12 + 1
        factor = student_t()
        if rng.random() < 0.03:
            factor -= 3.0
        row = [f"{year}-{month:02d}"]
        for _, mean, load, idio in ASSETS:
            row.append(mean + load * factor + idio * student_t())
        for _, mean, load, idio in FX:
            row.append(mean + load * factor + idio * student_t())
        for c, level in RATES.items():
            row.append(max(0.0, level + 0.0002 * rng.gauss(0.0, 1.0)))
        rows.append(row)
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join([r[0]] + [f"{x:.8f}" for x in r[1:]]))
    return "\n".join(lines) + "\n"


def instance():
    return {
        "base_currency": "USD",
        "currencies": list(RATES),
        "assets": [{"name": a[0], "price": 1.0, "initial_units": 0.0} for a in ASSETS],
        "forwards": "all",
        "params": {"mu": 0.006, "beta": 0.95, "initial_cash": 100000.0},
    }


def config():
    return {
        "seed": 1,
        "method": "rvc",
        "n_scenarios": 1000,
        "base_currency": "USD",
        "recourse_mode": "no-recourse-trades",
        "mu_grid": [round(0.004 + 0.0005 * k, 4) for k in range(15)],
        "stability_sizes": [500, 1000, 2000],
        "stability_seeds": [1, 2, 3, 4, 5],
        "stability_targets": [0.005, 0.007],
    }


if __name__ == "__main__":
    ROOT.mkdir(exist_ok=True)
    (ROOT / "desk_panel.csv").write_text(panel(2008, 144))
    (ROOT / "desk_backtest.csv").write_text(panel(2020, 36))
    (ROOT / "desk_instance.json").write_text(json.dumps(instance(), indent=2) + "\n")
    (ROOT / "desk_config.json").write_text(json.dumps(config(), indent=2) + "\n")
