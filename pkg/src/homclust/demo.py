"""Synthetic demo dataset with three planted household segments.

The real counselling data cannot be redistributed, so the repository ships a
generator instead. Each record draws a segment (shares 0.35 / 0.40 / 0.25),
an income, per-type spending and debt amounts whose income ratios center on
segment-specific values separated by at least one empty bin of the shipped
binning scheme, and three categorical fields concentrated on
segment-specific levels. On top of ``n`` good rows the generator appends 15
deliberately bad ones (5 duplicate ids, 5 non-positive incomes, 5 with no
spending information) so the cleaning stage has work to do; cleaning a
default file therefore keeps exactly ``n`` records.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .ingest import RatioSpec, TableSchema
from .seeds import DEFAULT_SEED, derive_rng

SEGMENT_SHARES = (0.35, 0.40, 0.25)

# per segment: ratio mean and standard deviation, truncated at zero
_RATIO_PARAMS = {
    "clothing": ((0.021, 0.004), (0.009, 0.003), (0.058, 0.010)),
    "food": ((0.160, 0.020), (0.110, 0.012), (0.380, 0.050)),
    "services": ((0.055, 0.008), (0.034, 0.005), (0.120, 0.015)),
    "housing": ((0.450, 0.045), (0.290, 0.030), (0.100, 0.025)),
    "motoring": ((0.120, 0.022), (0.0005, 0.0004), (0.250, 0.035)),
    "leisure": ((0.005, 0.003), (0.022, 0.003), (0.060, 0.010)),
    "mortgage": ((3.10, 0.45), (0.10, 0.04), (0.60, 0.12)),
    "catalogues": ((0.020, 0.008), (0.010, 0.004), (0.100, 0.030)),
    "collection_agency": ((0.050, 0.015), (0.020, 0.008), (0.100, 0.030)),
    "credit_card": ((0.500, 0.100), (0.350, 0.080), (0.500, 0.120)),
    "personal_loan": ((0.300, 0.080), (0.400, 0.090), (0.550, 0.120)),
    "store_card": ((0.020, 0.008), (0.010, 0.004), (0.050, 0.015)),
}

_INCOME_PARAMS = ((32000.0, 0.18), (24000.0, 0.15), (15000.0, 0.20))

_MARITAL = {
    0: {
        "married - with dependents": 0.45,
        "couple - cohabiting - with dependents": 0.25,
        "married - no dependents": 0.12,
        "divorced - with dependents": 0.06,
        "other - with dependents": 0.05,
        "single - with dependents": 0.04,
        "separated - with dependents": 0.03,
    },
    1: {
        "single - no dependents": 0.40,
        "couple - cohabiting - no dependents": 0.18,
        "divorced - no dependents": 0.16,
        "married - no dependents": 0.10,
        "separated - no dependents": 0.08,
        "other - no dependents": 0.08,
    },
    2: {
        "single - with dependents": 0.30,
        "divorced - with dependents": 0.22,
        "separated - with dependents": 0.22,
        "other - with dependents": 0.14,
        "couple - cohabiting - with dependents": 0.06,
        "married - with dependents": 0.06,
    },
}

_EMPLOYMENT = {
    0: {
        "employee - full time": 0.42,
        "self-employed": 0.38,
        "employee - part time": 0.08,
        "other": 0.06,
        "retired": 0.04,
        "unemployed": 0.02,
    },
    1: {
        "employee - full time": 0.70,
        "employee - part time": 0.12,
        "self-employed": 0.08,
        "other": 0.06,
        "unemployed": 0.02,
        "retired": 0.02,
    },
    2: {
        "unemployed": 0.34,
        "employee - part time": 0.26,
        "retired": 0.22,
        "other": 0.10,
        "employee - full time": 0.04,
        "self-employed": 0.04,
    },
}

_HOUSING = {
    0: {"home owner with mortgage": 0.85, "outright owner": 0.09, "renter": 0.06},
    1: {"renter": 0.68, "outright owner": 0.22, "home owner with mortgage": 0.10},
    2: {"renter": 0.52, "outright owner": 0.38, "home owner with mortgage": 0.10},
}

SPEND_TYPES = ("clothing", "food", "services", "housing", "motoring", "leisure")
DEBT_TYPES = (
    "mortgage",
    "catalogues",
    "collection_agency",
    "credit_card",
    "personal_loan",
    "store_card",
)

CSV_COLUMNS = (
    ["client_id", "income"]
    + [f"spend_{t}" for t in SPEND_TYPES]
    + [f"debt_{t}" for t in DEBT_TYPES]
    + ["marital_status", "employment_status", "housing_status"]
)


def demo_schema() -> TableSchema:
    return TableSchema(
        id_column="client_id",
        income_column="income",
        spending_columns={t: f"spend_{t}" for t in SPEND_TYPES},
        debt_columns={t: f"debt_{t}" for t in DEBT_TYPES},
        categorical_columns=("marital_status", "employment_status", "housing_status"),
    )


def demo_ratio_specs() -> list[RatioSpec]:
    specs = [
        RatioSpec("ClothingInc", ("clothing",)),
        RatioSpec("FoodInc", ("food",)),
        RatioSpec("ServicesInc", ("services",)),
        RatioSpec("HousingInc", ("housing",)),
        RatioSpec("MotoringInc", ("motoring",)),
        RatioSpec("LeisureInc", ("leisure",)),
        RatioSpec("TDebtInc", DEBT_TYPES),
    ]
    specs += [
        RatioSpec("MortgageInc", ("mortgage",), supplementary=True),
        RatioSpec("CataloguesInc", ("catalogues",), supplementary=True),
        RatioSpec("CollectionInc", ("collection_agency",), supplementary=True),
        RatioSpec("CreditCardInc", ("credit_card",), supplementary=True),
        RatioSpec("PersonalLoanInc", ("personal_loan",), supplementary=True),
        RatioSpec("StoreCardInc", ("store_card",), supplementary=True),
    ]
    return specs


def _draw_level(rng: np.random.Generator, dist: dict[str, float]) -> str:
    levels = list(dist.keys())
    probs = np.array(list(dist.values()))
    return levels[rng.choice(len(levels), p=probs / probs.sum())]


def generate_demo_rows(n: int = 5000, seed: int = DEFAULT_SEED) -> list[list[str]]:
    """Raw CSV rows (without header): n good records plus 15 bad ones."""
    rng = derive_rng(seed, "demo-data")
    segments = rng.choice(3, size=n, p=np.array(SEGMENT_SHARES))
    rows: list[list[str]] = []
    for i in range(n):
        s = int(segments[i])
        mean_income, sigma = _INCOME_PARAMS[s]
        income = mean_income * float(np.exp(rng.normal(0.0, sigma)))
        ratios = {
            name: max(0.0, float(rng.normal(*params[s])))
            for name, params in _RATIO_PARAMS.items()
        }
        row = [f"c{i + 1:06d}", f"{income:.2f}"]
        row += [f"{ratios[t] * income:.2f}" for t in SPEND_TYPES]
        row += [f"{ratios[t] * income:.2f}" for t in DEBT_TYPES]
        row += [
            _draw_level(rng, _MARITAL[s]),
            _draw_level(rng, _EMPLOYMENT[s]),
            _draw_level(rng, _HOUSING[s]),
        ]
        rows.append(row)

    # 5 duplicates of existing ids: dropped by dedup (first occurrence wins)
    for i in range(5):
        dup = list(rows[i])
        dup[1] = f"{float(dup[1]) * 2:.2f}"
        rows.append(dup)
    # 5 records with non-positive income
    for i in range(5):
        base = list(rows[10 + i])
        base[0] = f"badincome{i + 1}"
        base[1] = "0"
        rows.append(base)
    # 5 records with no spending information in any type
    for i in range(5):
        base = list(rows[20 + i])
        base[0] = f"nospend{i + 1}"
        for j in range(len(SPEND_TYPES)):
            base[2 + j] = ""
        rows.append(base)
    return rows


def write_demo_dataset(path: str | Path, n: int = 5000, seed: int = DEFAULT_SEED) -> Path:
    """Write the demo CSV; returns the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        writer.writerows(generate_demo_rows(n=n, seed=seed))
    return path


def demo_config_dict(input_path: str | Path, output_dir: str | Path, seed: int = DEFAULT_SEED) -> dict:
    """A ready-to-run pipeline configuration for the demo dataset."""
    return {
        "format": "homclust-config/1",
        "input": str(input_path),
        "delimiter": ",",
        "schema": demo_schema().to_dict(),
        "ratios": [
            {"name": s.name, "sources": list(s.sources), "supplementary": s.supplementary}
            for s in demo_ratio_specs()
        ],
        "binning_scheme": "table2.default",
        "scaling": {"p": 2, "tol": 1e-8, "max_iter": 1000, "restarts": 5},
        "sweep": {"methods": ["kmeans", "pam", "clara", "fanny"], "k_min": 2, "k_max": 8},
        "profile": {"mean_variables": None, "categoricals": None},
        "seed": seed,
        "output_dir": str(output_dir),
    }
