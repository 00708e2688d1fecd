"""Cluster description: shares, continuous means, level frequencies and lift."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .errors import ContractError
from .ingest import ROLE_RATIO, ROLE_SUPPLEMENTARY, MixedTable


def _check_labels(table: MixedTable, labels: Sequence[int]) -> tuple[np.ndarray, int]:
    labels = np.asarray(labels, dtype=int)
    if labels.shape != (table.n_rows,):
        raise ContractError("labels must align with the table rows")
    k = int(labels.max())
    present = np.unique(labels)
    if not np.array_equal(present, np.arange(1, k + 1)):
        raise ContractError("labels must use every cluster 1..k (empty cluster found)")
    return labels, k


def cluster_shares(labels: Sequence[int], k: int) -> dict[int, Fraction]:
    """Exact fraction of observations per cluster; sums to 1 exactly."""
    labels = np.asarray(labels, dtype=int)
    n = labels.size
    return {c: Fraction(int(np.sum(labels == c)), n) for c in range(1, k + 1)}


def cluster_means(
    table: MixedTable, labels: Sequence[int], variables: Sequence[str]
) -> dict[str, dict[str | int, float]]:
    """Arithmetic mean per (variable, cluster), plus an overall column."""
    labels, k = _check_labels(table, labels)
    out: dict[str, dict[str | int, float]] = {}
    for name in variables:
        if name not in table.numeric:
            raise ContractError(f"unknown continuous variable {name!r}")
        col = table.numeric[name]
        row: dict[str | int, float] = {}
        for c in range(1, k + 1):
            row[c] = float(col[labels == c].mean())
        row["total"] = float(col.mean())
        out[name] = row
    return out


def level_frequencies(
    table: MixedTable,
    labels: Sequence[int],
    categorical_variable: str,
    *,
    levels: Sequence[str] | None = None,
) -> tuple[dict[str, dict[int, Fraction]], dict[int, Fraction]]:
    """Per-level cluster frequencies P(cluster | level), plus cluster shares.

    Frequencies of one level sum to 1 across clusters exactly. A declared
    level absent from the data is omitted with a warning.
    """
    labels, k = _check_labels(table, labels)
    if categorical_variable not in table.categorical:
        raise ContractError(f"unknown categorical variable {categorical_variable!r}")
    col = table.categorical[categorical_variable]
    observed = sorted(set(col))
    if levels is None:
        levels = observed
    else:
        missing = [lvl for lvl in levels if lvl not in set(col)]
        for lvl in missing:
            warnings.warn(
                f"level {lvl!r} of {categorical_variable!r} absent from data; omitted",
                stacklevel=2,
            )
        levels = [lvl for lvl in levels if lvl not in missing]

    col = np.asarray(col, dtype=object)
    freq: dict[str, dict[int, Fraction]] = {}
    for lvl in levels:
        mask = col == lvl
        total = int(mask.sum())
        freq[lvl] = {
            c: Fraction(int(np.sum(mask & (labels == c))), total) for c in range(1, k + 1)
        }
    return freq, cluster_shares(labels, k)


def lift(
    frequencies: Mapping[str, Mapping[int, Fraction]],
    shares: Mapping[int, Fraction],
) -> dict[str, dict[int, float]]:
    """lift(level, cluster) = frequency / share; near 1 means weak association."""
    for c, s in shares.items():
        if s <= 0:
            raise ContractError(f"cluster {c} has zero share")
    return {
        lvl: {c: float(Fraction(f) / shares[c]) for c, f in row.items()}
        for lvl, row in frequencies.items()
    }


@dataclass
class ProfileReport:
    """Everything needed to describe the clusters in one serializable object."""

    n: int
    k: int
    cluster_sizes: dict[int, int]
    shares: dict[int, float]
    means: dict[str, dict[str | int, float]]
    frequencies: dict[str, dict[str, dict[int, float]]]
    lifts: dict[str, dict[str, dict[int, float]]]
    mean_variables: list[str]
    categorical_variables: list[str]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "cluster_sizes": {str(c): v for c, v in self.cluster_sizes.items()},
            "shares": {str(c): v for c, v in self.shares.items()},
            "means": {
                var: {str(c): v for c, v in row.items()} for var, row in self.means.items()
            },
            "frequencies": {
                var: {lvl: {str(c): v for c, v in row.items()} for lvl, row in per.items()}
                for var, per in self.frequencies.items()
            },
            "lifts": {
                var: {lvl: {str(c): v for c, v in row.items()} for lvl, row in per.items()}
                for var, per in self.lifts.items()
            },
            "mean_variables": self.mean_variables,
            "categorical_variables": self.categorical_variables,
        }


def build_report(
    table: MixedTable,
    labels: Sequence[int],
    *,
    mean_variables: Sequence[str] | None = None,
    categorical_variables: Sequence[str] | None = None,
) -> ProfileReport:
    """Assemble shares, means, frequencies and lifts into one report.

    By default the means cover the clustering ratios and the supplementary
    (profile-only) ratios, and every categorical variable is profiled.
    """
    labels_arr, k = _check_labels(table, labels)
    if mean_variables is None:
        mean_variables = table.columns_with_role(ROLE_RATIO) + table.columns_with_role(
            ROLE_SUPPLEMENTARY
        )
    if categorical_variables is None:
        categorical_variables = list(table.categorical.keys())

    shares_frac = cluster_shares(labels_arr, k)
    means = cluster_means(table, labels_arr, mean_variables)

    frequencies: dict[str, dict[str, dict[int, float]]] = {}
    lifts: dict[str, dict[str, dict[int, float]]] = {}
    for var in categorical_variables:
        freq_frac, _ = level_frequencies(table, labels_arr, var)
        lift_rows = lift(freq_frac, shares_frac)
        frequencies[var] = {
            lvl: {c: float(f) for c, f in row.items()} for lvl, row in freq_frac.items()
        }
        lifts[var] = lift_rows

    sizes = {c: int(np.sum(labels_arr == c)) for c in range(1, k + 1)}
    return ProfileReport(
        n=table.n_rows,
        k=k,
        cluster_sizes=sizes,
        shares={c: float(s) for c, s in shares_frac.items()},
        means=means,
        frequencies=frequencies,
        lifts=lifts,
        mean_variables=list(mean_variables),
        categorical_variables=list(categorical_variables),
    )
