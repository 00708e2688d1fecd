"""Loading, cleaning, ratio computation and ordinal binning of mixed-type records."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, ContractError, PipelineError, SchemaError

ROLE_RATIO = "continuous-ratio"
ROLE_SUPPLEMENTARY = "supplementary-ratio"
ROLE_CATEGORICAL = "categorical"
ROLE_AMOUNT = "amount"

QUARTILE_CONVENTION = "linear interpolation at positions 0.25/0.5/0.75 of (n-1)"


@dataclass(frozen=True)
class TableSchema:
    """Maps raw delimited-text columns onto record fields.

    ``spending_columns`` and ``debt_columns`` map a type name (used as the
    field name downstream) to the column holding its currency amount.
    """

    id_column: str
    income_column: str
    spending_columns: Mapping[str, str]
    debt_columns: Mapping[str, str]
    categorical_columns: Sequence[str]

    def declared_columns(self) -> list[str]:
        cols = [self.id_column, self.income_column]
        cols += list(self.spending_columns.values())
        cols += list(self.debt_columns.values())
        cols += list(self.categorical_columns)
        return cols

    @classmethod
    def from_dict(cls, d: Mapping) -> "TableSchema":
        try:
            return cls(
                id_column=d["id"],
                income_column=d["income"],
                spending_columns=dict(d["spending"]),
                debt_columns=dict(d.get("debts", {})),
                categorical_columns=list(d.get("categoricals", [])),
            )
        except KeyError as e:
            raise ConfigError(f"schema is missing required key {e}") from e

    def to_dict(self) -> dict:
        return {
            "id": self.id_column,
            "income": self.income_column,
            "spending": dict(self.spending_columns),
            "debts": dict(self.debt_columns),
            "categoricals": list(self.categorical_columns),
        }


@dataclass
class RawRecord:
    """One raw data row; ``None`` marks a missing cell."""

    id: str
    income: float | None
    spend_amounts: dict[str, float | None]
    debt_amounts: dict[str, float | None]
    categoricals: dict[str, str | None]

    def missing_count(self) -> int:
        n = int(self.income is None)
        n += sum(v is None for v in self.spend_amounts.values())
        n += sum(v is None for v in self.debt_amounts.values())
        n += sum(v is None for v in self.categoricals.values())
        return n


@dataclass
class MixedTable:
    """Cleaned records in columnar form with per-column roles."""

    ids: list[str]
    numeric: dict[str, np.ndarray]
    categorical: dict[str, list[str]]
    roles: dict[str, str]

    @property
    def n_rows(self) -> int:
        return len(self.ids)

    def columns_with_role(self, role: str) -> list[str]:
        return [c for c, r in self.roles.items() if r == role]

    def validate(self) -> None:
        if len(set(self.ids)) != len(self.ids):
            raise ContractError("table ids are not unique")
        n = self.n_rows
        for name, col in self.numeric.items():
            if len(col) != n:
                raise ContractError(f"column {name!r} has wrong length")
            if self.roles.get(name) != ROLE_SUPPLEMENTARY:
                if not np.all(np.isfinite(col)):
                    raise ContractError(f"column {name!r} contains non-finite values")
        for name, col in self.categorical.items():
            if len(col) != n:
                raise ContractError(f"column {name!r} has wrong length")
            if any(v == "" for v in col):
                raise ContractError(f"column {name!r} contains missing levels")


@dataclass
class CleaningLog:
    """Counts of records removed per reason, in application order."""

    input_records: int = 0
    duplicates: int = 0
    after_dedup: int = 0
    no_spending: int = 0
    bad_income: int = 0
    invalid_amount: int = 0
    missing_categorical: int = 0
    kept: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class RatioSpec:
    """One ratio column: sum of ``sources`` amounts divided by income."""

    name: str
    sources: tuple[str, ...]
    supplementary: bool = False


@dataclass(frozen=True)
class BinningScheme:
    """Per-variable ordered upper bin edges defining half-open intervals.

    A variable with edges (b_1, ..., b_m) has m+1 levels: [0, b_1),
    [b_1, b_2), ..., [b_m, inf). Every finite ratio >= 0 maps to exactly
    one level and the mapping is monotone.
    """

    variables: Mapping[str, tuple[float, ...]]

    def __post_init__(self) -> None:
        for name, edges in self.variables.items():
            arr = np.asarray(edges, dtype=float)
            if arr.size == 0:
                raise ConfigError(f"binning for {name!r} declares no edges")
            if not np.all(np.isfinite(arr)) or arr[0] <= 0:
                raise ConfigError(f"binning for {name!r} has non-positive or non-finite edges")
            if not np.all(np.diff(arr) > 0):
                raise ConfigError(f"binning edges for {name!r} are not strictly increasing")

    def level_count(self, variable: str) -> int:
        return len(self.variables[variable]) + 1

    def level_labels(self, variable: str) -> list[str]:
        edges = self.variables[variable]
        bounds = [0.0, *edges]
        labels = [f"[{lo:g}, {hi:g})" for lo, hi in zip(bounds[:-1], bounds[1:])]
        labels.append(f"[{edges[-1]:g}, inf)")
        return labels

    @classmethod
    def from_dict(cls, d: Mapping) -> "BinningScheme":
        if d.get("format") != "homclust-binning/1":
            raise ConfigError("binning scheme file has unknown format tag")
        return cls(variables={k: tuple(float(x) for x in v) for k, v in d["variables"].items()})

    def to_dict(self) -> dict:
        return {
            "format": "homclust-binning/1",
            "variables": {k: list(v) for k, v in self.variables.items()},
        }


def default_scheme() -> BinningScheme:
    """The shipped nine/eight/seven/thirteen-level ratio binning scheme."""
    text = resources.files("homclust").joinpath("schemes/table2.default").read_text("utf-8")
    return BinningScheme.from_dict(json.loads(text))


def load_binning_scheme(ref: str | Path) -> BinningScheme:
    """Resolve a scheme reference: the name ``table2.default`` or a file path."""
    if str(ref) == "table2.default":
        return default_scheme()
    path = Path(ref)
    if not path.exists():
        raise ConfigError(f"binning scheme {str(ref)!r} does not exist")
    return BinningScheme.from_dict(json.loads(path.read_text("utf-8")))


@dataclass
class CodedMatrix:
    """Integer category codes (1..k_j per variable) with kinds and labels."""

    ids: list[str]
    variables: list[str]
    codes: np.ndarray
    kinds: list[str]
    level_counts: list[int]
    level_labels: list[list[str]]

    @property
    def n_rows(self) -> int:
        return self.codes.shape[0]

    @property
    def n_variables(self) -> int:
        return self.codes.shape[1]

    def validate(self) -> None:
        n, j = self.codes.shape
        if not (len(self.variables) == len(self.kinds) == len(self.level_counts) == j):
            raise ContractError("coded matrix metadata does not cover all variables")
        if len(self.ids) != n:
            raise ContractError("coded matrix ids do not match row count")
        for jj, k in enumerate(self.level_counts):
            col = self.codes[:, jj]
            if col.min() < 1 or col.max() > k:
                raise ContractError(f"codes for {self.variables[jj]!r} outside 1..{k}")
            if len(np.unique(col)) != k:
                raise ContractError(f"variable {self.variables[jj]!r} has unused levels")
            if self.kinds[jj] not in ("ordinal", "nominal"):
                raise ContractError(f"unknown kind {self.kinds[jj]!r}")
            if len(self.level_labels[jj]) != k:
                raise ContractError(f"labels for {self.variables[jj]!r} do not cover all levels")


def _parse_float(cell: str) -> float | None:
    cell = cell.strip()
    if not cell:
        return None
    try:
        value = float(cell)
    except ValueError:
        return None
    if not math.isfinite(value):
        return None
    return value


def load_table(
    source: io.TextIOBase | io.RawIOBase | str | Path,
    schema: TableSchema,
    *,
    delimiter: str = ",",
) -> list[RawRecord]:
    """Parse a delimited text table into raw records.

    Unparseable or empty cells become missing markers, never a crash; a
    header that lacks a declared column raises :class:`SchemaError` naming it.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return load_table(fh, schema, delimiter=delimiter)
    if isinstance(source, io.RawIOBase) or (hasattr(source, "read") and isinstance(source.read(0), bytes)):
        source = io.TextIOWrapper(source, encoding="utf-8", newline="")

    reader = csv.reader(source, delimiter=delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("input table is empty (no header row)") from None
    header = [h.strip() for h in header]
    positions: dict[str, int] = {}
    for col in schema.declared_columns():
        if col not in header:
            raise SchemaError(f"header is missing declared column {col!r}")
        positions[col] = header.index(col)

    def cell(row: list[str], col: str) -> str:
        i = positions[col]
        return row[i] if i < len(row) else ""

    records: list[RawRecord] = []
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        cat: dict[str, str | None] = {}
        for col in schema.categorical_columns:
            value = cell(row, col).strip()
            cat[col] = value if value else None
        records.append(
            RawRecord(
                id=cell(row, schema.id_column).strip(),
                income=_parse_float(cell(row, schema.income_column)),
                spend_amounts={
                    t: _parse_float(cell(row, c)) for t, c in schema.spending_columns.items()
                },
                debt_amounts={
                    t: _parse_float(cell(row, c)) for t, c in schema.debt_columns.items()
                },
                categoricals=cat,
            )
        )
    return records


def clean(records: Iterable[RawRecord]) -> tuple[MixedTable, CleaningLog]:
    """Deduplicate and filter raw records into an amounts table.

    Duplicate ids collapse to the first occurrence (input order). A record is
    then dropped, counting the first matching reason, when it has no spending
    information in any type, a missing or non-positive income, a negative or
    non-finite amount, or a missing categorical level. Absent individual
    amounts in surviving records are treated as zero.
    """
    records = list(records)
    log = CleaningLog(input_records=len(records))

    seen: set[str] = set()
    deduped: list[RawRecord] = []
    for rec in records:
        if rec.id in seen:
            log.duplicates += 1
            continue
        seen.add(rec.id)
        deduped.append(rec)
    log.after_dedup = len(deduped)

    kept: list[RawRecord] = []
    for rec in deduped:
        if all(v is None for v in rec.spend_amounts.values()):
            log.no_spending += 1
            continue
        if rec.income is None or rec.income <= 0:
            log.bad_income += 1
            continue
        amounts = list(rec.spend_amounts.values()) + list(rec.debt_amounts.values())
        if any(v is not None and (v < 0 or not math.isfinite(v)) for v in amounts):
            log.invalid_amount += 1
            continue
        if any(v is None for v in rec.categoricals.values()):
            log.missing_categorical += 1
            continue
        kept.append(rec)
    log.kept = len(kept)

    if not kept:
        raise PipelineError("no records survive cleaning")

    spend_types = list(kept[0].spend_amounts.keys())
    debt_types = list(kept[0].debt_amounts.keys())
    cat_names = list(kept[0].categoricals.keys())

    numeric: dict[str, np.ndarray] = {}
    roles: dict[str, str] = {}
    numeric["income"] = np.array([r.income for r in kept], dtype=float)
    roles["income"] = ROLE_AMOUNT
    for t in spend_types:
        numeric[t] = np.array([r.spend_amounts[t] or 0.0 for r in kept], dtype=float)
        roles[t] = ROLE_AMOUNT
    for t in debt_types:
        numeric[t] = np.array([r.debt_amounts[t] or 0.0 for r in kept], dtype=float)
        roles[t] = ROLE_AMOUNT
    categorical = {c: [r.categoricals[c] or "" for r in kept] for c in cat_names}
    for c in cat_names:
        roles[c] = ROLE_CATEGORICAL

    table = MixedTable(
        ids=[r.id for r in kept],
        numeric=numeric,
        categorical=categorical,
        roles=roles,
    )
    table.validate()
    return table, log


def compute_ratios(
    table: MixedTable,
    income_field: str,
    ratio_specs: Sequence[RatioSpec],
    *,
    keep_amounts: bool = False,
) -> MixedTable:
    """Add per-unit-income ratio columns and drop the raw amounts.

    Each spec sums its source amount columns and divides by the income
    column; supplementary specs are marked for profiling only and are not
    clustering inputs.
    """
    if income_field not in table.numeric:
        raise ConfigError(f"unknown income field {income_field!r}")
    income = table.numeric[income_field]
    if np.any(income <= 0):
        raise ContractError("income must be strictly positive for ratio computation")

    numeric = dict(table.numeric) if keep_amounts else {}
    roles = {c: r for c, r in table.roles.items() if keep_amounts or r != ROLE_AMOUNT}
    for spec in ratio_specs:
        total = np.zeros(table.n_rows)
        for src in spec.sources:
            if src not in table.numeric:
                raise ConfigError(f"ratio {spec.name!r} references unknown field {src!r}")
            total = total + table.numeric[src]
        numeric[spec.name] = total / income
        roles[spec.name] = ROLE_SUPPLEMENTARY if spec.supplementary else ROLE_RATIO

    out = MixedTable(
        ids=list(table.ids),
        numeric=numeric,
        categorical={c: list(v) for c, v in table.categorical.items()},
        roles=roles,
    )
    out.validate()
    return out


def _prune_levels(codes: np.ndarray, labels: list[str], variable: str) -> tuple[np.ndarray, list[str]]:
    used = np.unique(codes)
    k = len(labels)
    if len(used) == k:
        return codes, labels
    warnings.warn(
        f"variable {variable!r}: {k - len(used)} declared level(s) unused; renumbering",
        stacklevel=3,
    )
    remap = np.zeros(k + 1, dtype=int)
    remap[used] = np.arange(1, len(used) + 1)
    return remap[codes], [labels[u - 1] for u in used]


def bin_continuous(table: MixedTable, scheme: BinningScheme) -> CodedMatrix:
    """Map clustering ratios to ordinal levels and categoricals to nominal codes.

    Ratio r gets the level of its half-open interval [b_{m-1}, b_m); nominal
    codes follow the lexicographic order of the observed level strings.
    Unused declared levels are pruned with renumbering and a warning.
    """
    variables: list[str] = []
    columns: list[np.ndarray] = []
    kinds: list[str] = []
    counts: list[int] = []
    labels: list[list[str]] = []

    for name in table.columns_with_role(ROLE_RATIO):
        if name not in scheme.variables:
            raise ConfigError(f"no binning scheme entry for variable {name!r}")
        values = table.numeric[name]
        if np.any(values < 0):
            raise ContractError(f"negative ratio in variable {name!r}")
        edges = np.asarray(scheme.variables[name], dtype=float)
        codes = np.searchsorted(edges, values, side="right") + 1
        codes, lab = _prune_levels(codes.astype(int), scheme.level_labels(name), name)
        variables.append(name)
        columns.append(codes)
        kinds.append("ordinal")
        counts.append(len(lab))
        labels.append(lab)

    for name, col in table.categorical.items():
        levels = sorted(set(col))
        index = {lvl: i + 1 for i, lvl in enumerate(levels)}
        codes = np.array([index[v] for v in col], dtype=int)
        variables.append(name)
        columns.append(codes)
        kinds.append("nominal")
        counts.append(len(levels))
        labels.append(levels)

    if not variables:
        raise ContractError("table has no clustering variables to code")
    coded = CodedMatrix(
        ids=list(table.ids),
        variables=variables,
        codes=np.column_stack(columns),
        kinds=kinds,
        level_counts=counts,
        level_labels=labels,
    )
    coded.validate()
    return coded


@dataclass(frozen=True)
class BoxplotStats:
    """Five-number summary with 1.5*IQR fences for one continuous column."""

    variable: str
    role: str
    n: int
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    lower_fence: float
    upper_fence: float
    whisker_low: float
    whisker_high: float
    n_outliers_low: int
    n_outliers_high: int


def summarize_continuous(table: MixedTable) -> tuple[list[BoxplotStats], dict]:
    """Boxplot statistics for every ratio column, plus the convention metadata."""
    if table.n_rows == 0:
        raise ContractError("cannot summarize an empty table")
    out: list[BoxplotStats] = []
    for name in table.numeric:
        role = table.roles[name]
        if role not in (ROLE_RATIO, ROLE_SUPPLEMENTARY):
            continue
        v = np.sort(table.numeric[name])
        q1, med, q3 = (float(x) for x in np.quantile(v, [0.25, 0.5, 0.75]))
        iqr = q3 - q1
        lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
        inside = v[(v >= lo_fence) & (v <= hi_fence)]
        out.append(
            BoxplotStats(
                variable=name,
                role=role,
                n=len(v),
                minimum=float(v[0]),
                q1=q1,
                median=med,
                q3=q3,
                maximum=float(v[-1]),
                lower_fence=lo_fence,
                upper_fence=hi_fence,
                whisker_low=float(inside[0]) if inside.size else med,
                whisker_high=float(inside[-1]) if inside.size else med,
                n_outliers_low=int(np.sum(v < lo_fence)),
                n_outliers_high=int(np.sum(v > hi_fence)),
            )
        )
    return out, {"quartile_convention": QUARTILE_CONVENTION}
