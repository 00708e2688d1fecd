"""End-to-end orchestration: config, staged execution, run manifest."""

from __future__ import annotations

import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from .artifacts import (
    read_cleaned_table,
    read_coded_matrix,
    read_json_artifact,
    read_object_scores,
    read_partition_labels,
    scaling_meta_payload,
    sha256_file,
    write_category_points,
    write_cleaned_table,
    write_cleaning_log,
    write_coded_matrix,
    write_json_artifact,
    write_loss_history,
    write_memberships,
    write_object_scores,
    write_partition_labels,
    write_selection_grid,
    write_table,
)
from .errors import ConfigError, PipelineError
from .ingest import (
    RatioSpec,
    TableSchema,
    bin_continuous,
    clean,
    compute_ratios,
    load_binning_scheme,
    load_table,
)
from .profiling import build_report
from .scaling import category_points, homals_fit
from .seeds import DEFAULT_SEED
from .validation import METHOD_ORDER, fit_partition, sweep

CONFIG_FORMAT = "homclust-config/1"

CLEANED_TABLE = "cleaned_table.csv"
CLEANING_LOG = "cleaning_log.json"
CODED_MATRIX = "coded_matrix.csv"
OBJECT_SCORES = "object_scores.csv"
CATEGORY_POINTS = "category_points.csv"
LOSS_HISTORY = "loss_history.csv"
SCALING_META = "scaling_meta.json"
SELECTION_GRID = "selection_grid.csv"
SELECTION = "selection.json"
PARTITION_LABELS = "cluster_labels.csv"
PARTITION_MEMBERSHIPS = "memberships.csv"
FIT_META = "fit_meta.json"
PROFILE_REPORT = "profile_report.json"
PROFILE_MEANS = "cluster_means.csv"
PROFILE_FREQUENCIES = "level_frequencies.csv"
PROFILE_LIFTS = "level_lifts.csv"
MANIFEST = "manifest.json"
CONFIG_ECHO = "config_used.json"

STAGE_ORDER = ("clean", "bin", "scale", "select", "profile")


@dataclass
class PipelineConfig:
    """Everything a run needs; serializable to one structured text file."""

    input_path: str
    schema: TableSchema
    ratio_specs: list[RatioSpec]
    binning_scheme: str = "table2.default"
    delimiter: str = ","
    p: int = 2
    scaling_tol: float = 1e-8
    scaling_max_iter: int = 1000
    restarts: int = 5
    methods: tuple[str, ...] = METHOD_ORDER
    k_min: int = 2
    k_max: int = 8
    method_options: dict = field(default_factory=dict)
    mean_variables: list[str] | None = None
    categorical_variables: list[str] | None = None
    seed: int = DEFAULT_SEED
    output_dir: str = "run"

    @classmethod
    def from_dict(cls, d: Mapping) -> "PipelineConfig":
        if d.get("format") != CONFIG_FORMAT:
            raise ConfigError(f"config format must be {CONFIG_FORMAT!r}")
        scaling = dict(d.get("scaling", {}))
        sweep_opts = dict(d.get("sweep", {}))
        profile = dict(d.get("profile", {}))
        try:
            ratios = [
                RatioSpec(
                    name=r["name"],
                    sources=tuple(r["sources"]),
                    supplementary=bool(r.get("supplementary", False)),
                )
                for r in d["ratios"]
            ]
            return cls(
                input_path=d["input"],
                schema=TableSchema.from_dict(d["schema"]),
                ratio_specs=ratios,
                binning_scheme=d.get("binning_scheme", "table2.default"),
                delimiter=d.get("delimiter", ","),
                p=int(scaling.get("p", 2)),
                scaling_tol=float(scaling.get("tol", 1e-8)),
                scaling_max_iter=int(scaling.get("max_iter", 1000)),
                restarts=int(scaling.get("restarts", 5)),
                methods=tuple(sweep_opts.get("methods", METHOD_ORDER)),
                k_min=int(sweep_opts.get("k_min", 2)),
                k_max=int(sweep_opts.get("k_max", 8)),
                method_options=dict(sweep_opts.get("method_options", {})),
                mean_variables=profile.get("mean_variables"),
                categorical_variables=profile.get("categoricals"),
                seed=int(d.get("seed", DEFAULT_SEED)),
                output_dir=d.get("output_dir", "run"),
            )
        except KeyError as e:
            raise ConfigError(f"config is missing required key {e}") from e

    def to_dict(self) -> dict:
        return {
            "format": CONFIG_FORMAT,
            "input": self.input_path,
            "delimiter": self.delimiter,
            "schema": self.schema.to_dict(),
            "ratios": [
                {"name": s.name, "sources": list(s.sources), "supplementary": s.supplementary}
                for s in self.ratio_specs
            ],
            "binning_scheme": self.binning_scheme,
            "scaling": {
                "p": self.p,
                "tol": self.scaling_tol,
                "max_iter": self.scaling_max_iter,
                "restarts": self.restarts,
            },
            "sweep": {
                "methods": list(self.methods),
                "k_min": self.k_min,
                "k_max": self.k_max,
                "method_options": self.method_options,
            },
            "profile": {
                "mean_variables": self.mean_variables,
                "categoricals": self.categorical_variables,
            },
            "seed": self.seed,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        try:
            doc = json.loads(Path(path).read_text("utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file {path} does not exist") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
        return cls.from_dict(doc)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def validate(self) -> None:
        if self.k_min < 2 or self.k_min > self.k_max:
            raise ConfigError(f"cluster-count range [{self.k_min}, {self.k_max}] is invalid")
        if self.p < 1:
            raise ConfigError("dimension count must be at least 1")
        if self.restarts < 1:
            raise ConfigError("at least one scaling restart is required")
        for m in self.methods:
            if m not in METHOD_ORDER:
                raise ConfigError(f"unknown partitioning method {m!r}")
        load_binning_scheme(self.binning_scheme)
        if not Path(self.input_path).exists():
            raise ConfigError(f"input file {self.input_path!r} does not exist")

    @property
    def k_range(self) -> range:
        return range(self.k_min, self.k_max + 1)


def stage_clean(config: PipelineConfig, run_dir: Path) -> list[Path]:
    records = load_table(config.input_path, config.schema, delimiter=config.delimiter)
    table, log = clean(records)
    table = compute_ratios(table, "income", config.ratio_specs)
    return [
        write_cleaned_table(run_dir / CLEANED_TABLE, table),
        write_cleaning_log(run_dir / CLEANING_LOG, log),
    ]


def stage_bin(config: PipelineConfig, run_dir: Path) -> list[Path]:
    table = read_cleaned_table(run_dir / CLEANED_TABLE)
    scheme = load_binning_scheme(config.binning_scheme)
    coded = bin_continuous(table, scheme)
    return [write_coded_matrix(run_dir / CODED_MATRIX, coded)]


def stage_scale(config: PipelineConfig, run_dir: Path) -> list[Path]:
    coded = read_coded_matrix(run_dir / CODED_MATRIX)
    solution = homals_fit(
        coded,
        config.p,
        tol=config.scaling_tol,
        max_iter=config.scaling_max_iter,
        restarts=config.restarts,
        seed=config.seed,
    )
    meta = scaling_meta_payload(solution)
    points = category_points(solution, allow_unconverged=True)
    return [
        write_object_scores(run_dir / OBJECT_SCORES, coded.ids, solution.X, meta),
        write_category_points(run_dir / CATEGORY_POINTS, points),
        write_loss_history(run_dir / LOSS_HISTORY, solution.loss_history),
        write_json_artifact(run_dir / SCALING_META, "scaling-meta", meta),
    ]


def stage_select(config: PipelineConfig, run_dir: Path) -> list[Path]:
    ids, X, _ = read_object_scores(run_dir / OBJECT_SCORES)
    n = X.shape[0]
    if config.k_max > n - 1:
        raise ConfigError(
            f"cluster-count range up to {config.k_max} exceeds N-1 = {n - 1}"
        )
    grid = sweep(
        X,
        methods=config.methods,
        k_range=config.k_range,
        seed=config.seed,
        method_options=config.method_options,
    )
    method, k = grid.chosen
    # re-fit the winner through the same per-cell seed path: bit-identical
    result = fit_partition(X, method, k, seed=config.seed, method_options=config.method_options)
    fit_meta = {
        "method": result.method,
        "k": result.k,
        "objective": result.objective,
        "converged": result.converged,
        "iterations": result.iterations,
        "seed": result.seed,
    }
    paths = [
        write_selection_grid(
            run_dir / SELECTION_GRID,
            grid.entries,
            {"seed": config.seed, "chosen_method": method, "chosen_k": k},
        ),
        write_json_artifact(
            run_dir / SELECTION,
            "selection",
            {"chosen_method": method, "chosen_k": k, "seed": config.seed},
        ),
        write_partition_labels(
            run_dir / PARTITION_LABELS, ids, result.labels, {"method": method, "k": k}
        ),
        write_json_artifact(run_dir / FIT_META, "fit-meta", fit_meta),
    ]
    if result.memberships is not None:
        paths.append(
            write_memberships(
                run_dir / PARTITION_MEMBERSHIPS, ids, result.memberships, {"method": method, "k": k}
            )
        )
    return paths


def _render_profile_tables(run_dir: Path, report) -> list[Path]:
    clusters = list(range(1, report.k + 1))
    mean_rows = []
    for var in report.mean_variables:
        row = [var] + [f"{report.means[var][c]:.3f}" for c in clusters]
        row.append(f"{report.means[var]['total']:.3f}")
        mean_rows.append(row)
    means_path = write_table(
        run_dir / PROFILE_MEANS,
        "profile-means",
        ["variable", *[f"cluster{c}" for c in clusters], "total"],
        mean_rows,
        {"k": report.k, "rendering": "3 decimal places"},
    )

    freq_rows = []
    lift_rows = []
    for var in report.categorical_variables:
        for lvl in report.frequencies[var]:
            freq_rows.append(
                [var, lvl]
                + [f"{100 * report.frequencies[var][lvl][c]:.1f}%" for c in clusters]
            )
            lift_rows.append(
                [var, lvl] + [f"{report.lifts[var][lvl][c]:.3f}" for c in clusters]
            )
    freq_rows.append(
        ["(all)", "Total", *[f"{100 * report.shares[c]:.1f}%" for c in clusters]]
    )
    freq_path = write_table(
        run_dir / PROFILE_FREQUENCIES,
        "profile-frequencies",
        ["variable", "level", *[f"cluster{c}" for c in clusters]],
        freq_rows,
        {"k": report.k, "rendering": "percent, 1 decimal place"},
    )
    lifts_path = write_table(
        run_dir / PROFILE_LIFTS,
        "profile-lifts",
        ["variable", "level", *[f"cluster{c}" for c in clusters]],
        lift_rows,
        {"k": report.k, "rendering": "3 decimal places"},
    )
    return [means_path, freq_path, lifts_path]


def stage_profile(config: PipelineConfig, run_dir: Path) -> list[Path]:
    table = read_cleaned_table(run_dir / CLEANED_TABLE)
    ids, labels, _ = read_partition_labels(run_dir / PARTITION_LABELS)
    if ids != table.ids:
        raise PipelineError("partition labels do not align with the cleaned table")
    report = build_report(
        table,
        labels,
        mean_variables=config.mean_variables,
        categorical_variables=config.categorical_variables,
    )
    paths = [
        write_json_artifact(run_dir / PROFILE_REPORT, "profile-report", report.to_dict())
    ]
    paths += _render_profile_tables(run_dir, report)
    return paths


_STAGES = {
    "clean": stage_clean,
    "bin": stage_bin,
    "scale": stage_scale,
    "select": stage_select,
    "profile": stage_profile,
}


def run_stage(name: str, config: PipelineConfig, run_dir: str | Path) -> list[Path]:
    """Run one stage standalone on the artifacts already in ``run_dir``."""
    if name not in _STAGES:
        raise ConfigError(f"unknown stage {name!r}")
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    return _STAGES[name](config, run_dir)


def run_pipeline(config: PipelineConfig, run_dir: str | Path | None = None) -> dict:
    """Execute every stage in order and write the run manifest.

    A stage failure halts the run with the stage name; artifacts written by
    earlier stages stay in place. Returns the manifest dictionary.
    """
    config.validate()
    run_dir = Path(run_dir) if run_dir is not None else Path(config.output_dir)
    run_dir.mkdir(parents=True, exist_ok=True)

    written: list[Path] = []
    timings: dict[str, float] = {}
    for name in STAGE_ORDER:
        start = time.perf_counter()
        try:
            written += _STAGES[name](config, run_dir)
        except Exception as e:
            raise PipelineError(f"stage {name!r} failed: {e}") from e
        timings[name] = time.perf_counter() - start

    selection = read_json_artifact(run_dir / SELECTION, "selection")
    config_path = run_dir / CONFIG_ECHO
    config_path.write_text(
        json.dumps(config.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    written.append(config_path)

    manifest = {
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "chosen_method": selection["chosen_method"],
        "chosen_k": selection["chosen_k"],
        "versions": {
            "homclust": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "stage_timings_seconds": {k: round(v, 6) for k, v in timings.items()},
        "artifacts": {p.name: sha256_file(p) for p in sorted(written)},
    }
    write_json_artifact(run_dir / MANIFEST, "manifest", manifest)
    return manifest
