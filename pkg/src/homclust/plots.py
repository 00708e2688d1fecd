"""Plot-data export and figure rendering for a completed run directory."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .artifacts import (
    read_category_points,
    read_cleaned_table,
    read_object_scores,
    read_selection_grid,
    write_table,
)
from .errors import ArtifactError, ContractError, StageDependencyError
from .ingest import summarize_continuous
from .pipeline import CATEGORY_POINTS, CLEANED_TABLE, OBJECT_SCORES, SELECTION_GRID

FIGURE_KINDS = ("boxplots", "joint-map", "silhouette-curve")

PLOTDATA_DIR = "plotdata"
FIGURES_DIR = "figures"


def _require(run_dir: Path, filename: str, stage: str) -> Path:
    path = run_dir / filename
    if not path.exists():
        raise StageDependencyError(
            f"{filename} is missing from {run_dir}; run the {stage!r} stage first"
        )
    return path


def export_boxplots(run_dir: Path) -> list[Path]:
    table = read_cleaned_table(_require(run_dir, CLEANED_TABLE, "clean"))
    stats, meta = summarize_continuous(table)
    header = [
        "variable",
        "role",
        "n",
        "min",
        "q1",
        "median",
        "q3",
        "max",
        "lower_fence",
        "upper_fence",
        "whisker_low",
        "whisker_high",
        "n_outliers_low",
        "n_outliers_high",
    ]
    rows = [
        [
            s.variable,
            s.role,
            s.n,
            s.minimum,
            s.q1,
            s.median,
            s.q3,
            s.maximum,
            s.lower_fence,
            s.upper_fence,
            s.whisker_low,
            s.whisker_high,
            s.n_outliers_low,
            s.n_outliers_high,
        ]
        for s in stats
    ]
    data_path = write_table(
        run_dir / PLOTDATA_DIR / "boxplots.csv", "plot-boxplots", header, rows, meta
    )

    fig, ax = plt.subplots(figsize=(max(6, 1.1 * len(stats)), 4.5))
    bxp_stats = [
        {
            "label": s.variable,
            "med": s.median,
            "q1": s.q1,
            "q3": s.q3,
            "whislo": s.whisker_low,
            "whishi": s.whisker_high,
            "fliers": [],
        }
        for s in stats
    ]
    ax.bxp(bxp_stats, showfliers=False)
    ax.set_ylabel("ratio to annual income")
    ax.tick_params(axis="x", rotation=45)
    for tick in ax.get_xticklabels():
        tick.set_horizontalalignment("right")
    fig.tight_layout()
    fig_path = run_dir / FIGURES_DIR / "boxplots.png"
    fig_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(fig_path, dpi=150)
    plt.close(fig)
    return [data_path, fig_path]


def export_joint_map(run_dir: Path) -> list[Path]:
    ids, X, _ = read_object_scores(_require(run_dir, OBJECT_SCORES, "scale"))
    points = read_category_points(_require(run_dir, CATEGORY_POINTS, "scale"))
    if X.shape[1] < 2:
        raise ContractError("the joint map needs at least 2 dimensions")

    header = ["variable", "level", "label", "dim1", "dim2", "ordinal"]
    rows = [
        [p.variable, p.level, p.label, p.coords[0], p.coords[1], p.ordinal] for p in points
    ]
    points_path = write_table(
        run_dir / PLOTDATA_DIR / "joint_map_points.csv", "plot-joint-map-points", header, rows, {}
    )
    scores_rows = [[ids[i], X[i, 0], X[i, 1]] for i in range(X.shape[0])]
    scores_path = write_table(
        run_dir / PLOTDATA_DIR / "joint_map_scores.csv",
        "plot-joint-map-scores",
        ["id", "dim1", "dim2"],
        scores_rows,
        {},
    )
    # arrow endpoints: level 1 -> level k along each ordinal variable
    arrows = []
    ordinals = sorted({p.variable for p in points if p.ordinal})
    for var in ordinals:
        per = sorted((p for p in points if p.variable == var), key=lambda p: p.level)
        arrows.append([var, per[0].coords[0], per[0].coords[1], per[-1].coords[0], per[-1].coords[1]])
    arrows_path = write_table(
        run_dir / PLOTDATA_DIR / "joint_map_arrows.csv",
        "plot-joint-map-arrows",
        ["variable", "from_dim1", "from_dim2", "to_dim1", "to_dim2"],
        arrows,
        {},
    )

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(12, 5.5))
    ax1.scatter(X[:, 0], X[:, 1], s=4, alpha=0.25, color="0.6", linewidths=0)
    cmap = plt.get_cmap("tab10")
    for i, var in enumerate(ordinals):
        per = sorted((p for p in points if p.variable == var), key=lambda p: p.level)
        xs = [p.coords[0] for p in per]
        ys = [p.coords[1] for p in per]
        color = cmap(i % 10)
        ax1.plot(xs, ys, marker="o", markersize=3, linewidth=1.2, color=color, label=var)
        ax1.annotate(
            "",
            xy=(xs[-1], ys[-1]),
            xytext=(xs[0], ys[0]),
            arrowprops=dict(arrowstyle="->", color=color, lw=1.0, alpha=0.8),
        )
    ax1.legend(fontsize=7, loc="best")
    ax1.set_title("object scores and ordinal category points")
    ax1.set_xlabel("dimension 1")
    ax1.set_ylabel("dimension 2")

    nominals = sorted({p.variable for p in points if not p.ordinal})
    for i, var in enumerate(nominals):
        per = [p for p in points if p.variable == var]
        color = cmap(i % 10)
        ax2.scatter(
            [p.coords[0] for p in per], [p.coords[1] for p in per], s=18, color=color, label=var
        )
        for p in per:
            ax2.annotate(p.label, p.coords[:2], fontsize=6, color=color)
    if nominals:
        ax2.legend(fontsize=7, loc="best")
    ax2.set_title("nominal category points")
    ax2.set_xlabel("dimension 1")
    ax2.set_ylabel("dimension 2")
    fig.tight_layout()
    fig_path = run_dir / FIGURES_DIR / "joint_map.png"
    fig_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(fig_path, dpi=150)
    plt.close(fig)
    return [points_path, scores_path, arrows_path, fig_path]


def export_silhouette_curve(run_dir: Path) -> list[Path]:
    meta, entries = read_selection_grid(_require(run_dir, SELECTION_GRID, "select"))
    header = ["method", "k", "avg_silhouette", "converged"]
    rows = [
        [e["method"], e["k"], "" if e["avg_silhouette"] is None else e["avg_silhouette"], e["converged"]]
        for e in entries
    ]
    data_path = write_table(
        run_dir / PLOTDATA_DIR / "silhouette_curve.csv", "plot-silhouette-curve", header, rows, meta
    )

    fig, ax = plt.subplots(figsize=(7, 4.5))
    methods = sorted({e["method"] for e in entries})
    markers = {"kmeans": "o", "pam": "s", "clara": "^", "fanny": "d"}
    for method in methods:
        per = sorted((e for e in entries if e["method"] == method), key=lambda e: e["k"])
        ks = [e["k"] for e in per]
        # non-converged cells plot as gaps, like the missing fuzzy points
        vals = [np.nan if e["avg_silhouette"] is None else e["avg_silhouette"] for e in per]
        ax.plot(ks, vals, marker=markers.get(method, "o"), label=method)
    ax.set_xlabel("number of clusters")
    ax.set_ylabel("average silhouette width")
    ax.legend()
    fig.tight_layout()
    fig_path = run_dir / FIGURES_DIR / "silhouette_curve.png"
    fig_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(fig_path, dpi=150)
    plt.close(fig)
    return [data_path, fig_path]


_EXPORTERS = {
    "boxplots": export_boxplots,
    "joint-map": export_joint_map,
    "silhouette-curve": export_silhouette_curve,
}


def export_plot_data(run_dir: str | Path, kind: str = "all") -> list[Path]:
    """Write tidy plot tables and rendered figures for one figure kind.

    ``kind`` is one of boxplots, joint-map, silhouette-curve, or all. Missing
    upstream artifacts raise a dependency error naming the stage to run.
    """
    run_dir = Path(run_dir)
    if kind == "all":
        paths: list[Path] = []
        for k in FIGURE_KINDS:
            paths += _EXPORTERS[k](run_dir)
        return paths
    if kind not in _EXPORTERS:
        raise ContractError(f"unknown figure kind {kind!r}; choose from {FIGURE_KINDS} or 'all'")
    return _EXPORTERS[kind](run_dir)
