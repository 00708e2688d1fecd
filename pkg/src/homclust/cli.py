"""Command-line entry point: staged subcommands plus the full pipeline."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .demo import demo_config_dict, write_demo_dataset
from .errors import HomclustError
from .pipeline import (
    FIT_META,
    PARTITION_MEMBERSHIPS,
    STAGE_ORDER,
    PipelineConfig,
    run_pipeline,
    run_stage,
)
from .seeds import DEFAULT_SEED


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="pipeline configuration file (JSON)")
    parser.add_argument("--run-dir", help="run directory (default: the config's output_dir)")
    parser.add_argument("--input", help="override: input table path")
    parser.add_argument("--delimiter", help="override: input field delimiter")
    parser.add_argument("--scheme", help="override: binning scheme (name or path)")
    parser.add_argument("--p", type=int, help="override: reduced-space dimension count")
    parser.add_argument("--tol", type=float, help="override: scaling convergence tolerance")
    parser.add_argument("--max-iter", type=int, help="override: scaling iteration cap")
    parser.add_argument("--restarts", type=int, help="override: scaling restarts")
    parser.add_argument("--methods", help="override: comma-separated partitioning methods")
    parser.add_argument("--k-min", type=int, help="override: smallest cluster count")
    parser.add_argument("--k-max", type=int, help="override: largest cluster count")
    parser.add_argument(
        "--seed", type=int, help=f"override: base seed (config default {DEFAULT_SEED})"
    )
    parser.add_argument("--output-dir", help="override: the config's output directory")


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    doc = json.loads(Path(args.config).read_text("utf-8"))
    overrides = {
        "input": args.input,
        "delimiter": args.delimiter,
        "binning_scheme": args.scheme,
        "seed": args.seed,
        "output_dir": args.output_dir,
    }
    for key, value in overrides.items():
        if value is not None:
            doc[key] = value
    scaling = doc.setdefault("scaling", {})
    for key, value in (("p", args.p), ("tol", args.tol), ("max_iter", args.max_iter), ("restarts", args.restarts)):
        if value is not None:
            scaling[key] = value
    sweep_opts = doc.setdefault("sweep", {})
    if args.methods is not None:
        sweep_opts["methods"] = [m.strip() for m in args.methods.split(",") if m.strip()]
    for key, value in (("k_min", args.k_min), ("k_max", args.k_max)):
        if value is not None:
            sweep_opts[key] = value
    return PipelineConfig.from_dict(doc)


def _run_dir(args: argparse.Namespace, config: PipelineConfig) -> Path:
    return Path(args.run_dir) if args.run_dir else Path(config.output_dir)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="homclust",
        description=(
            "Profile mixed-type records: clean and bin ratios, place observations "
            "and categories on a joint map, pick the partitioning method and "
            "cluster count by silhouette width, and describe the clusters."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    demo = sub.add_parser("demo-data", help="generate the synthetic 3-segment demo dataset")
    demo.add_argument("--out", required=True, help="CSV path to write")
    demo.add_argument("--n", type=int, default=5000, help="good records to generate")
    demo.add_argument("--seed", type=int, default=DEFAULT_SEED)
    demo.add_argument("--config-out", help="also write a ready pipeline config here")
    demo.add_argument("--output-dir", default="run", help="output_dir for the written config")

    pipe = sub.add_parser("pipeline", help="run every stage end to end")
    _add_config_arguments(pipe)

    for name in STAGE_ORDER:
        stage = sub.add_parser(name, help=f"run only the {name!r} stage on prior artifacts")
        _add_config_arguments(stage)

    cluster = sub.add_parser("cluster", help="fit one method at one k on the object scores")
    _add_config_arguments(cluster)
    cluster.add_argument("--method", required=True, choices=["kmeans", "pam", "clara", "fanny"])
    cluster.add_argument("--k", type=int, required=True)

    export = sub.add_parser("export-plot", help="write plot data tables and rendered figures")
    export.add_argument("--run-dir", required=True)
    export.add_argument(
        "--kind",
        default="all",
        choices=["boxplots", "joint-map", "silhouette-curve", "all"],
    )
    return parser


def _cmd_demo_data(args: argparse.Namespace) -> int:
    path = write_demo_dataset(args.out, n=args.n, seed=args.seed)
    print(f"wrote {path}")
    if args.config_out:
        cfg = demo_config_dict(path, args.output_dir, seed=args.seed)
        Path(args.config_out).write_text(json.dumps(cfg, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {args.config_out}")
    return 0


def _cmd_cluster(args: argparse.Namespace) -> int:
    import numpy as np

    from .artifacts import (
        read_object_scores,
        write_json_artifact,
        write_memberships,
        write_partition_labels,
    )
    from .pipeline import OBJECT_SCORES
    from .validation import fit_partition

    config = _load_config(args)
    run_dir = _run_dir(args, config)
    ids, X, _ = read_object_scores(run_dir / OBJECT_SCORES)
    result = fit_partition(
        X, args.method, args.k, seed=config.seed, method_options=config.method_options
    )
    prefix = f"cluster_{args.method}_k{args.k}"
    write_partition_labels(
        run_dir / f"{prefix}_labels.csv", ids, result.labels, {"method": args.method, "k": args.k}
    )
    write_json_artifact(
        run_dir / f"{prefix}_meta.json",
        "fit-meta",
        {
            "method": result.method,
            "k": result.k,
            "objective": result.objective,
            "converged": result.converged,
            "iterations": result.iterations,
            "seed": result.seed,
        },
    )
    if result.memberships is not None:
        write_memberships(
            run_dir / f"{prefix}_memberships.csv",
            ids,
            result.memberships,
            {"method": args.method, "k": args.k},
        )
    print(
        f"{args.method} k={args.k}: objective={result.objective:.6f} "
        f"converged={result.converged}"
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "demo-data":
            return _cmd_demo_data(args)
        if args.command == "export-plot":
            from .plots import export_plot_data

            for path in export_plot_data(args.run_dir, args.kind):
                print(f"wrote {path}")
            return 0
        if args.command == "cluster":
            return _cmd_cluster(args)

        config = _load_config(args)
        run_dir = _run_dir(args, config)
        if args.command == "pipeline":
            manifest = run_pipeline(config, run_dir)
            print(
                f"pipeline complete: chose {manifest['chosen_method']} "
                f"with k={manifest['chosen_k']} (run dir: {run_dir})"
            )
            return 0
        for path in run_stage(args.command, config, run_dir):
            print(f"wrote {path}")
        return 0
    except HomclustError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
