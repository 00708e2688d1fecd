"""Mixed-type record profiling: binning, joint scaling, clustering, validation."""

__version__ = "0.1.0"

from .clustering import PartitionResult, clara, dissimilarity, fanny, kmeans, pam
from .errors import (
    ArtifactError,
    ConfigError,
    ContractError,
    DegeneracyError,
    HomclustError,
    PipelineError,
    SchemaError,
    SelectionError,
    StageDependencyError,
)
from .ingest import (
    BinningScheme,
    CleaningLog,
    CodedMatrix,
    MixedTable,
    RatioSpec,
    RawRecord,
    TableSchema,
    bin_continuous,
    clean,
    compute_ratios,
    default_scheme,
    load_binning_scheme,
    load_table,
    summarize_continuous,
)
from .pipeline import PipelineConfig, run_pipeline, run_stage
from .profiling import ProfileReport, build_report, cluster_means, level_frequencies, lift
from .scaling import (
    CategoryPoint,
    IndicatorExpansion,
    ScalingSolution,
    category_points,
    expand_indicators,
    homals_fit,
    loss,
    orthonormalize,
    pava,
)
from .seeds import DEFAULT_SEED, derive_rng
from .validation import (
    ModelSelectionGrid,
    SilhouetteReport,
    fit_partition,
    pick_best,
    silhouette,
    sweep,
)

__all__ = [
    "__version__",
    "DEFAULT_SEED",
    "ArtifactError",
    "BinningScheme",
    "CategoryPoint",
    "CleaningLog",
    "CodedMatrix",
    "ConfigError",
    "ContractError",
    "DegeneracyError",
    "HomclustError",
    "IndicatorExpansion",
    "MixedTable",
    "ModelSelectionGrid",
    "PartitionResult",
    "PipelineConfig",
    "PipelineError",
    "ProfileReport",
    "RatioSpec",
    "RawRecord",
    "ScalingSolution",
    "SchemaError",
    "SelectionError",
    "SilhouetteReport",
    "StageDependencyError",
    "TableSchema",
    "bin_continuous",
    "build_report",
    "category_points",
    "clara",
    "clean",
    "cluster_means",
    "compute_ratios",
    "default_scheme",
    "derive_rng",
    "dissimilarity",
    "expand_indicators",
    "fanny",
    "fit_partition",
    "homals_fit",
    "kmeans",
    "level_frequencies",
    "lift",
    "load_binning_scheme",
    "load_table",
    "loss",
    "orthonormalize",
    "pam",
    "pava",
    "pick_best",
    "run_pipeline",
    "run_stage",
    "silhouette",
    "summarize_continuous",
    "sweep",
]
