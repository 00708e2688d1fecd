"""Exception types shared across the package."""


class HomclustError(Exception):
    """Base class for every package-specific failure."""


class SchemaError(HomclustError):
    """Input table does not match the declared column schema."""


class ConfigError(HomclustError):
    """Invalid or inconsistent configuration."""


class ContractError(HomclustError):
    """An operation was called with arguments violating its contract."""


class PipelineError(HomclustError):
    """A pipeline stage cannot proceed."""


class DegeneracyError(HomclustError):
    """Centered scores have rank below the requested dimensionality."""


class SelectionError(HomclustError):
    """Model selection has no converged candidate to choose from."""


class ArtifactError(HomclustError):
    """An artifact file is missing, malformed, or has an incompatible version."""


class StageDependencyError(HomclustError):
    """A required upstream artifact is not present in the run directory."""
