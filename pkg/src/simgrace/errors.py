"""Exception types shared across the package."""


class SimgraceError(Exception):
    """Base class for all package-specific errors."""


class IngestionError(SimgraceError):
    """A mandatory dataset file is missing or unreadable."""


class ParseError(SimgraceError):
    """A dataset file contains a token that cannot be parsed."""

    def __init__(self, path, line_number: int, message: str):
        super().__init__(f"{path}:{line_number}: {message}")
        self.path = path
        self.line_number = line_number


class MalformedDatasetError(SimgraceError):
    """Dataset files are individually readable but mutually inconsistent."""


class ConfigError(SimgraceError):
    """An operation was configured inconsistently with its inputs."""


class ShapeError(SimgraceError):
    """Tensor shapes do not line up."""


class DegenerateEmbeddingError(SimgraceError):
    """An embedding row has zero norm where a direction is required."""


class NumericError(SimgraceError):
    """A non-finite value appeared during numeric evaluation."""


class CheckpointError(SimgraceError):
    """A checkpoint file is unreadable or inconsistent with the model."""
