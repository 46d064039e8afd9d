"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operands have incompatible shapes."""


class ConfigError(ValueError):
    """A configuration value is invalid or inconsistent with the model."""


class TrainingError(RuntimeError):
    """Training produced a non-finite value or otherwise diverged."""


class InferenceError(RuntimeError):
    """A forward pass produced an invalid (non-finite) result."""


class PerceptionError(RuntimeError):
    """An embedder call failed (e.g. out-of-vocabulary prompt token)."""


class ValidationError(ValueError):
    """A domain object violates one of its invariants."""


class PlyParseError(ValueError):
    """A PLY file could not be parsed; carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class PipelineError(RuntimeError):
    """A pipeline stage failed; names the stage."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}': {message}")
        self.stage = stage
