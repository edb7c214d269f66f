"""Training pipelines, checkpointing, CLI, inference service, recommendation."""

from .config import TrainingConfig
from .checkpoint import ModelCheckpoint

__all__ = ["TrainingConfig", "ModelCheckpoint"]
