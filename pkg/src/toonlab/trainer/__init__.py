"""Dataset streaming, training loops, and stylization inference."""

from .config import ConfigError, TrainConfig, parse_config, write_config
from .data import ImageFolder, load_dataset, steps_per_epoch
from .loop import (
    STATS_CSV_HEADER,
    EpochStats,
    StepStats,
    TrainingBatch,
    content_step,
    gan_step,
    init_phase,
    stylize,
    stylize_with,
    train,
)

__all__ = [
    "ConfigError",
    "EpochStats",
    "ImageFolder",
    "STATS_CSV_HEADER",
    "StepStats",
    "TrainConfig",
    "TrainingBatch",
    "content_step",
    "gan_step",
    "init_phase",
    "load_dataset",
    "parse_config",
    "steps_per_epoch",
    "stylize",
    "stylize_with",
    "train",
    "write_config",
]
