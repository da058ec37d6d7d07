"""Training configuration and its key-value file format.

The config file is plain text, one ``key = value`` per line, ``#`` comments
allowed.  Keys mirror TrainConfig fields exactly; unknown keys are rejected
so typos fail loudly.
"""

from __future__ import annotations

from dataclasses import dataclass, fields


class ConfigError(ValueError):
    """Bad training configuration or config file."""


@dataclass
class TrainConfig:
    batch_size: int = 11
    init_epochs: int = 10
    gan_epochs: int = 60
    base_lr: float = 1e-3
    max_lr: float = 1e-2
    weight_decay: float = 1e-4
    omega: float = 10.0
    seed: int = 42
    image_size: int = 224
    checkpoint_every: int = 500
    photo_dir: str = ""
    cartoon_dir: str = ""
    smoothed_dir: str = ""

    def validate(self) -> "TrainConfig":
        if self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2 (batch norm needs batch statistics)")
        if self.init_epochs < 0 or self.gan_epochs < 0:
            raise ConfigError("epoch counts must be >= 0")
        if not (0 < self.base_lr <= self.max_lr):
            raise ConfigError("need 0 < base_lr <= max_lr")
        if self.image_size < 4 or self.image_size % 4 != 0:
            raise ConfigError("image_size must be a positive multiple of 4")
        if self.checkpoint_every < 1:
            raise ConfigError("checkpoint_every must be >= 1")
        if self.omega < 0:
            raise ConfigError("omega must be >= 0")
        return self


def parse_config(path) -> TrainConfig:
    """Read a key-value config file into a validated TrainConfig."""
    kinds = {f.name: f.type for f in fields(TrainConfig)}
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in kinds:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            kind = kinds[key]
            try:
                if kind in ("int", int):
                    values[key] = int(val)
                elif kind in ("float", float):
                    values[key] = float(val)
                else:
                    values[key] = val
            except ValueError as e:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {e}") from e
    return TrainConfig(**values).validate()


def write_config(cfg: TrainConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for f in fields(TrainConfig):
            fh.write(f"{f.name} = {getattr(cfg, f.name)}\n")
