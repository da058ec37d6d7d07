"""Generator/discriminator architectures and the CGWT checkpoint format."""

from .checkpoint import (
    BadMagicError,
    CheckpointError,
    TruncatedPayloadError,
    UnknownVersionError,
    apply_net_state,
    collect_net_state,
    load_checkpoint,
    read_archive,
    save_checkpoint,
    write_archive,
)
from .nets import (
    DiscriminatorLayout,
    DiscriminatorNet,
    GeneratorLayout,
    GeneratorNet,
    build_discriminator,
    build_generator,
    discriminator_forward,
    generator_forward,
)

__all__ = [
    "BadMagicError",
    "CheckpointError",
    "DiscriminatorLayout",
    "DiscriminatorNet",
    "GeneratorLayout",
    "GeneratorNet",
    "TruncatedPayloadError",
    "UnknownVersionError",
    "apply_net_state",
    "build_discriminator",
    "build_generator",
    "collect_net_state",
    "discriminator_forward",
    "generator_forward",
    "load_checkpoint",
    "read_archive",
    "save_checkpoint",
    "write_archive",
]
