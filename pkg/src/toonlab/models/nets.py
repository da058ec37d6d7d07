"""Generator and patch-discriminator stacks.

Layer counts and per-layer kernel/channel/stride values live in layout
dataclasses rather than inline literals, so a corrected reading of the
architecture diagram only ever touches the defaults here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nncore.layers import (
    BatchNorm2d,
    Conv2d,
    ConvTranspose2d,
    LeakyRelu,
    Module,
    Relu,
    Residual,
    Sequential,
)
from ..nncore.ops import ShapeError


@dataclass(frozen=True)
class GeneratorLayout:
    flat_kernel: int = 7
    flat_channels: int = 64
    down_channels: tuple[int, ...] = (128, 256)
    residual_blocks: int = 8
    up_channels: tuple[int, ...] = (128, 64)

    def to_dict(self) -> dict:
        return {
            "flat_kernel": self.flat_kernel,
            "flat_channels": self.flat_channels,
            "down_channels": list(self.down_channels),
            "residual_blocks": self.residual_blocks,
            "up_channels": list(self.up_channels),
        }

    @staticmethod
    def from_dict(d: dict) -> "GeneratorLayout":
        return GeneratorLayout(
            flat_kernel=d["flat_kernel"],
            flat_channels=d["flat_channels"],
            down_channels=tuple(d["down_channels"]),
            residual_blocks=d["residual_blocks"],
            up_channels=tuple(d["up_channels"]),
        )


@dataclass(frozen=True)
class DiscriminatorLayout:
    flat_channels: int = 32
    down_channels: tuple[tuple[int, int], ...] = ((64, 128), (128, 256))
    feature_channels: int = 256

    def to_dict(self) -> dict:
        return {
            "flat_channels": self.flat_channels,
            "down_channels": [list(pair) for pair in self.down_channels],
            "feature_channels": self.feature_channels,
        }

    @staticmethod
    def from_dict(d: dict) -> "DiscriminatorLayout":
        return DiscriminatorLayout(
            flat_channels=d["flat_channels"],
            down_channels=tuple(tuple(pair) for pair in d["down_channels"]),
            feature_channels=d["feature_channels"],
        )


def _check_input(x: np.ndarray, what: str) -> None:
    if x.ndim != 4 or x.shape[1] != 3:
        raise ShapeError(f"{what} expects (N, 3, H, W), got {x.shape}")
    if x.shape[2] % 4 != 0 or x.shape[3] % 4 != 0:
        raise ShapeError(f"{what} needs H and W divisible by 4, got {x.shape[2]}x{x.shape[3]}")


class GeneratorNet(Module):
    """Photo -> cartoon map: flat, 2 down, 8 residual, 2 up, final conv."""

    def __init__(self, seed: int, layout: GeneratorLayout = GeneratorLayout(), dtype=np.float32):
        self.layout = layout
        rng = np.random.default_rng(seed)
        lo = layout
        fk = lo.flat_kernel
        blocks: list[tuple[str, Module]] = []

        blocks.append(("flat", Sequential([
            ("conv", Conv2d(3, lo.flat_channels, fk, 1, fk // 2, rng, dtype)),
            ("norm", BatchNorm2d(lo.flat_channels, dtype=dtype)),
            ("act", Relu()),
        ])))

        c = lo.flat_channels
        for i, n in enumerate(lo.down_channels, start=1):
            blocks.append((f"down{i}", Sequential([
                ("conv_stride", Conv2d(c, n, 3, 2, 1, rng, dtype)),
                ("conv", Conv2d(n, n, 3, 1, 1, rng, dtype)),
                ("norm", BatchNorm2d(n, dtype=dtype)),
                ("act", Relu()),
            ])))
            c = n

        for i in range(1, lo.residual_blocks + 1):
            body = Sequential([
                ("conv1", Conv2d(c, c, 3, 1, 1, rng, dtype)),
                ("norm1", BatchNorm2d(c, dtype=dtype)),
                ("act", Relu()),
                ("conv2", Conv2d(c, c, 3, 1, 1, rng, dtype)),
                ("norm2", BatchNorm2d(c, dtype=dtype)),
            ])
            blocks.append((f"res{i}", Residual(body)))

        for i, n in enumerate(lo.up_channels, start=1):
            blocks.append((f"up{i}", Sequential([
                ("upconv", ConvTranspose2d(c, n, 3, 2, 1, 1, rng, dtype)),
                ("conv", Conv2d(n, n, 3, 1, 1, rng, dtype)),
                ("norm", BatchNorm2d(n, dtype=dtype)),
                ("act", Relu()),
            ])))
            c = n

        # bare final convolution: outputs stay unbounded until image export
        blocks.append(("final", Sequential([
            ("conv", Conv2d(c, 3, fk, 1, fk // 2, rng, dtype)),
        ])))

        self.spine = Sequential(blocks)
        self.attach_names("generator.")

    @property
    def block_count(self) -> int:
        return len(self.spine.children())

    def children(self):
        return [("spine", self.spine)]

    def forward(self, x, train):
        _check_input(x, "generator")
        return self.spine.forward(x, train)

    def backward(self, dout):
        return self.spine.backward(dout)


class DiscriminatorNet(Module):
    """Patch classifier: every output logit scores one local region."""

    def __init__(self, seed: int, layout: DiscriminatorLayout = DiscriminatorLayout(),
                 dtype=np.float32):
        self.layout = layout
        rng = np.random.default_rng(seed)
        lo = layout
        blocks: list[tuple[str, Module]] = []

        blocks.append(("flat", Sequential([
            ("conv", Conv2d(3, lo.flat_channels, 3, 1, 1, rng, dtype)),
            ("act", LeakyRelu()),
        ])))

        c = lo.flat_channels
        for i, (n_stride, n_flat) in enumerate(lo.down_channels, start=1):
            blocks.append((f"down{i}", Sequential([
                ("conv_stride", Conv2d(c, n_stride, 3, 2, 1, rng, dtype)),
                ("conv", Conv2d(n_stride, n_flat, 3, 1, 1, rng, dtype)),
                ("norm", BatchNorm2d(n_flat, dtype=dtype)),
                ("act", LeakyRelu()),
            ])))
            c = n_flat

        blocks.append(("feature", Sequential([
            ("conv", Conv2d(c, lo.feature_channels, 3, 1, 1, rng, dtype)),
            ("norm", BatchNorm2d(lo.feature_channels, dtype=dtype)),
            ("act", LeakyRelu()),
        ])))
        c = lo.feature_channels

        blocks.append(("final", Sequential([
            ("conv", Conv2d(c, 1, 3, 1, 1, rng, dtype)),
        ])))

        self.spine = Sequential(blocks)
        self.attach_names("discriminator.")

    @property
    def block_count(self) -> int:
        return len(self.spine.children())

    def children(self):
        return [("spine", self.spine)]

    def forward(self, x, train):
        _check_input(x, "discriminator")
        return self.spine.forward(x, train)

    def backward(self, dout):
        return self.spine.backward(dout)


def build_generator(seed: int, layout: GeneratorLayout = GeneratorLayout()) -> GeneratorNet:
    return GeneratorNet(seed, layout)


def build_discriminator(seed: int, layout: DiscriminatorLayout = DiscriminatorLayout()) -> DiscriminatorNet:
    return DiscriminatorNet(seed, layout)


def generator_forward(g: GeneratorNet, x: np.ndarray, mode: str = "eval") -> np.ndarray:
    """Run the generator; output shape equals input shape."""
    return g.forward(x, train=(mode == "train"))


def discriminator_forward(d: DiscriminatorNet, x: np.ndarray, mode: str = "eval") -> np.ndarray:
    """Run the discriminator; output is an (N, 1, H/4, W/4) patch logit map."""
    return d.forward(x, train=(mode == "train"))
