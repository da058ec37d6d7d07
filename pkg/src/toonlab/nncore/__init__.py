"""From-scratch NCHW tensor core: conv layer zoo, AdamW, cyclic LR, gradcheck."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import layers, ops
from .gradcheck import grad_check
from .layers import (
    BatchNorm2d,
    Conv2d,
    ConvTranspose2d,
    LeakyRelu,
    Module,
    Parameter,
    Relu,
    Residual,
    Sequential,
    kaiming_normal,
)
from .ops import NumericError, ShapeError, activation
from .optim import LrSchedule, adamw_step, cyclic_lr


@dataclass(frozen=True)
class ConvSpec:
    """Kernel side, output channels, stride, and padding of one conv layer."""

    k: int
    n: int
    s: int = 1
    padding: int = 0

    def __post_init__(self):
        if self.k < 1 or self.n < 1 or self.s < 1 or self.padding < 0:
            raise ValueError(f"invalid conv spec {self}")


def _check_spec(w: np.ndarray, spec: ConvSpec, out_axis: int) -> None:
    if w.shape[out_axis] != spec.n or w.shape[2] != spec.k or w.shape[3] != spec.k:
        raise ShapeError(f"weight shape {w.shape} inconsistent with spec {spec}")


def conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray, spec: ConvSpec) -> np.ndarray:
    """Strided cross-correlation; w is (n, c_in, k, k)."""
    _check_spec(w, spec, out_axis=0)
    return ops.conv2d_forward(x, w, b, spec.s, spec.padding)


def conv_transpose2d(
    x: np.ndarray, w: np.ndarray, b: np.ndarray, spec: ConvSpec, output_pad: int = 0
) -> np.ndarray:
    """Transposed convolution; w is (c_in, n, k, k)."""
    _check_spec(w, spec, out_axis=1)
    return ops.conv_transpose2d_forward(x, w, b, spec.s, spec.padding, output_pad)


def batch_norm2d(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    mode: str = "train",
) -> np.ndarray:
    """Functional batchnorm; mode is 'train' or 'eval'."""
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    y, _ = ops.batchnorm2d_forward(x, gamma, beta, running_mean, running_var, mode == "train")
    return y


__all__ = [
    "BatchNorm2d",
    "Conv2d",
    "ConvSpec",
    "ConvTranspose2d",
    "LeakyRelu",
    "LrSchedule",
    "Module",
    "NumericError",
    "Parameter",
    "Relu",
    "Residual",
    "Sequential",
    "ShapeError",
    "activation",
    "adamw_step",
    "batch_norm2d",
    "conv2d",
    "conv_transpose2d",
    "cyclic_lr",
    "grad_check",
    "kaiming_normal",
    "layers",
    "ops",
]
