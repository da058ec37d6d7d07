"""AdamW step with decoupled weight decay, and the triangular cyclic LR."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import Parameter
from .ops import NumericError


def adamw_step(
    p: Parameter,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 1e-4,
) -> None:
    """One decoupled-weight-decay Adam update in place.

    value <- value - lr * mhat / (sqrt(vhat) + eps) - lr * weight_decay * value

    The gradient is left untouched; the caller zeroes it between steps.
    """
    g = p.grad
    if not np.all(np.isfinite(g)):
        raise NumericError(f"non-finite gradient in parameter {p.name or '<unnamed>'}")
    p.m *= beta1
    p.m += (1.0 - beta1) * g
    p.v *= beta2
    p.v += (1.0 - beta2) * np.square(g)
    p.step_count += 1
    t = p.step_count
    mhat = p.m / (1.0 - beta1 ** t)
    vhat = p.v / (1.0 - beta2 ** t)
    p.value -= (lr * (mhat / (np.sqrt(vhat) + eps)) + lr * weight_decay * p.value).astype(
        p.value.dtype, copy=False
    )


@dataclass
class LrSchedule:
    """Triangular cyclic schedule: base -> max over half_cycle steps and back."""

    base_lr: float = 1e-3
    max_lr: float = 1e-2
    half_cycle: int = 1
    policy: str = "triangular"

    def __post_init__(self):
        if not (0 < self.base_lr <= self.max_lr):
            raise ValueError("need 0 < base_lr <= max_lr")
        if self.half_cycle < 1:
            raise ValueError("half_cycle must be >= 1")
        if self.policy != "triangular":
            raise ValueError(f"unsupported policy {self.policy!r}")


def cyclic_lr(t: int, sched: LrSchedule) -> float:
    """Learning rate at step t under the triangular policy."""
    if t < 0:
        raise ValueError("step index must be >= 0")
    period = 2 * sched.half_cycle
    tau = t % period
    if tau > sched.half_cycle:
        tau = period - tau
    frac = tau / sched.half_cycle
    return sched.base_lr + (sched.max_lr - sched.base_lr) * frac
