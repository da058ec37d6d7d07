"""Finite-difference validation suite over every differentiable layer.

Each entry builds a small stack, reads it out through a fixed random linear
projection so gradients are generic, and compares analytic gradients of both
the inputs and the parameters against central differences.

In float32 mode (tolerance 1e-3) the analytic side runs in float32 while the
difference quotients are taken through an exactly-upcast float64 twin of the
same stack; probing a float32 forward directly would only measure rounding
noise.  Float64 mode checks both sides in double precision at 1e-5.  Probes
whose FD interval straddles a relu/lrelu/abs kink are redrawn (the loss
closures record the sign patterns of every evaluation for that purpose).
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .losses import FeatureExtractor, bce_logits, bce_logits_grad, content_loss_with_grad
from .models.nets import (
    DiscriminatorLayout,
    DiscriminatorNet,
    GeneratorLayout,
    GeneratorNet,
)
from .nncore import grad_check
from .nncore.layers import (
    BatchNorm2d,
    Conv2d,
    ConvTranspose2d,
    LeakyRelu,
    Module,
    Parameter,
    Relu,
    Sequential,
    copy_state,
    kink_signature,
)

TOLERANCES = {np.float32: 1e-3, np.float64: 1e-5}

TINY_GENERATOR = GeneratorLayout(
    flat_kernel=3, flat_channels=4, down_channels=(4, 8), residual_blocks=2,
    up_channels=(4, 4))
TINY_DISCRIMINATOR = DiscriminatorLayout(
    flat_channels=4, down_channels=((4, 8), (8, 8)), feature_channels=8)


def _signed_away_from_zero(rng, shape, dtype):
    # magnitudes in [0.25, 1]: keeps relu/lrelu kinks clear of the FD probes
    mag = 0.25 + 0.75 * rng.random(shape)
    sign = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
    return (mag * sign).astype(dtype)


def _run_case(
    make_module: Callable,
    make_loss: Callable,
    x_shapes: list[tuple],
    seed: int,
    dtype,
    epsilon: float,
    probes: int,
) -> float:
    """Twin-aware check; make_loss(module, inputs, seed) -> (loss_fn, guard)."""
    rng = np.random.default_rng(seed)
    module = make_module(dtype)
    inputs = [Parameter(_signed_away_from_zero(rng, s, dtype)) for s in x_shapes]
    loss_fn, _ = make_loss(module, inputs, seed)
    params = inputs + module.parameters()

    fd_loss_fn = fd_params = None
    if dtype == np.float32:
        module64 = make_module(np.float64)
        copy_state(module, module64)
        inputs64 = [Parameter(p.value.astype(np.float64)) for p in inputs]
        fd_loss_fn, guard = make_loss(module64, inputs64, seed, grads=False)
        fd_params = inputs64 + module64.parameters()
        min_signal = 1e-6  # float32 cancellation dust on true-zero gradients
    else:
        _, guard = make_loss(module, inputs, seed)
        min_signal = 1e-10

    return grad_check(loss_fn, params, probe_count=probes, epsilon=epsilon,
                      rng=np.random.default_rng(seed + 1),
                      fd_loss_fn=fd_loss_fn, fd_params=fd_params, probe_guard=guard,
                      min_signal=min_signal)


def _projection_loss(train: bool = True):
    def make_loss(module: Module, inputs: list[Parameter], seed: int, grads: bool = True):
        (x,) = inputs
        proj_rng = np.random.default_rng(seed + 9000)
        y0 = module.forward(x.value, train)
        r = proj_rng.standard_normal(y0.shape).astype(x.value.dtype)
        state = {"sig": b""}

        def loss_fn() -> float:
            y = module.forward(x.value, train)
            state["sig"] = kink_signature(module)
            if grads:
                x.grad += module.backward(r.astype(y.dtype))
            return float(np.sum(y.astype(np.float64) * r.astype(np.float64)))

        return loss_fn, (lambda: state["sig"])

    return make_loss


def _three_population_loss(module: Module, inputs: list[Parameter], seed: int,
                           grads: bool = True):
    state = {"sig": b""}

    def loss_fn() -> float:
        total = 0.0
        sigs = []
        for inp, target in zip(inputs, (1, 0, 0)):
            logits = module.forward(inp.value, train=True)
            sigs.append(kink_signature(module))
            total += bce_logits(logits, target)
            if grads:
                inp.grad += module.backward(bce_logits_grad(logits, target))
        state["sig"] = b"".join(sigs)
        return total

    return loss_fn, (lambda: state["sig"])


def _fool_loss(module: Module, inputs: list[Parameter], seed: int, grads: bool = True):
    (gp,) = inputs
    state = {"sig": b""}

    def loss_fn() -> float:
        logits = module.forward(gp.value, train=True)
        state["sig"] = kink_signature(module)
        if grads:
            gp.grad += module.backward(bce_logits_grad(logits, 1))
        return bce_logits(logits, 1)

    return loss_fn, (lambda: state["sig"])


class _ContentWrapper(Module):
    """Adapts FeatureExtractor to the Module protocol used by the suite."""

    def __init__(self, seed: int, dtype):
        self.f = FeatureExtractor(seed=seed, dtype=dtype)

    def children(self):
        return [("stack", self.f.stack)]

    def parameters(self):
        # frozen by contract: only the gp input gradient is under test
        return []

    def forward(self, x, train):
        return self.f.forward(x)

    def backward(self, dout):
        return self.f.backward(dout)


def _content_loss(module: _ContentWrapper, inputs: list[Parameter], seed: int,
                  grads: bool = True):
    ref_rng = np.random.default_rng(seed + 9100)
    (gp,) = inputs
    p = _signed_away_from_zero(ref_rng, gp.value.shape, gp.value.dtype)
    state = {"sig": b""}

    def loss_fn() -> float:
        fp = module.f.forward(p)
        sig_p = kink_signature(module)
        loss, dgp = content_loss_with_grad(module.f, p, gp.value)
        sig_gp = kink_signature(module)
        diff_sign = np.packbits(module.f.forward(gp.value) - fp >= 0).tobytes()
        state["sig"] = sig_p + sig_gp + diff_sign
        if grads:
            gp.grad += dgp
        return loss

    return loss_fn, (lambda: state["sig"])


def _eval_bn(dtype) -> BatchNorm2d:
    bn = BatchNorm2d(4, dtype=dtype)
    rng = np.random.default_rng(111)
    bn.running_mean[...] = (rng.standard_normal(4) * 0.1).astype(dtype)
    bn.running_var[...] = (1.0 + 0.2 * rng.random(4)).astype(dtype)
    return bn


def run_layer_suite(dtype=np.float32, seeds=range(5), epsilon: float | None = None) -> dict[str, float]:
    """Max relative FD error per layer family, worst case over the seeds."""
    dtype = np.dtype(dtype).type
    if epsilon is None:
        epsilon = 1e-3 if dtype == np.float32 else 1e-5

    cases = {
        "conv2d_s1": (
            lambda dt: Conv2d(3, 4, 3, 1, 1, np.random.default_rng(101), dt),
            _projection_loss(), [(2, 3, 7, 7)], 16),
        "conv2d_s2": (
            lambda dt: Conv2d(4, 3, 3, 2, 1, np.random.default_rng(102), dt),
            _projection_loss(), [(2, 4, 8, 8)], 16),
        "conv_transpose2d_s2": (
            lambda dt: ConvTranspose2d(4, 3, 3, 2, 1, 1, np.random.default_rng(103), dt),
            _projection_loss(), [(2, 4, 4, 4)], 16),
        "conv_transpose2d_s1": (
            lambda dt: ConvTranspose2d(3, 4, 3, 1, 1, 0, np.random.default_rng(104), dt),
            _projection_loss(), [(2, 3, 6, 6)], 16),
        "batch_norm2d_train": (
            lambda dt: BatchNorm2d(4, dtype=dt),
            _projection_loss(train=True), [(2, 4, 5, 5)], 16),
        "batch_norm2d_eval": (
            _eval_bn,
            _projection_loss(train=False), [(2, 4, 5, 5)], 16),
        "relu": (
            lambda dt: Sequential([("conv", Conv2d(3, 4, 3, 1, 1, np.random.default_rng(105), dt)),
                                   ("act", Relu())]),
            _projection_loss(), [(2, 3, 6, 6)], 16),
        "lrelu": (
            lambda dt: Sequential([("conv", Conv2d(3, 4, 3, 1, 1, np.random.default_rng(106), dt)),
                                   ("act", LeakyRelu())]),
            _projection_loss(), [(2, 3, 6, 6)], 16),
        "adversarial_loss_d": (
            lambda dt: DiscriminatorNet(107, TINY_DISCRIMINATOR, dtype=dt),
            _three_population_loss, [(2, 3, 8, 8)] * 3, 20),
        "adversarial_loss_g": (
            lambda dt: DiscriminatorNet(108, TINY_DISCRIMINATOR, dtype=dt),
            _fool_loss, [(2, 3, 8, 8)], 20),
        "content_loss": (
            lambda dt: _ContentWrapper(109, dt),
            _content_loss, [(1, 3, 8, 8)], 20),
        "generator_micrograph": (
            lambda dt: GeneratorNet(110, TINY_GENERATOR, dtype=dt),
            _projection_loss(), [(1, 3, 8, 8)], 20),
    }

    results = {}
    for name, (make_module, make_loss, shapes, probes) in cases.items():
        results[name] = max(
            _run_case(make_module, make_loss, shapes, seed, dtype, epsilon, probes)
            for seed in seeds)
    return results
