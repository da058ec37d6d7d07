"""Layer objects composing the ops into trainable stacks.

Each layer caches what its backward pass needs during forward, and backward
accumulates parameter gradients in place while returning the input gradient.
The fixed layer set here (conv, transposed conv, batchnorm, relu/lrelu plus
Sequential/Residual containers) is everything the generator and patch
discriminator require; there is no general autodiff graph.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np

from . import ops


class Parameter:
    """A tensor with its gradient accumulator and AdamW moment state."""

    def __init__(self, value: np.ndarray, name: str = ""):
        self.value = value
        self.grad = np.zeros_like(value)
        self.m = np.zeros_like(value)
        self.v = np.zeros_like(value)
        self.step_count = 0
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad[...] = 0


def kaiming_normal(rng: np.random.Generator, shape, fan_in: int, dtype=np.float32) -> np.ndarray:
    """Fan-in scaled normal init, std = sqrt(2/fan_in)."""
    std = np.sqrt(2.0 / fan_in)
    return (rng.standard_normal(shape) * std).astype(dtype)


class Module:
    """Base class: a named tree of layers with parameters and buffers."""

    def children(self) -> list[tuple[str, "Module"]]:
        return []

    def own_parameters(self) -> list[tuple[str, Parameter]]:
        return []

    def own_buffers(self) -> list[tuple[str, np.ndarray]]:
        return []

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for name, p in self.own_parameters():
            yield prefix + name, p
        for cname, child in self.children():
            yield from child.named_parameters(prefix + cname + ".")

    def named_buffers(self, prefix: str = "") -> Iterator[tuple[str, np.ndarray]]:
        for name, b in self.own_buffers():
            yield prefix + name, b
        for cname, child in self.children():
            yield from child.named_buffers(prefix + cname + ".")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def attach_names(self, prefix: str = "") -> None:
        """Record each parameter's tree path on the Parameter itself."""
        for name, p in self.named_parameters(prefix):
            p.name = name


def copy_state(src: Module, dst: Module) -> None:
    """Copy parameter values and buffers between structurally equal trees.

    Assignment casts, so a float32 tree copies exactly into a float64 twin.
    """
    src_params = list(src.named_parameters())
    dst_params = list(dst.named_parameters())
    if [n for n, _ in src_params] != [n for n, _ in dst_params]:
        raise ValueError("module trees differ; cannot copy state")
    for (_, ps), (_, pd) in zip(src_params, dst_params):
        pd.value[...] = ps.value
    for (_, bs), (_, bd) in zip(src.named_buffers(), dst.named_buffers()):
        bd[...] = bs


class Conv2d(Module):
    def __init__(self, c_in: int, c_out: int, k: int, stride: int = 1, pad: int = 0,
                 rng: np.random.Generator | None = None, dtype=np.float32):
        self.stride = stride
        self.pad = pad
        if rng is None:
            w = np.zeros((c_out, c_in, k, k), dtype=dtype)
        else:
            w = kaiming_normal(rng, (c_out, c_in, k, k), fan_in=c_in * k * k, dtype=dtype)
        self.weight = Parameter(w)
        self.bias = Parameter(np.zeros(c_out, dtype=dtype))
        self._x: np.ndarray | None = None

    def own_parameters(self):
        return [("weight", self.weight), ("bias", self.bias)]

    def forward(self, x, train):
        self._x = x
        return ops.conv2d_forward(x, self.weight.value, self.bias.value, self.stride, self.pad)

    def backward(self, dout):
        dx, dw, db = ops.conv2d_backward(self._x, self.weight.value, dout, self.stride, self.pad)
        self.weight.grad += dw
        self.bias.grad += db
        return dx


class ConvTranspose2d(Module):
    def __init__(self, c_in: int, c_out: int, k: int, stride: int = 1, pad: int = 0,
                 output_pad: int = 0, rng: np.random.Generator | None = None, dtype=np.float32):
        self.stride = stride
        self.pad = pad
        self.output_pad = output_pad
        if rng is None:
            w = np.zeros((c_in, c_out, k, k), dtype=dtype)
        else:
            w = kaiming_normal(rng, (c_in, c_out, k, k), fan_in=c_in * k * k, dtype=dtype)
        self.weight = Parameter(w)
        self.bias = Parameter(np.zeros(c_out, dtype=dtype))
        self._x: np.ndarray | None = None

    def own_parameters(self):
        return [("weight", self.weight), ("bias", self.bias)]

    def forward(self, x, train):
        self._x = x
        return ops.conv_transpose2d_forward(
            x, self.weight.value, self.bias.value, self.stride, self.pad, self.output_pad)

    def backward(self, dout):
        dx, dw, db = ops.conv_transpose2d_backward(
            self._x, self.weight.value, dout, self.stride, self.pad, self.output_pad)
        self.weight.grad += dw
        self.bias.grad += db
        return dx


class BatchNorm2d(Module):
    def __init__(self, c: int, momentum: float = 0.1, dtype=np.float32):
        self.gamma = Parameter(np.ones(c, dtype=dtype))
        self.beta = Parameter(np.zeros(c, dtype=dtype))
        self.running_mean = np.zeros(c, dtype=dtype)
        self.running_var = np.ones(c, dtype=dtype)
        self.momentum = momentum
        self._cache = None

    def own_parameters(self):
        return [("gamma", self.gamma), ("beta", self.beta)]

    def own_buffers(self):
        return [("running_mean", self.running_mean), ("running_var", self.running_var)]

    def forward(self, x, train):
        y, self._cache = ops.batchnorm2d_forward(
            x, self.gamma.value, self.beta.value,
            self.running_mean, self.running_var, train, self.momentum)
        return y

    def backward(self, dout):
        dx, dgamma, dbeta = ops.batchnorm2d_backward(dout, self._cache)
        self.gamma.grad += dgamma
        self.beta.grad += dbeta
        return dx


class Relu(Module):
    def __init__(self):
        self._x = None

    def forward(self, x, train):
        self._x = x
        return ops.relu_forward(x)

    def backward(self, dout):
        return ops.relu_backward(dout, self._x)


class LeakyRelu(Module):
    def __init__(self, slope: float = ops.LRELU_SLOPE):
        self.slope = slope
        self._x = None

    def forward(self, x, train):
        self._x = x
        return ops.lrelu_forward(x, self.slope)

    def backward(self, dout):
        return ops.lrelu_backward(dout, self._x, self.slope)


class Sequential(Module):
    def __init__(self, named_layers: list[tuple[str, Module]]):
        self._layers = named_layers

    def children(self):
        return list(self._layers)

    def forward(self, x, train):
        for _, layer in self._layers:
            x = layer.forward(x, train)
        return x

    def backward(self, dout):
        for _, layer in reversed(self._layers):
            dout = layer.backward(dout)
        return dout


def kink_signature(module: Module) -> bytes:
    """Sign pattern of every cached relu/lrelu input in the tree.

    Finite differences are only meaningful where the function is smooth; two
    evaluations with different signatures straddle an activation kink.
    """
    parts = []
    stack = [module]
    while stack:
        m = stack.pop()
        if isinstance(m, (Relu, LeakyRelu)) and m._x is not None:
            parts.append(np.packbits(m._x >= 0).tobytes())
        stack.extend(child for _, child in m.children())
    return b"".join(parts)


class Residual(Module):
    """body(x) + x with no activation after the sum."""

    def __init__(self, body: Sequential):
        self.body = body

    def children(self):
        return [("body", self.body)]

    def forward(self, x, train):
        return self.body.forward(x, train) + x

    def backward(self, dout):
        return self.body.backward(dout) + dout
