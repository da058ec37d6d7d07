"""Dense NCHW tensor ops with hand-derived backward passes.

Convolution is cross-correlation (no kernel flip), evaluated as im2col plus
one BLAS matmul.  Every forward here has a matching backward that returns
exact analytic gradients; ``toonlab.nncore.gradcheck`` verifies them against
central finite differences.

All ops preserve the dtype of their inputs, so the same code runs in float32
(the production mode) and float64 (used by the gradient checks at tight
tolerance).
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Tensor shapes incompatible with the requested operation."""


class NumericError(ArithmeticError):
    """Non-finite values where finite ones are required."""


def require_4d(x: np.ndarray, what: str = "tensor") -> None:
    if x.ndim != 4:
        raise ShapeError(f"{what} must be 4-D (N,C,H,W), got shape {x.shape}")


def conv_out_size(size: int, k: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - k) // stride + 1


def conv_transpose_out_size(size: int, k: int, stride: int, pad: int, output_pad: int) -> int:
    return (size - 1) * stride - 2 * pad + k + output_pad


def _im2col(xp: np.ndarray, k: int, stride: int, out_h: int, out_w: int) -> np.ndarray:
    """Window view of a padded NCHW array, shape (N, C, out_h, out_w, k, k)."""
    n, c = xp.shape[:2]
    sn, sc, sh, sw = xp.strides
    return np.lib.stride_tricks.as_strided(
        xp,
        shape=(n, c, out_h, out_w, k, k),
        strides=(sn, sc, stride * sh, stride * sw, sh, sw),
        writeable=False,
    )


def _pad_hw(x: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int, pad: int) -> np.ndarray:
    """Cross-correlate x (N,C,H,W) with w (F,C,k,k); returns (N,F,H',W')."""
    require_4d(x, "conv input")
    require_4d(w, "conv weight")
    n, c, h, wid = x.shape
    f, c_w, k, k2 = w.shape
    if k != k2:
        raise ShapeError(f"kernel must be square, got {k}x{k2}")
    if c != c_w:
        raise ShapeError(f"conv expects {c_w} input channels, got {c}")
    if b.shape != (f,):
        raise ShapeError(f"bias must have shape ({f},), got {b.shape}")
    out_h = conv_out_size(h, k, stride, pad)
    out_w = conv_out_size(wid, k, stride, pad)
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"conv output would be {out_h}x{out_w} for input {h}x{wid}")

    xp = _pad_hw(x, pad)
    cols = _im2col(xp, k, stride, out_h, out_w)
    # (N,out_h,out_w, C*k*k) @ (C*k*k, F) in one sgemm.
    mat = cols.transpose(0, 2, 3, 1, 4, 5).reshape(n * out_h * out_w, c * k * k)
    y = mat @ w.reshape(f, c * k * k).T
    y += b
    return y.reshape(n, out_h, out_w, f).transpose(0, 3, 1, 2).copy()


def conv2d_backward(
    x: np.ndarray, w: np.ndarray, dout: np.ndarray, stride: int, pad: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (dx, dw, db) of conv2d_forward wrt x, w, b."""
    n, c, h, wid = x.shape
    f, _, k, _ = w.shape
    out_h, out_w = dout.shape[2], dout.shape[3]

    db = dout.sum(axis=(0, 2, 3))

    xp = _pad_hw(x, pad)
    cols = _im2col(xp, k, stride, out_h, out_w)
    mat = cols.transpose(0, 2, 3, 1, 4, 5).reshape(n * out_h * out_w, c * k * k)
    dout_mat = dout.transpose(0, 2, 3, 1).reshape(n * out_h * out_w, f)
    dw = (dout_mat.T @ mat).reshape(f, c, k, k)

    # dx is the transposed convolution of dout with the same weights; the
    # output_padding recovers the exact input size lost to flooring.
    opad_h = h - conv_transpose_out_size(out_h, k, stride, pad, 0)
    opad_w = wid - conv_transpose_out_size(out_w, k, stride, pad, 0)
    dx = _conv_transpose_core(dout, w, stride, pad, opad_h, opad_w)
    return dx, dw, db


def _dilate_and_pad(x: np.ndarray, stride: int, pad_before: int, pad_h_after: int, pad_w_after: int) -> np.ndarray:
    """Insert stride-1 zeros between pixels, then zero-pad the borders."""
    n, c, h, w = x.shape
    if stride > 1:
        z = np.zeros((n, c, (h - 1) * stride + 1, (w - 1) * stride + 1), dtype=x.dtype)
        z[:, :, ::stride, ::stride] = x
    else:
        z = x
    return np.pad(
        z,
        ((0, 0), (0, 0), (pad_before, pad_before + pad_h_after), (pad_before, pad_before + pad_w_after)),
    )


def _conv_transpose_core(
    x: np.ndarray, w: np.ndarray, stride: int, pad: int, opad_h: int, opad_w: int
) -> np.ndarray:
    """Transposed convolution with w in conv layout (F, C, k, k).

    Maps (N,F,H,W) -> (N,C,H_out,W_out): the adjoint of conv2d_forward with
    the same weights.  Realized as a stride-1 cross-correlation of the
    zero-dilated input with the spatially flipped, channel-swapped kernel.
    """
    f, c, k, _ = w.shape
    if pad > k - 1:
        raise ShapeError(f"padding {pad} exceeds kernel-1 ({k - 1})")
    z = _dilate_and_pad(x, stride, k - 1 - pad, opad_h, opad_w)
    w_flip = w[:, :, ::-1, ::-1].transpose(1, 0, 2, 3).copy()  # (C, F, k, k)
    zero_b = np.zeros(c, dtype=x.dtype)
    return conv2d_forward(z, w_flip, zero_b, stride=1, pad=0)


def conv_transpose2d_forward(
    x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int, pad: int, output_pad: int
) -> np.ndarray:
    """Transposed conv of x (N,C_in,H,W) with w (C_in,C_out,k,k).

    Interpreting w as the weight of a conv2d, this op is exactly that conv's
    matrix transpose.  H_out = (H-1)*stride - 2*pad + k + output_pad.
    """
    require_4d(x, "conv_transpose input")
    require_4d(w, "conv_transpose weight")
    c_in, c_out, k, k2 = w.shape
    if k != k2:
        raise ShapeError(f"kernel must be square, got {k}x{k2}")
    if x.shape[1] != c_in:
        raise ShapeError(f"conv_transpose expects {c_in} input channels, got {x.shape[1]}")
    if b.shape != (c_out,):
        raise ShapeError(f"bias must have shape ({c_out},), got {b.shape}")
    if output_pad >= stride and output_pad > 0:
        raise ShapeError(f"output_padding {output_pad} must be < stride {stride}")
    y = _conv_transpose_core(x, w, stride, pad, output_pad, output_pad)
    y += b[None, :, None, None]
    return y


def conv_transpose2d_backward(
    x: np.ndarray, w: np.ndarray, dout: np.ndarray, stride: int, pad: int, output_pad: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (dx, dw, db) of conv_transpose2d_forward."""
    c_in, c_out, k, _ = w.shape
    db = dout.sum(axis=(0, 2, 3))

    # Adjoint of the adjoint: dx is a plain strided cross-correlation of dout.
    dx = conv2d_forward(dout, w, np.zeros(c_in, dtype=x.dtype), stride=stride, pad=pad)
    if dx.shape != x.shape:  # output_pad rows/cols never touched x
        dx = dx[:, :, : x.shape[2], : x.shape[3]]

    # dw through the dilated stride-1 view used by the forward pass.
    z = _dilate_and_pad(x, stride, k - 1 - pad, output_pad, output_pad)
    n = z.shape[0]
    out_h, out_w = dout.shape[2], dout.shape[3]
    cols = _im2col(z, k, 1, out_h, out_w)
    mat = cols.transpose(0, 2, 3, 1, 4, 5).reshape(n * out_h * out_w, c_in * k * k)
    dout_mat = dout.transpose(0, 2, 3, 1).reshape(n * out_h * out_w, c_out)
    dw_flip = (dout_mat.T @ mat).reshape(c_out, c_in, k, k)
    dw = dw_flip[:, :, ::-1, ::-1].transpose(1, 0, 2, 3).copy()
    return dx, dw, db


BN_EPS = 1e-5


def batchnorm2d_forward(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    train: bool,
    momentum: float = 0.1,
):
    """Per-channel batch normalization.

    Train mode normalizes by batch statistics (biased variance, eps 1e-5) and
    updates the running stats in place with the given momentum.  Eval mode is
    a fixed affine map through the running stats.  Returns (y, cache).
    """
    require_4d(x, "batchnorm input")
    c = x.shape[1]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ShapeError(f"gamma/beta must have shape ({c},)")
    if train:
        m = x.shape[0] * x.shape[2] * x.shape[3]
        if m == 1:
            raise ShapeError("batchnorm train mode needs more than one value per channel")
        mean = x.mean(axis=(0, 2, 3))
        var = x.var(axis=(0, 2, 3))
        running_mean *= 1.0 - momentum
        running_mean += momentum * mean
        running_var *= 1.0 - momentum
        running_var += momentum * var
    else:
        mean = running_mean.astype(x.dtype)
        var = running_var.astype(x.dtype)
    inv_std = 1.0 / np.sqrt(var + BN_EPS)
    xhat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
    y = gamma[None, :, None, None] * xhat + beta[None, :, None, None]
    cache = (xhat, inv_std.astype(x.dtype), gamma, train)
    return y.astype(x.dtype, copy=False), cache


def batchnorm2d_backward(dout: np.ndarray, cache) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (dx, dgamma, dbeta) for batchnorm2d_forward."""
    xhat, inv_std, gamma, train = cache
    dgamma = (dout * xhat).sum(axis=(0, 2, 3))
    dbeta = dout.sum(axis=(0, 2, 3))
    g = gamma[None, :, None, None] * inv_std[None, :, None, None]
    if not train:
        return dout * g, dgamma, dbeta
    m = dout.shape[0] * dout.shape[2] * dout.shape[3]
    sum_d = dout.sum(axis=(0, 2, 3)).reshape(1, -1, 1, 1)
    sum_dx = (dout * xhat).sum(axis=(0, 2, 3)).reshape(1, -1, 1, 1)
    dx = g * (dout - sum_d / m - xhat * sum_dx / m)
    return dx, dgamma, dbeta


LRELU_SLOPE = 0.2


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(dout: np.ndarray, x: np.ndarray) -> np.ndarray:
    # Subgradient at 0 is fixed to 1 so the finite-difference checks are
    # deterministic.
    return np.where(x >= 0, dout, np.zeros((), dtype=dout.dtype))


def lrelu_forward(x: np.ndarray, slope: float = LRELU_SLOPE) -> np.ndarray:
    return np.where(x >= 0, x, x * np.asarray(slope, dtype=x.dtype))


def lrelu_backward(dout: np.ndarray, x: np.ndarray, slope: float = LRELU_SLOPE) -> np.ndarray:
    return np.where(x >= 0, dout, dout * np.asarray(slope, dtype=dout.dtype))


def activation(x: np.ndarray, kind: str) -> np.ndarray:
    """Elementwise activation; kind is 'relu' or 'lrelu' (slope 0.2)."""
    if kind == "relu":
        return relu_forward(x)
    if kind == "lrelu":
        return lrelu_forward(x)
    raise ValueError(f"unknown activation kind {kind!r}")
