"""Training objectives: adversarial (three-population), content, combined.

The discriminator sees three batches per step: real cartoons (target 1),
edge-smoothed cartoons (target 0, punishing the absence of crisp edges), and
generator outputs (target 0).  The generator optimizes the non-saturating
fool-the-discriminator objective plus an omega-weighted content term.

All reductions are means, so loss magnitudes are batch-size invariant and the
omega weighting composes predictably.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nncore.layers import Conv2d, LeakyRelu, Module, Sequential
from ..nncore.ops import NumericError, ShapeError


@dataclass
class LossWeights:
    """omega balances content loss against adversarial loss."""

    omega: float = 10.0

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError("omega must be >= 0")


def _softplus(z: np.ndarray) -> np.ndarray:
    # max(z,0) + log1p(exp(-|z|)): exact and overflow-free for any z
    return np.maximum(z, 0) + np.log1p(np.exp(-np.abs(z)))


def bce_logits(logits: np.ndarray, target: int) -> float:
    """Mean softplus-stabilized binary cross-entropy against a constant target."""
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite logits in bce_logits")
    if target == 1:
        return float(np.mean(_softplus(-logits), dtype=np.float64))
    if target == 0:
        return float(np.mean(_softplus(logits), dtype=np.float64))
    raise ValueError(f"target must be 0 or 1, got {target}")


def bce_logits_grad(logits: np.ndarray, target: int) -> np.ndarray:
    """d mean-BCE / d logits; pairs with bce_logits."""
    sig = 1.0 / (1.0 + np.exp(-logits.astype(np.float64)))
    g = (sig - target) / logits.size
    return g.astype(logits.dtype)


def _check_same_shape(*tensors: np.ndarray) -> None:
    first = tensors[0].shape
    for t in tensors[1:]:
        if t.shape != first:
            raise ShapeError(f"logit maps disagree in shape: {first} vs {t.shape}")


def adversarial_loss_d(
    d_c: np.ndarray,
    d_e: np.ndarray,
    d_gp: np.ndarray,
    term_weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> float:
    """Discriminator objective over cartoons, smoothed cartoons, and fakes.

    Equal term weights by default; the edge-smoothed term can be ablated by
    zeroing its weight.
    """
    _check_same_shape(d_c, d_e, d_gp)
    wc, we, wg = term_weights
    return (wc * bce_logits(d_c, 1) + we * bce_logits(d_e, 0)
            + wg * bce_logits(d_gp, 0))


def adversarial_loss_g(d_gp: np.ndarray) -> float:
    """Non-saturating generator objective: make fakes classify as real."""
    return bce_logits(d_gp, 1)


class FeatureExtractor:
    """Frozen conv stack standing in for a pretrained content network.

    Four conv+LReLU stages (strides 1,2,2,2; channels 32,64,128,256).  The
    default weights are seeded random projections; real weights can be loaded
    from a checkpoint archive.  Weights never receive gradient updates;
    backward only propagates input gradients.
    """

    CHANNELS = (32, 64, 128, 256)
    STRIDES = (1, 2, 2, 2)

    def __init__(self, seed: int = 0, dtype=np.float32):
        rng = np.random.default_rng(seed)
        stages: list[tuple[str, Module]] = []
        c = 3
        for i, (n, s) in enumerate(zip(self.CHANNELS, self.STRIDES), start=1):
            stages.append((f"conv{i}", Conv2d(c, n, 3, s, 1, rng, dtype)))
            stages.append((f"act{i}", LeakyRelu()))
            c = n
        self.stack = Sequential(stages)
        self.stack.attach_names("features.")

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.stack.forward(x, train=False)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        # param grads accumulate but are never stepped; clear them so the
        # extractor stays visibly inert
        dx = self.stack.backward(dout)
        self.stack.zero_grad()
        return dx

    def state_tensors(self) -> dict[str, np.ndarray]:
        return {name: p.value for name, p in self.stack.named_parameters("features.")}

    def load_state_tensors(self, tensors: dict[str, np.ndarray]) -> None:
        for name, p in self.stack.named_parameters("features."):
            if name not in tensors:
                raise KeyError(f"feature extractor tensor {name!r} missing")
            p.value[...] = tensors[name]


def content_loss(f: FeatureExtractor, p: np.ndarray, gp: np.ndarray) -> float:
    """Mean absolute difference between feature maps of p and gp."""
    if p.shape != gp.shape:
        raise ShapeError(f"content_loss inputs disagree: {p.shape} vs {gp.shape}")
    fp = f.forward(p)
    fgp = f.forward(gp)
    return float(np.mean(np.abs(fp - fgp), dtype=np.float64))


def content_loss_with_grad(f: FeatureExtractor, p: np.ndarray, gp: np.ndarray):
    """Content loss and its gradient with respect to gp."""
    if p.shape != gp.shape:
        raise ShapeError(f"content_loss inputs disagree: {p.shape} vs {gp.shape}")
    fp = f.forward(p)
    fgp = f.forward(gp)  # cached last: backward below differentiates this pass
    diff = fgp - fp
    loss = float(np.mean(np.abs(diff), dtype=np.float64))
    dfeat = (np.sign(diff) / diff.size).astype(gp.dtype)
    dgp = f.backward(dfeat)
    return loss, dgp


def total_loss(adv: float, con: float, w: LossWeights) -> float:
    """Combined objective: adversarial plus omega-weighted content."""
    return adv + w.omega * con
