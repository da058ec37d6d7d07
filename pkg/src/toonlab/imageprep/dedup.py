"""Near-duplicate detection via 64-bit difference hashing (dHash).

Known collision class: any two images whose 9x8 downscale is constant along
rows (e.g. a black image vs a white image) hash to all-zero bits, because
every horizontal neighbor comparison ties.  Uniform brightness shifts without
clipping preserve the hash exactly.
"""

from __future__ import annotations

import numpy as np

from .image import RasterImage
from .edges import luma

DEFAULT_THRESHOLD = 8

_HASH_W = 9
_HASH_H = 8


def _downscale_gray(img: RasterImage, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear downscale of the luma plane, kept in float (no tie rounding)."""
    gray = luma(img)
    src_y = np.clip((np.arange(out_h) + 0.5) * (img.height / out_h) - 0.5, 0, img.height - 1)
    src_x = np.clip((np.arange(out_w) + 0.5) * (img.width / out_w) - 0.5, 0, img.width - 1)
    y0 = np.floor(src_y).astype(np.int64)
    x0 = np.floor(src_x).astype(np.int64)
    y1 = np.minimum(y0 + 1, img.height - 1)
    x1 = np.minimum(x0 + 1, img.width - 1)
    fy = (src_y - y0)[:, None]
    fx = (src_x - x0)[None, :]
    top = gray[y0][:, x0] * (1 - fx) + gray[y0][:, x1] * fx
    bot = gray[y1][:, x0] * (1 - fx) + gray[y1][:, x1] * fx
    return top * (1 - fy) + bot * fy


def perceptual_hash(img: RasterImage) -> int:
    """64-bit dHash: 9x8 grayscale, one bit per horizontal neighbor pair."""
    small = _downscale_gray(img, _HASH_W, _HASH_H)
    bits = small[:, :-1] > small[:, 1:]
    value = 0
    for bit in bits.reshape(-1):
        value = (value << 1) | int(bit)
    return value


def hash_distance(a: int, b: int) -> int:
    return (a ^ b).bit_count()


def find_duplicates(
    hashes: list[tuple[str, int]], threshold: int = DEFAULT_THRESHOLD
) -> list[tuple[str, str, int]]:
    """All pairs within the Hamming threshold; order-independent scan."""
    out = []
    for i in range(len(hashes)):
        name_a, ha = hashes[i]
        for j in range(i + 1, len(hashes)):
            name_b, hb = hashes[j]
            d = hash_distance(ha, hb)
            if d <= threshold:
                out.append((name_a, name_b, d))
    return out
