"""Edge-aware smoothing: canny mask, square dilation, masked Gaussian blur.

The whole pipeline is fixed-order float arithmetic with pinned rounding, so
outputs are byte-stable across runs and platforms.  Gradient magnitude is the
L1 norm |gx| + |gy| of 3x3 Sobel responses on ITU-R 601 luma, which puts the
default hysteresis thresholds (150, 500) on the familiar 8-bit scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import RasterImage, from_array, round_half_away

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
SOBEL_Y = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], dtype=np.float64)


@dataclass
class EdgeSmoothParams:
    """Knobs for the edge mask and the blur composited through it.

    blur_sigma == 0 means "derive from the kernel": (blur_kernel - 1) / 4 + 0.3.
    """

    canny_low: float = 150.0
    canny_high: float = 500.0
    dilation_radius: int = 1
    blur_kernel: int = 3
    blur_sigma: float = 0.0

    def __post_init__(self):
        if not (0 < self.canny_low <= self.canny_high):
            raise ValueError("need 0 < canny_low <= canny_high")
        if self.blur_kernel < 3 or self.blur_kernel % 2 == 0:
            raise ValueError("blur_kernel must be odd and >= 3")
        if self.dilation_radius < 0:
            raise ValueError("dilation_radius must be >= 0")

    @property
    def sigma(self) -> float:
        if self.blur_sigma > 0:
            return self.blur_sigma
        return (self.blur_kernel - 1) / 4.0 + 0.3


@dataclass
class EdgeMask:
    width: int
    height: int
    bits: np.ndarray  # (H, W) bool

    def __post_init__(self):
        if self.bits.shape != (self.height, self.width):
            raise ValueError(f"mask shape {self.bits.shape} != {self.height}x{self.width}")


def gaussian_kernel1d(size: int, sigma: float) -> np.ndarray:
    r = size // 2
    xs = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return k / k.sum()


def _pad2d(a: np.ndarray, ry: int, rx: int) -> np.ndarray:
    # reflect-without-edge needs >= r+1 samples per axis; tiny images fall
    # back to edge replication.
    mode = "reflect" if a.shape[0] > ry and a.shape[1] > rx else "edge"
    return np.pad(a, ((ry, ry), (rx, rx)), mode=mode)


def _convolve2d_small(a: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Direct correlation with a small kernel, reflect-padded borders."""
    ky, kx = k.shape
    ry, rx = ky // 2, kx // 2
    ap = _pad2d(a, ry, rx)
    out = np.zeros_like(a, dtype=np.float64)
    for dy in range(ky):
        for dx in range(kx):
            out += k[dy, dx] * ap[dy : dy + a.shape[0], dx : dx + a.shape[1]]
    return out


def gaussian_blur2d(a: np.ndarray, size: int, sigma: float) -> np.ndarray:
    k = gaussian_kernel1d(size, sigma)
    out = _convolve2d_small(a, k[None, :])
    return _convolve2d_small(out, k[:, None])


def luma(img: RasterImage) -> np.ndarray:
    px = img.pixels.astype(np.float64)
    wr, wg, wb = LUMA_WEIGHTS
    return wr * px[:, :, 0] + wg * px[:, :, 1] + wb * px[:, :, 2]


def _nonmax_suppress(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Zero out pixels not maximal along the (4-way quantized) gradient."""
    h, w = mag.shape
    padded = np.pad(mag, 1)  # out-of-image neighbors count as 0
    angle = np.degrees(np.arctan2(gy, gx))
    angle[angle < 0] += 180.0

    c = padded[1 : h + 1, 1 : w + 1]
    east = padded[1 : h + 1, 2 : w + 2]
    west = padded[1 : h + 1, 0:w]
    south = padded[2 : h + 2, 1 : w + 1]
    north = padded[0:h, 1 : w + 1]
    se = padded[2 : h + 2, 2 : w + 2]
    nw = padded[0:h, 0:w]
    sw = padded[2 : h + 2, 0:w]
    ne = padded[0:h, 2 : w + 2]

    horiz = (angle < 22.5) | (angle >= 157.5)
    diag1 = (angle >= 22.5) & (angle < 67.5)   # gradient toward lower-left/upper-right
    vert = (angle >= 67.5) & (angle < 112.5)
    diag2 = (angle >= 112.5) & (angle < 157.5)

    keep = np.zeros_like(mag, dtype=bool)
    keep |= horiz & (c >= east) & (c >= west)
    keep |= diag1 & (c >= se) & (c >= nw)
    keep |= vert & (c >= south) & (c >= north)
    keep |= diag2 & (c >= sw) & (c >= ne)
    return np.where(keep, mag, 0.0)


def _hysteresis(mag: np.ndarray, low: float, high: float) -> np.ndarray:
    strong = mag >= high
    weak = mag >= low
    edges = strong.copy()
    # grow strong seeds through weak pixels (8-connected) to a fixpoint
    while True:
        grown = dilate(edges, 1) & weak
        if np.array_equal(grown, edges):
            return edges
        edges = grown


def dilate(bits: np.ndarray, radius: int) -> np.ndarray:
    """Binary dilation with a (2*radius+1)^2 square structuring element."""
    if radius == 0:
        return bits.copy()
    h, w = bits.shape
    padded = np.pad(bits, radius)
    out = np.zeros_like(bits)
    for dy in range(2 * radius + 1):
        for dx in range(2 * radius + 1):
            out |= padded[dy : dy + h, dx : dx + w]
    return out


def edge_mask(img: RasterImage, p: EdgeSmoothParams) -> EdgeMask:
    """Canny edges (pre-smooth, Sobel, NMS, hysteresis) dilated square."""
    gray = luma(img)
    smoothed = gaussian_blur2d(gray, p.blur_kernel, p.sigma)
    gx = _convolve2d_small(smoothed, SOBEL_X)
    gy = _convolve2d_small(smoothed, SOBEL_Y)
    mag = np.abs(gx) + np.abs(gy)
    nms = _nonmax_suppress(mag, gx, gy)
    edges = _hysteresis(nms, p.canny_low, p.canny_high)
    bits = dilate(edges, p.dilation_radius)
    return EdgeMask(width=img.width, height=img.height, bits=bits)


def edge_smooth(img: RasterImage, p: EdgeSmoothParams) -> RasterImage:
    """Gaussian-blur the image inside its dilated edge mask, copy the rest."""
    mask = edge_mask(img, p).bits
    if not mask.any():
        return from_array(img.pixels.copy())
    px = img.pixels.astype(np.float64)
    blurred = np.stack(
        [gaussian_blur2d(px[:, :, c], p.blur_kernel, p.sigma) for c in range(3)], axis=-1)
    blurred_u8 = np.clip(round_half_away(blurred), 0, 255).astype(np.uint8)
    out = np.where(mask[:, :, None], blurred_u8, img.pixels)
    return from_array(out)
