"""Image decode/encode, bilinear resize, and [-1,1] tensor conversion."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..nncore.ops import ShapeError


class DecodeError(ValueError):
    """Malformed PNG/JPEG stream."""


@dataclass
class RasterImage:
    """8-bit sRGB image; pixels is a row-major (H, W, 3) uint8 array."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dimensions must be >= 1, got {self.width}x{self.height}")
        if self.pixels.shape != (self.height, self.width, 3):
            raise ValueError(
                f"pixel buffer shape {self.pixels.shape} does not match "
                f"{self.height}x{self.width}x3")
        if self.pixels.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {self.pixels.dtype}")


def from_array(pixels: np.ndarray) -> RasterImage:
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    return RasterImage(width=pixels.shape[1], height=pixels.shape[0], pixels=pixels)


def decode_image(data: bytes) -> RasterImage:
    """Decode a PNG or JPEG byte stream; alpha, if present, is dropped."""
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as e:
        raise DecodeError(f"cannot decode image: {e}") from e
    if img.mode != "RGB":
        img = img.convert("RGB")
    return from_array(np.asarray(img))


def encode_png(img: RasterImage) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(img.pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def read_image(path) -> RasterImage:
    with open(path, "rb") as f:
        return decode_image(f.read())


def write_png(img: RasterImage, path) -> None:
    Image.fromarray(img.pixels, mode="RGB").save(path, format="PNG")


def round_half_away(x: np.ndarray) -> np.ndarray:
    """Round halves away from zero (platform-independent, unlike np.round)."""
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _sample_axis(in_size: int, out_size: int):
    """Half-pixel-centered source coordinates for one axis."""
    src = (np.arange(out_size) + 0.5) * (in_size / out_size) - 0.5
    src = np.clip(src, 0.0, in_size - 1.0)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, in_size - 1)
    frac = src - lo
    return lo, hi, frac


def resize_bilinear(img: RasterImage, out_w: int, out_h: int) -> RasterImage:
    """Bilinear resample with half-pixel-centered sampling; deterministic."""
    if out_w < 1 or out_h < 1:
        raise ValueError(f"target dimensions must be >= 1, got {out_w}x{out_h}")
    if out_w == img.width and out_h == img.height:
        return from_array(img.pixels.copy())
    y0, y1, fy = _sample_axis(img.height, out_h)
    x0, x1, fx = _sample_axis(img.width, out_w)
    px = img.pixels.astype(np.float64)
    top = px[y0][:, x0] * (1 - fx)[None, :, None] + px[y0][:, x1] * fx[None, :, None]
    bot = px[y1][:, x0] * (1 - fx)[None, :, None] + px[y1][:, x1] * fx[None, :, None]
    out = top * (1 - fy)[:, None, None] + bot * fy[:, None, None]
    return from_array(round_half_away(out).astype(np.uint8))


def image_to_tensor(img: RasterImage) -> np.ndarray:
    """Map 8-bit samples into [-1, 1] as a (1, 3, H, W) float32 tensor."""
    t = img.pixels.astype(np.float32) / 127.5 - 1.0
    return t.transpose(2, 0, 1)[None, :, :, :].copy()


def tensor_to_image(t: np.ndarray) -> RasterImage:
    """Clamp a (1, 3, H, W) tensor to [-1, 1] and map back to 8-bit sRGB."""
    if t.ndim != 4 or t.shape[0] != 1 or t.shape[1] != 3:
        raise ShapeError(f"expected shape (1, 3, H, W), got {t.shape}")
    v = np.clip(t[0].astype(np.float64), -1.0, 1.0)
    px = round_half_away((v + 1.0) * 127.5).astype(np.uint8)
    return from_array(px.transpose(1, 2, 0))
