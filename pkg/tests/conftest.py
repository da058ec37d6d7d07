"""Shared fixtures: synthetic photos/cartoons and on-disk toy datasets."""

from __future__ import annotations

import numpy as np
import pytest

from toonlab.imageprep import (
    EdgeSmoothParams,
    RasterImage,
    edge_smooth,
    from_array,
    resize_bilinear,
    write_png,
)


def synth_photo(rng: np.random.Generator, size: int = 16) -> RasterImage:
    """Smooth color-gradient image: low-res noise upscaled bilinearly."""
    low = rng.integers(0, 256, size=(4, 4, 3), dtype=np.uint8)
    return resize_bilinear(from_array(low), size, size)


def synth_cartoon(rng: np.random.Generator, size: int = 16) -> RasterImage:
    """Flat regions with strong luma contrast, so the edge pipeline fires."""
    dark = rng.integers(0, 50, 3).astype(np.uint8)
    px = np.tile(dark, (size, size, 1))
    for _ in range(3):
        y0, x0 = rng.integers(0, size - 5, 2)
        h, w = rng.integers(4, size // 2 + 2, 2)
        bright = np.array([rng.integers(200, 256), rng.integers(200, 256),
                           rng.integers(180, 256)], dtype=np.uint8)
        px[y0:y0 + h, x0:x0 + w] = bright
    return from_array(px.astype(np.uint8))


def make_dataset_dirs(root, rng: np.random.Generator, n: int = 8, size: int = 16):
    """Write photo/cartoon/smoothed directories under root; returns paths."""
    photo_dir = root / "photos"
    cartoon_dir = root / "cartoons"
    smoothed_dir = root / "smoothed"
    for d in (photo_dir, cartoon_dir, smoothed_dir):
        d.mkdir(parents=True, exist_ok=True)
    params = EdgeSmoothParams()
    for i in range(n):
        write_png(synth_photo(rng, size), photo_dir / f"p{i:02d}.png")
        cartoon = synth_cartoon(rng, size)
        write_png(cartoon, cartoon_dir / f"c{i:02d}.png")
        write_png(edge_smooth(cartoon, params), smoothed_dir / f"e{i:02d}.png")
    return photo_dir, cartoon_dir, smoothed_dir


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
