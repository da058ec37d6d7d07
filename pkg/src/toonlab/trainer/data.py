"""Deterministic image streams for training.

Every batch is a pure function of (seed, stream id, epoch, step), so an
interrupted run re-derives exactly the order an uninterrupted run would have
used.  Shuffling and flip augmentation draw from a per-epoch generator seeded
by that tuple; nothing ambient.
"""

from __future__ import annotations

import logging
import os

import numpy as np

from ..imageprep import read_image, resize_bilinear
from ..imageprep.image import DecodeError
from .config import ConfigError

log = logging.getLogger(__name__)

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


def steps_per_epoch(n_items: int, batch_size: int) -> int:
    """Full batches per epoch (drop-last); tiny datasets recycle into one."""
    return max(1, n_items // batch_size)


class ImageFolder:
    """All decodable images of a directory, resized and held as uint8."""

    def __init__(self, directory, size: int, seed: int, stream_id: int = 0):
        names = sorted(
            f for f in os.listdir(directory)
            if f.lower().endswith(IMAGE_EXTENSIONS)
        )
        images = []
        skipped = 0
        for name in names:
            try:
                img = read_image(os.path.join(directory, name))
            except DecodeError as e:
                skipped += 1
                log.warning("skipping undecodable image %s: %s", name, e)
                continue
            if img.width != size or img.height != size:
                img = resize_bilinear(img, size, size)
            images.append(img.pixels)
        if skipped:
            log.warning("%s: skipped %d undecodable file(s)", directory, skipped)
        if not images:
            raise ConfigError(f"{directory}: no decodable images found")
        self.images = images
        self.size = size
        self.seed = seed
        self.stream_id = stream_id
        self.skipped_count = skipped

    def __len__(self) -> int:
        return len(self.images)

    def epoch_plan(self, epoch: int, batch_size: int):
        """(item order, flip bits) for one epoch; tiled up when n < batch."""
        rng = np.random.default_rng([self.seed, self.stream_id, epoch])
        order = rng.permutation(len(self.images))
        if len(order) < batch_size:
            reps = -(-batch_size // len(order))  # ceil
            order = np.tile(order, reps)[:batch_size]
        flips = rng.random(len(order)) < 0.5
        return order, flips

    def batch(self, epoch: int, index: int, batch_size: int, augment: bool = True) -> np.ndarray:
        """Batch `index` of the given epoch as a (B, 3, S, S) float32 tensor."""
        order, flips = self.epoch_plan(epoch, batch_size)
        lo = index * batch_size
        hi = lo + batch_size
        if hi > len(order):
            raise IndexError(f"batch {index} out of range for epoch of {len(order)} items")
        out = np.empty((batch_size, 3, self.size, self.size), dtype=np.float32)
        for row, (item, flip) in enumerate(zip(order[lo:hi], flips[lo:hi])):
            px = self.images[item]
            if augment and flip:
                px = px[:, ::-1, :]
            out[row] = (px.astype(np.float32) / 127.5 - 1.0).transpose(2, 0, 1)
        return out

    def iter_epoch(self, epoch: int, batch_size: int, augment: bool = True):
        for i in range(steps_per_epoch(len(self.images), batch_size)):
            yield self.batch(epoch, i, batch_size, augment)


def load_dataset(directory, size: int, seed: int, stream_id: int = 0) -> ImageFolder:
    """Open a directory of images as a seeded, shuffled batch source."""
    return ImageFolder(directory, size, seed, stream_id)
