"""Image decoding, resizing, edge-aware smoothing, and perceptual dedup."""

from .dedup import DEFAULT_THRESHOLD, find_duplicates, hash_distance, perceptual_hash
from .edges import (
    EdgeMask,
    EdgeSmoothParams,
    dilate,
    edge_mask,
    edge_smooth,
    gaussian_blur2d,
    luma,
)
from .image import (
    DecodeError,
    RasterImage,
    decode_image,
    encode_png,
    from_array,
    image_to_tensor,
    read_image,
    resize_bilinear,
    round_half_away,
    tensor_to_image,
    write_png,
)

__all__ = [
    "DEFAULT_THRESHOLD",
    "DecodeError",
    "EdgeMask",
    "EdgeSmoothParams",
    "RasterImage",
    "decode_image",
    "dilate",
    "edge_mask",
    "edge_smooth",
    "encode_png",
    "find_duplicates",
    "from_array",
    "gaussian_blur2d",
    "hash_distance",
    "image_to_tensor",
    "luma",
    "perceptual_hash",
    "read_image",
    "resize_bilinear",
    "round_half_away",
    "tensor_to_image",
    "write_png",
]
