"""Image IO, resize, tensor conversion, edge smoothing, perceptual hash."""

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from toonlab.imageprep import (
    DecodeError,
    EdgeSmoothParams,
    decode_image,
    dilate,
    edge_mask,
    edge_smooth,
    encode_png,
    find_duplicates,
    from_array,
    hash_distance,
    image_to_tensor,
    perceptual_hash,
    resize_bilinear,
    tensor_to_image,
)
from toonlab.nncore.ops import ShapeError


def _png_bytes(px: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(px, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


class TestDecode:
    def test_1x1_white_png(self):
        img = decode_image(_png_bytes(np.full((1, 1, 3), 255, dtype=np.uint8)))
        assert (img.width, img.height) == (1, 1)
        assert img.pixels.tolist() == [[[255, 255, 255]]]

    def test_256x256_jpeg(self, rng):
        px = rng.integers(0, 256, (256, 256, 3), dtype=np.uint8)
        buf = io.BytesIO()
        Image.fromarray(px, mode="RGB").save(buf, format="JPEG")
        img = decode_image(buf.getvalue())
        assert (img.width, img.height) == (256, 256)

    def test_truncated_stream_raises(self):
        data = _png_bytes(np.zeros((8, 8, 3), dtype=np.uint8))
        with pytest.raises(DecodeError):
            decode_image(data[: len(data) // 2])

    def test_garbage_raises(self):
        with pytest.raises(DecodeError):
            decode_image(b"not an image at all")

    def test_alpha_dropped(self):
        rgba = np.zeros((2, 2, 4), dtype=np.uint8)
        rgba[..., 3] = 128
        buf = io.BytesIO()
        Image.fromarray(rgba, mode="RGBA").save(buf, format="PNG")
        img = decode_image(buf.getvalue())
        assert img.pixels.shape == (2, 2, 3)

    def test_png_round_trip(self, rng):
        img = from_array(rng.integers(0, 256, (5, 7, 3), dtype=np.uint8))
        again = decode_image(encode_png(img))
        assert np.array_equal(img.pixels, again.pixels)


class TestResize:
    def test_output_dims(self, rng):
        img = from_array(rng.integers(0, 256, (256, 256, 3), dtype=np.uint8))
        out = resize_bilinear(img, 224, 224)
        assert (out.width, out.height) == (224, 224)

    def test_identity_dims_identical_pixels(self, rng):
        img = from_array(rng.integers(0, 256, (9, 13, 3), dtype=np.uint8))
        out = resize_bilinear(img, 13, 9)
        assert np.array_equal(out.pixels, img.pixels)

    def test_2x1_ramp_hand_evaluated(self):
        # source positions for width 4: (i+0.5)*0.5-0.5 = -.25,.25,.75,1.25
        # clamped -> 0, .25, .75, 1 -> values 0, 63.75, 191.25, 255
        img = from_array(np.array([[[0, 0, 0], [255, 255, 255]]], dtype=np.uint8))
        out = resize_bilinear(img, 4, 1)
        gray = out.pixels[0, :, 0].tolist()
        assert gray == [0, 64, 191, 255]
        assert gray == sorted(gray)

    def test_no_overshoot(self, rng):
        img = from_array(rng.integers(40, 200, (11, 7, 3), dtype=np.uint8))
        out = resize_bilinear(img, 23, 17)
        assert out.pixels.min() >= img.pixels.min()
        assert out.pixels.max() <= img.pixels.max()


class TestTensorConversion:
    def test_endpoints(self):
        img = from_array(np.array([[[255, 0, 255]]], dtype=np.uint8))
        t = image_to_tensor(img)
        assert t.shape == (1, 3, 1, 1)
        assert t[0, 0, 0, 0] == pytest.approx(1.0)
        assert t[0, 1, 0, 0] == pytest.approx(-1.0)

    def test_round_trip_exhaustive(self):
        values = np.arange(256, dtype=np.uint8)
        img = from_array(np.stack([values] * 3, axis=-1)[None, :, :])
        back = tensor_to_image(image_to_tensor(img))
        assert np.array_equal(back.pixels, img.pixels)

    def test_zero_tensor_maps_to_128(self):
        out = tensor_to_image(np.zeros((1, 3, 2, 2), dtype=np.float32))
        assert (out.pixels == 128).all()

    def test_clamp_endpoints(self):
        t = np.zeros((1, 3, 1, 1), dtype=np.float32)
        t[0, 0] = 2.0
        t[0, 1] = -1.0
        out = tensor_to_image(t)
        assert out.pixels[0, 0, 0] == 255
        assert out.pixels[0, 0, 1] == 0

    def test_wrong_rank_rejected(self):
        with pytest.raises(ShapeError):
            tensor_to_image(np.zeros((1, 4, 2, 2), dtype=np.float32))


def _step_edge(width=16, height=16, split=8):
    px = np.zeros((height, width, 3), dtype=np.uint8)
    px[:, split:] = 255
    return from_array(px)


class TestEdgeMask:
    def test_uniform_image_empty_mask(self):
        img = from_array(np.full((12, 12, 3), 90, dtype=np.uint8))
        assert not edge_mask(img, EdgeSmoothParams()).bits.any()

    def test_step_edge_band(self):
        img = _step_edge()
        bits = edge_mask(img, EdgeSmoothParams()).bits
        # the band contains the boundary columns and is >= 3 px wide (dilation)
        interior = bits[4:12]
        assert interior[:, 7].all() or interior[:, 8].all()
        band_width = (bits.any(axis=0)).sum()
        assert band_width >= 3

    def test_dim_isolated_pixel_below_threshold(self):
        # independent oracle: L1 sobel response of the blurred spot must sit
        # below canny_high, so hysteresis can never seed an edge
        from toonlab.imageprep import gaussian_blur2d, luma

        px = np.zeros((9, 9, 3), dtype=np.uint8)
        px[4, 4] = 40
        img = from_array(px)
        p = EdgeSmoothParams()
        blurred = gaussian_blur2d(luma(img), p.blur_kernel, p.sigma)
        sx = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=float)
        sy = sx.T
        worst = 0.0
        for y in range(1, 8):
            for x in range(1, 8):
                win = blurred[y - 1 : y + 2, x - 1 : x + 2]
                worst = max(worst, abs((win * sx).sum()) + abs((win * sy).sum()))
        assert worst < p.canny_high
        assert not edge_mask(img, p).bits.any()

    def test_dilate_square(self):
        bits = np.zeros((5, 5), dtype=bool)
        bits[2, 2] = True
        grown = dilate(bits, 1)
        assert grown.sum() == 9
        assert grown[1:4, 1:4].all()


class TestEdgeSmooth:
    def test_uniform_image_byte_identical(self):
        img = from_array(np.full((10, 10, 3), 200, dtype=np.uint8))
        out = edge_smooth(img, EdgeSmoothParams())
        assert np.array_equal(out.pixels, img.pixels)

    def test_outside_mask_untouched(self):
        img = _step_edge()
        p = EdgeSmoothParams()
        mask = edge_mask(img, p).bits
        out = edge_smooth(img, p)
        assert np.array_equal(out.pixels[~mask], img.pixels[~mask])

    def test_boundary_pixel_is_gaussian_average(self):
        # hand-evaluate the separable 3x3 gaussian at a masked boundary pixel
        from toonlab.imageprep import gaussian_blur2d

        img = _step_edge()
        p = EdgeSmoothParams()
        mask = edge_mask(img, p).bits
        out = edge_smooth(img, p)
        ys, xs = np.nonzero(mask)
        y, x = ys[len(ys) // 2], xs[len(xs) // 2]
        expected = gaussian_blur2d(img.pixels[:, :, 0].astype(np.float64),
                                   p.blur_kernel, p.sigma)
        assert out.pixels[y, x, 0] == int(np.floor(expected[y, x] + 0.5))

    def test_deterministic_across_runs(self):
        img = _step_edge()
        p = EdgeSmoothParams()
        a = edge_smooth(img, p)
        b = edge_smooth(img, p)
        assert np.array_equal(a.pixels, b.pixels)

    def test_random_images_masked_copy_contract(self, rng):
        p = EdgeSmoothParams()
        for _ in range(10):
            img = from_array(rng.integers(0, 256, (14, 14, 3), dtype=np.uint8))
            mask = edge_mask(img, p).bits
            out = edge_smooth(img, p)
            assert np.array_equal(out.pixels[~mask], img.pixels[~mask])


class TestPerceptualHash:
    def test_self_distance_zero(self, rng):
        img = from_array(rng.integers(0, 256, (32, 32, 3), dtype=np.uint8))
        assert hash_distance(perceptual_hash(img), perceptual_hash(img)) == 0

    def test_brightness_shift_invariant(self, rng):
        px = rng.integers(0, 255, (32, 32, 3), dtype=np.uint8)  # +1 cannot clip
        h1 = perceptual_hash(from_array(px))
        h2 = perceptual_hash(from_array(px + 1))
        assert hash_distance(h1, h2) == 0

    def test_black_white_collision_class(self):
        black = from_array(np.zeros((16, 16, 3), dtype=np.uint8))
        white = from_array(np.full((16, 16, 3), 255, dtype=np.uint8))
        assert perceptual_hash(black) == 0
        assert perceptual_hash(white) == 0
        assert hash_distance(perceptual_hash(black), perceptual_hash(white)) == 0

    @given(st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1))
    def test_distance_symmetric(self, a, b):
        assert hash_distance(a, b) == hash_distance(b, a)
        assert hash_distance(a, a) == 0

    def test_find_duplicates_pairs(self, rng):
        px = rng.integers(0, 255, (32, 32, 3), dtype=np.uint8)
        items = [
            ("a", perceptual_hash(from_array(px))),
            ("b", perceptual_hash(from_array(px + 1))),
            ("c", perceptual_hash(from_array(rng.integers(0, 256, (32, 32, 3), dtype=np.uint8)))),
        ]
        pairs = find_duplicates(items, threshold=8)
        assert ("a", "b", 0) in pairs

    @settings(max_examples=25)
    @given(st.integers(0, 2**32))
    def test_hash_is_64_bit(self, seed):
        r = np.random.default_rng(seed)
        img = from_array(r.integers(0, 256, (9, 9, 3), dtype=np.uint8))
        assert 0 <= perceptual_hash(img) < 2**64


class TestParams:
    def test_threshold_order_enforced(self):
        with pytest.raises(ValueError):
            EdgeSmoothParams(canny_low=500, canny_high=100)

    def test_kernel_must_be_odd(self):
        with pytest.raises(ValueError):
            EdgeSmoothParams(blur_kernel=4)

    def test_default_sigma_derivation(self):
        assert EdgeSmoothParams().sigma == pytest.approx(0.8)
        assert EdgeSmoothParams(blur_kernel=5).sigma == pytest.approx(1.3)
        assert EdgeSmoothParams(blur_sigma=2.0).sigma == 2.0
