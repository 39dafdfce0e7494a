from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image as PILImage

from melonvision.image_core import (
    BinaryMask,
    Image,
    ImageLoadError,
    apply_mask,
    load_image,
    load_mask,
    resize_bilinear,
    save_image,
    save_mask,
    to_luma,
)
from conftest import make_image, make_mask


def luma_oracle(r: int, g: int, b: int) -> int:
    """Exact decimal BT.601 weighting, rounded half up."""
    value = Fraction(299, 1000) * r + Fraction(587, 1000) * g + Fraction(114, 1000) * b
    rounded = int(value + Fraction(1, 2))
    return min(max(rounded, 0), 255)


class TestLoadImage:
    def test_white_rgb_png(self, tmp_path):
        path = tmp_path / "white.png"
        PILImage.new("RGB", (2, 2), (255, 255, 255)).save(path)
        img = load_image(path)
        assert (img.width, img.height, img.channels) == (2, 2, 3)
        assert np.all(img.pixels == 255)

    def test_black_grayscale_png(self, tmp_path):
        path = tmp_path / "black.png"
        PILImage.new("L", (1, 1), 0).save(path)
        img = load_image(path)
        assert (img.width, img.height, img.channels) == (1, 1, 1)
        assert img.pixels[0, 0, 0] == 0

    def test_truncated_file_errors(self, tmp_path):
        path = tmp_path / "broken.png"
        good = tmp_path / "good.png"
        PILImage.new("RGB", (16, 16), (10, 20, 30)).save(good)
        path.write_bytes(good.read_bytes()[:40])
        with pytest.raises(ImageLoadError):
            load_image(path)

    def test_unsupported_format_errors(self, tmp_path):
        path = tmp_path / "image.bmp"
        PILImage.new("RGB", (4, 4), (1, 2, 3)).save(path, format="BMP")
        with pytest.raises(ImageLoadError, match="unsupported format"):
            load_image(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_image(tmp_path / "nope.png")

    def test_sixteen_bit_right_shift(self, tmp_path):
        path = tmp_path / "deep.png"
        arr = np.array([[0, 256, 65535, 40000]], dtype=np.uint16)
        PILImage.fromarray(arr).save(path)
        img = load_image(path)
        assert img.channels == 1
        assert img.pixels[0, :, 0].tolist() == [0, 1, 255, 40000 >> 8]

    def test_alpha_dropped(self, tmp_path):
        path = tmp_path / "rgba.png"
        PILImage.new("RGBA", (3, 3), (9, 8, 7, 128)).save(path)
        img = load_image(path)
        assert img.channels == 3
        assert img.pixels[0, 0].tolist() == [9, 8, 7]

    def test_jpeg_accepted(self, tmp_path):
        path = tmp_path / "photo.jpg"
        PILImage.new("RGB", (8, 8), (100, 150, 200)).save(path, quality=95)
        img = load_image(path)
        assert img.channels == 3


class TestRoundTrip:
    def test_png_round_trip_exact(self, rng, tmp_path):
        for channels in (1, 3):
            img = make_image(rng, 13, 7, channels)
            path = tmp_path / f"rt{channels}.png"
            save_image(img, path)
            again = load_image(path)
            assert np.array_equal(img.pixels, again.pixels)

    def test_mask_round_trip(self, rng, tmp_path):
        mask = make_mask(rng, 17, 9)
        path = tmp_path / "mask.png"
        save_mask(mask, path)
        assert np.array_equal(load_mask(path).bits, mask.bits)

    def test_mask_threshold_at_128(self, tmp_path):
        path = tmp_path / "gray.png"
        PILImage.fromarray(np.array([[127, 128]], dtype=np.uint8)).save(path)
        assert load_mask(path).bits.tolist() == [[False, True]]


class TestToLuma:
    def test_white_stays_white(self):
        img = Image(np.full((1, 1, 3), 255, dtype=np.uint8))
        assert to_luma(img).pixels[0, 0, 0] == 255

    def test_pure_red(self):
        img = Image(np.array([[[255, 0, 0]]], dtype=np.uint8))
        assert to_luma(img).pixels[0, 0, 0] == 76
        assert luma_oracle(255, 0, 0) == 76

    def test_grayscale_passthrough_identical(self, rng):
        img = make_image(rng, 6, 5, 1)
        assert np.array_equal(to_luma(img).pixels, img.pixels)

    def test_matches_exact_decimal_oracle(self, rng):
        img = make_image(rng, 40, 25, 3)
        out = to_luma(img).pixels[:, :, 0]
        for y in range(img.height):
            for x in range(img.width):
                r, g, b = (int(v) for v in img.pixels[y, x])
                assert out[y, x] == luma_oracle(r, g, b)

    @given(st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_idempotent(self, seed):
        img = make_image(np.random.default_rng(seed), 8, 8, 3)
        once = to_luma(img)
        assert np.array_equal(to_luma(once).pixels, once.pixels)


class TestApplyMask:
    def test_all_true_is_identity(self, rng):
        img = make_image(rng, 9, 4)
        mask = BinaryMask(np.ones((4, 9), dtype=bool))
        assert np.array_equal(apply_mask(img, mask).pixels, img.pixels)

    def test_all_false_zeroes(self, rng):
        img = make_image(rng, 9, 4)
        mask = BinaryMask(np.zeros((4, 9), dtype=bool))
        assert np.all(apply_mask(img, mask).pixels == 0)

    def test_checkerboard_on_constant(self):
        img = Image(np.full((4, 4, 3), 128, dtype=np.uint8))
        board = np.indices((4, 4)).sum(axis=0) % 2 == 0
        out = apply_mask(img, BinaryMask(board))
        for y in range(4):
            for x in range(4):
                expected = 128 if board[y, x] else 0
                assert np.all(out.pixels[y, x] == expected)

    def test_dimension_mismatch(self, rng):
        img = make_image(rng, 4, 4)
        with pytest.raises(ValueError, match="does not match"):
            apply_mask(img, BinaryMask(np.ones((5, 4), dtype=bool)))


class TestValidation:
    def test_rejects_non_uint8(self):
        with pytest.raises(ValueError, match="uint8"):
            Image(np.zeros((2, 2, 3), dtype=np.float64))

    def test_rejects_two_channels(self):
        with pytest.raises(ValueError, match="shape"):
            Image(np.zeros((2, 2, 2), dtype=np.uint8))

    def test_rejects_zero_dimension(self):
        with pytest.raises(ValueError):
            Image(np.zeros((0, 2, 3), dtype=np.uint8))

    def test_pixels_read_only(self, rng):
        img = make_image(rng, 3, 3)
        with pytest.raises(ValueError):
            img.pixels[0, 0, 0] = 1

    def test_mask_requires_bool(self):
        with pytest.raises(ValueError, match="bool"):
            BinaryMask(np.zeros((2, 2), dtype=np.uint8))


def test_resize_bilinear_dimensions(rng):
    img = make_image(rng, 10, 6)
    out = resize_bilinear(img, 5, 3)
    assert (out.width, out.height, out.channels) == (5, 3, 3)
