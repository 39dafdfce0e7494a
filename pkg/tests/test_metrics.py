import math

import numpy as np
import pytest

from melonvision.image_core import Image, save_image
from melonvision.metrics import QualityScore, SsimParams, mse, psnr, score_pair, ssim
from conftest import make_image


def mse_oracle(a: Image, b: Image) -> float:
    """Brute-force double loop over pixels, integer accumulation."""
    total = 0
    for y in range(a.height):
        for x in range(a.width):
            for c in range(a.channels):
                d = int(a.pixels[y, x, c]) - int(b.pixels[y, x, c])
                total += d * d
    return total / (a.width * a.height * a.channels)


def ssim_oracle(a: Image, b: Image, params: SsimParams = SsimParams()) -> float:
    """Direct per-window statistics, independent of the sliding-sum path."""
    from melonvision.image_core import to_luma

    x = to_luma(a).pixels[:, :, 0].astype(np.float64)
    y = to_luma(b).pixels[:, :, 0].astype(np.float64)
    w = params.window
    n = w * w
    c1 = (params.k1 * params.dynamic_range) ** 2
    c2 = (params.k2 * params.dynamic_range) ** 2
    c3 = c2 / 2.0
    scores = []
    for i in range(a.height - w + 1):
        for j in range(a.width - w + 1):
            wx = x[i : i + w, j : j + w]
            wy = y[i : i + w, j : j + w]
            mx = wx.sum() / n
            my = wy.sum() / n
            vx = ((wx - mx) ** 2).sum() / n
            vy = ((wy - my) ** 2).sum() / n
            cxy = ((wx - mx) * (wy - my)).sum() / n
            sx, sy = math.sqrt(vx), math.sqrt(vy)
            lum = (2 * mx * my + c1) / (mx * mx + my * my + c1)
            con = (2 * sx * sy + c2) / (vx + vy + c2)
            stru = (cxy + c3) / (sx * sy + c3)
            scores.append(
                math.copysign(abs(lum) ** params.alpha, lum)
                * math.copysign(abs(con) ** params.beta, con)
                * math.copysign(abs(stru) ** params.gamma, stru)
            )
    return sum(scores) / len(scores)


class TestMse:
    def test_identical_is_zero(self, rng):
        img = make_image(rng, 12, 9)
        assert mse(img, img) == 0.0

    def test_single_pixel_max_difference(self):
        a = Image(np.zeros((1, 1, 1), dtype=np.uint8))
        b = Image(np.full((1, 1, 1), 255, dtype=np.uint8))
        assert mse(a, b) == 65025.0

    def test_random_pair_matches_double_loop(self, rng):
        a = make_image(rng, 4, 4)
        b = make_image(rng, 4, 4)
        assert mse(a, b) == pytest.approx(mse_oracle(a, b), rel=1e-12)

    def test_symmetric(self, rng):
        a = make_image(rng, 7, 5)
        b = make_image(rng, 7, 5)
        assert mse(a, b) == mse(b, a)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError, match="mismatch"):
            mse(make_image(rng, 4, 4), make_image(rng, 5, 4))

    def test_channel_mismatch(self, rng):
        with pytest.raises(ValueError, match="mismatch"):
            mse(make_image(rng, 4, 4, 3), make_image(rng, 4, 4, 1))


class TestPsnr:
    def test_identical_is_infinite(self, rng):
        img = make_image(rng, 6, 6)
        assert psnr(img, img) == math.inf

    def test_full_swing_is_zero_db(self):
        a = Image(np.zeros((3, 3, 3), dtype=np.uint8))
        b = Image(np.full((3, 3, 3), 255, dtype=np.uint8))
        assert psnr(a, b) == pytest.approx(0.0, abs=1e-12)

    def test_mse_65_025_gives_30_db(self):
        # 1000 samples, one at full swing: mse = 65025/1000 = 65.025
        base = np.zeros((10, 100, 1), dtype=np.uint8)
        other = base.copy()
        other[0, 0, 0] = 255
        a, b = Image(base), Image(other)
        assert mse(a, b) == pytest.approx(65.025, rel=1e-12)
        assert psnr(a, b) == pytest.approx(30.0, abs=1e-12)

    def test_table_range_cross_check(self):
        # 27-29 dB corresponds to mse around 86-118 at peak 255
        base = np.zeros((255, 255, 1), dtype=np.uint8)
        for k, low, high in ((86, 28.5, 29.0), (118, 27.0, 27.5)):
            other = base.copy()
            other.reshape(-1)[:k] = 255
            value = psnr(Image(base), Image(other))
            assert low < value < high

    def test_strictly_decreasing_in_mse(self, rng):
        base = make_image(rng, 16, 16)
        arr = base.pixels.astype(np.int64)
        values = []
        for amplitude in (1, 4, 16, 64):
            noise = rng.integers(-amplitude, amplitude + 1, size=arr.shape)
            noisy = Image(np.clip(arr + noise, 0, 255).astype(np.uint8))
            values.append(psnr(base, noisy))
        assert all(a > b for a, b in zip(values, values[1:]))


class TestSsim:
    def test_identical_is_one(self, rng):
        img = make_image(rng, 16, 16)
        assert ssim(img, img) == pytest.approx(1.0, abs=1e-9)

    def test_constant_vs_constant(self):
        img = Image(np.full((12, 12, 1), 128, dtype=np.uint8))
        assert ssim(img, img) == pytest.approx(1.0, abs=1e-12)

    def test_random_pair_matches_window_oracle(self, rng):
        a = make_image(rng, 16, 16)
        b = make_image(rng, 16, 16)
        assert ssim(a, b) == pytest.approx(ssim_oracle(a, b), abs=1e-9)

    def test_symmetric_default_exponents(self, rng):
        a = make_image(rng, 14, 14)
        b = make_image(rng, 14, 14)
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)

    def test_single_window_closed_form(self, rng):
        a = make_image(rng, 11, 11, 1)
        b = make_image(rng, 11, 11, 1)
        assert ssim(a, b) == pytest.approx(ssim_oracle(a, b), abs=1e-9)

    def test_nondefault_exponents_match_oracle(self, rng):
        params = SsimParams(alpha=0.8, beta=1.2, gamma=2.0)
        a = make_image(rng, 13, 13)
        b = make_image(rng, 13, 13)
        assert ssim(a, b, params) == pytest.approx(ssim_oracle(a, b, params), abs=1e-9)

    def test_image_smaller_than_window(self, rng):
        with pytest.raises(ValueError, match="smaller"):
            ssim(make_image(rng, 8, 8), make_image(rng, 8, 8))

    def test_bad_params_rejected(self):
        with pytest.raises(ValueError):
            SsimParams(window=4)
        with pytest.raises(ValueError):
            SsimParams(k1=0.0)
        with pytest.raises(ValueError):
            SsimParams(dynamic_range=-1)


class TestScorePair:
    def test_file_against_itself(self, rng, tmp_path):
        img = make_image(rng, 20, 20)
        path = tmp_path / "x.png"
        save_image(img, path)
        score = score_pair(path, path)
        assert score == QualityScore(mse=0.0, psnr=math.inf, ssim=score.ssim)
        assert score.ssim == pytest.approx(1.0, abs=1e-9)

    def test_mismatch_without_resize_errors(self, rng, tmp_path):
        save_image(make_image(rng, 20, 20), tmp_path / "a.png")
        save_image(make_image(rng, 16, 20), tmp_path / "b.png")
        with pytest.raises(ValueError, match="mismatch"):
            score_pair(tmp_path / "a.png", tmp_path / "b.png")

    def test_mismatch_with_resize_scores(self, rng, tmp_path):
        save_image(make_image(rng, 20, 20), tmp_path / "a.png")
        save_image(make_image(rng, 16, 12), tmp_path / "b.png")
        score = score_pair(tmp_path / "a.png", tmp_path / "b.png", resize=True)
        assert math.isfinite(score.mse)
        assert math.isfinite(score.ssim)
