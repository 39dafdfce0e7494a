import math

import numpy as np
import pytest

from melonvision.image_core import Image
from melonvision.metrics import mse, psnr
from melonvision.net_quality import BinarizeParams, assess_net_quality
from melonvision.synthgen import (
    SynthSpec,
    degrade,
    generate,
    splitmix64_stream,
    unit_floats,
)


def splitmix64_reference(seed: int, n: int) -> list[int]:
    """Pure-integer SplitMix64, independent of the vectorized path."""
    mask = (1 << 64) - 1
    state = seed & mask
    out = []
    for _ in range(n):
        state = (state + 0x9E3779B97F4A7C15) & mask
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        out.append(z ^ (z >> 31))
    return out


def params_for(truth) -> BinarizeParams:
    return BinarizeParams(
        method="fixed",
        fixed_threshold=truth.threshold,
        polarity=truth.polarity,
        min_island_area=truth.min_island_area,
        connectivity=truth.connectivity,
    )


class TestSplitMix64:
    def test_matches_integer_reference(self):
        for seed in (0, 1, 0xDEADBEEF, (1 << 64) - 1):
            mine = splitmix64_stream(seed, 16).tolist()
            assert mine == splitmix64_reference(seed, 16)

    def test_unit_floats_range_and_determinism(self):
        u = unit_floats(42, 1000)
        assert np.all((0.0 <= u) & (u < 1.0))
        assert np.array_equal(u, unit_floats(42, 1000))


class TestGenerate:
    def test_grid_layout_exact_islands(self):
        spec = SynthSpec(width=64, height=64, seed=5, layout="grid", cell_size=16, crack_width=4)
        _, _, truth = generate(spec)
        assert truth.island_areas == (144,) * 16
        assert truth.expected_density == 144.0
        assert truth.expected_uniformity == 0.0

    def test_single_site_voronoi_single_island(self):
        spec = SynthSpec(width=32, height=32, seed=9, layout="voronoi", cell_size=40, crack_width=2)
        _, mask, truth = generate(spec)
        assert len(truth.island_areas) == 1
        assert truth.island_areas[0] == mask.true_count
        assert truth.expected_uniformity == 0.0

    def test_deterministic(self):
        spec = SynthSpec(width=48, height=40, seed=77, layout="jittered_grid", cell_size=10, crack_width=2)
        img1, mask1, truth1 = generate(spec)
        img2, mask2, truth2 = generate(spec)
        assert np.array_equal(img1.pixels, img2.pixels)
        assert np.array_equal(mask1.bits, mask2.bits)
        assert truth1.island_areas == truth2.island_areas

    def test_seed_changes_jittered_pattern(self):
        a = generate(SynthSpec(width=48, height=48, seed=1, layout="jittered_grid", cell_size=12, crack_width=3))
        b = generate(SynthSpec(width=48, height=48, seed=2, layout="jittered_grid", cell_size=12, crack_width=3))
        assert not np.array_equal(a[0].pixels, b[0].pixels)

    @pytest.mark.parametrize("layout", ["grid", "jittered_grid", "voronoi"])
    @pytest.mark.parametrize("fruit_radius", [None, 20])
    def test_truth_matches_assessment(self, layout, fruit_radius):
        spec = SynthSpec(
            width=56, height=56, seed=13, layout=layout,
            cell_size=14, crack_width=3, fruit_radius=fruit_radius,
        )
        image, mask, truth = generate(spec)
        report = assess_net_quality(image, mask, params_for(truth))
        assert report.island_areas == truth.island_areas
        assert report.net_density == truth.expected_density
        assert report.net_uniformity == truth.expected_uniformity

    def test_dark_skin_polarity(self):
        spec = SynthSpec(width=40, height=40, seed=3, skin_level=30, net_level=220, cell_size=10, crack_width=2)
        image, mask, truth = generate(spec)
        assert truth.polarity == "dark"
        report = assess_net_quality(image, mask, params_for(truth))
        assert report.island_areas == truth.island_areas

    def test_fruit_mask_is_circle(self):
        spec = SynthSpec(width=41, height=41, seed=0, fruit_radius=10)
        _, mask, _ = generate(spec)
        assert bool(mask.bits[20, 20])
        assert not bool(mask.bits[0, 0])
        assert mask.true_count == pytest.approx(math.pi * 100, rel=0.05)

    def test_spec_validation(self):
        with pytest.raises(ValueError, match="exceed"):
            SynthSpec(width=8, height=8, seed=0, cell_size=3, crack_width=3)
        with pytest.raises(ValueError, match="differ"):
            SynthSpec(width=8, height=8, seed=0, skin_level=60, net_level=60)
        with pytest.raises(ValueError, match="layout"):
            SynthSpec(width=8, height=8, seed=0, layout="spiral")


class TestDegrade:
    def test_amplitude_zero_is_identity(self, rng):
        img = Image(rng.integers(0, 256, (10, 10, 3), dtype=np.uint8))
        assert np.array_equal(degrade(img, 0.0, seed=4).pixels, img.pixels)

    def test_different_seeds_differ(self, rng):
        img = Image(rng.integers(0, 256, (20, 20, 3), dtype=np.uint8))
        a = degrade(img, 30.0, seed=1)
        b = degrade(img, 30.0, seed=2)
        assert a.pixels.shape == b.pixels.shape == img.pixels.shape
        assert not np.array_equal(a.pixels, b.pixels)

    def test_unclamped_noise_variance(self):
        # amplitude 60 around mid-gray never clamps: mse ~ 60^2/3
        base = Image(np.full((256, 256, 1), 128, dtype=np.uint8))
        noisy = degrade(base, 60.0, seed=11)
        assert mse(base, noisy) == pytest.approx(60.0**2 / 3.0, rel=0.10)

    def test_full_amplitude_clamp_aware_variance(self):
        # amplitude 255 on constant 128 clamps hard; compare against the
        # piecewise-exact expectation of the clamped error, not amp^2/3
        base = Image(np.full((256, 256, 1), 128, dtype=np.uint8))
        noisy = degrade(base, 255.0, seed=12)
        middle = (127**3 + 128**3) / 3.0
        tails = 128**2 * 127 + 127**2 * 128
        expected = (middle + tails) / 510.0
        assert mse(base, noisy) == pytest.approx(expected, rel=0.10)

    def test_psnr_non_increasing_with_amplitude(self):
        spec = SynthSpec(width=96, height=96, seed=21, layout="voronoi", cell_size=16, crack_width=3)
        base, _, _ = generate(spec)
        values = [psnr(base, degrade(base, amp, seed=33)) for amp in (5, 10, 20, 40, 80)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_negative_amplitude_rejected(self, rng):
        img = Image(rng.integers(0, 256, (4, 4, 1), dtype=np.uint8))
        with pytest.raises(ValueError):
            degrade(img, -1.0, seed=0)
