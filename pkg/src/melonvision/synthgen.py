"""Synthetic net-pattern fixtures with exact, self-computed ground truth.

Patterns are skin cells separated by net-colored cracks in three layouts:
a regular grid, a jittered grid, and a voronoi partition. Ground truth is
measured from the emitted raster itself (an independent flood fill over
the skin pixels inside the mask), never from layout math, so it is exact
at mask boundaries by construction.

All randomness flows through SplitMix64, a 64-bit mixing generator chosen
so fixtures are bit-reproducible anywhere: the n-th output for seed s is
mix(s + n * 0x9E3779B97F4A7C15) with

    z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27; z *= 0x94D049BB133111EB
    z ^= z >> 31

all modulo 2**64. Unit floats take the top 53 bits: (z >> 11) * 2**-53.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .image_core import BinaryMask, Image

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1

_LAYOUTS = ("grid", "jittered_grid", "voronoi")


def splitmix64_stream(seed: int, n: int) -> np.ndarray:
    """First n SplitMix64 outputs for the given seed, as uint64."""
    with np.errstate(over="ignore"):
        i = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(seed & _MASK64) + _GAMMA * i
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def unit_floats(seed: int, n: int) -> np.ndarray:
    """n floats in [0, 1) from the SplitMix64 stream."""
    return (splitmix64_stream(seed, n) >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass(frozen=True)
class SynthSpec:
    width: int
    height: int
    seed: int
    layout: str = "grid"
    cell_size: int = 16
    crack_width: int = 3
    skin_level: int = 200
    net_level: int = 60
    fruit_radius: int | None = None

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("width and height must be >= 1")
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must fit in 64 bits")
        if self.layout not in _LAYOUTS:
            raise ValueError(f"layout must be one of {_LAYOUTS}, got {self.layout!r}")
        if self.crack_width < 1:
            raise ValueError("crack_width must be >= 1")
        if self.cell_size <= self.crack_width:
            raise ValueError(
                f"cell_size ({self.cell_size}) must exceed crack_width ({self.crack_width})"
            )
        for name in ("skin_level", "net_level"):
            v = getattr(self, name)
            if not 0 <= v <= 255:
                raise ValueError(f"{name} {v} outside [0, 255]")
        if self.skin_level == self.net_level:
            raise ValueError("skin_level and net_level must differ")
        if self.fruit_radius is not None and self.fruit_radius < 1:
            raise ValueError("fruit_radius must be >= 1 when given")

    @property
    def midpoint_threshold(self) -> float:
        return (self.skin_level + self.net_level) / 2.0

    @property
    def skin_polarity(self) -> str:
        return "light" if self.skin_level > self.net_level else "dark"


@dataclass(frozen=True)
class SynthGroundTruth:
    """Exact island statistics of an emitted fixture.

    Reproducing these with the assessment pipeline requires a fixed
    threshold binarization at `threshold` with `polarity`, plus the same
    `connectivity` and `min_island_area` recorded here.
    """

    island_areas: tuple[int, ...]
    expected_density: float
    expected_uniformity: float
    mask: BinaryMask
    threshold: float
    polarity: str
    connectivity: int
    min_island_area: int


def _crack_profile(dim: int, cell: int, crack: int, jitters: np.ndarray | None) -> np.ndarray:
    """1D boolean profile marking crack pixels along one axis."""
    out = np.zeros(dim, dtype=bool)
    lines = range(0, dim, cell)
    for idx, base in enumerate(lines):
        pos = base
        if jitters is not None:
            pos = int(np.clip(base + jitters[idx], 0, dim - 1))
        out[pos : pos + crack] = True
    return out


def _net_pattern(spec: SynthSpec) -> np.ndarray:
    h, w = spec.height, spec.width
    if spec.layout == "grid":
        xs = np.arange(w) % spec.cell_size < spec.crack_width
        ys = np.arange(h) % spec.cell_size < spec.crack_width
        return ys[:, np.newaxis] | xs[np.newaxis, :]
    if spec.layout == "jittered_grid":
        n_x = len(range(0, w, spec.cell_size))
        n_y = len(range(0, h, spec.cell_size))
        amplitude = max(0, (spec.cell_size - spec.crack_width - 1) // 3)
        u = unit_floats(spec.seed, n_x + n_y)
        jit = np.floor(u * (2 * amplitude + 1)).astype(np.int64) - amplitude
        xs = _crack_profile(w, spec.cell_size, spec.crack_width, jit[:n_x])
        ys = _crack_profile(h, spec.cell_size, spec.crack_width, jit[n_x:])
        return ys[:, np.newaxis] | xs[np.newaxis, :]
    # voronoi: crack wherever the two nearest sites are nearly equidistant
    n_sites = max(1, (w * h) // (spec.cell_size * spec.cell_size))
    u = unit_floats(spec.seed, 2 * n_sites)
    sx = u[0::2] * w
    sy = u[1::2] * h
    yy, xx = np.mgrid[0:h, 0:w]
    d1 = np.full((h, w), np.inf)
    d2 = np.full((h, w), np.inf)
    for k in range(n_sites):
        d = np.sqrt((xx - sx[k]) ** 2 + (yy - sy[k]) ** 2)
        closer = d < d1
        d2 = np.where(closer, d1, np.minimum(d2, d))
        d1 = np.where(closer, d, d1)
    return (d2 - d1) < spec.crack_width


def _fruit_mask(spec: SynthSpec) -> np.ndarray:
    if spec.fruit_radius is None:
        return np.ones((spec.height, spec.width), dtype=bool)
    cy = (spec.height - 1) / 2.0
    cx = (spec.width - 1) / 2.0
    yy, xx = np.mgrid[0 : spec.height, 0 : spec.width]
    return (xx - cx) ** 2 + (yy - cy) ** 2 <= spec.fruit_radius**2


def _flood_fill_areas(skin: np.ndarray, connectivity: int) -> list[int]:
    """Independent BFS component areas, used only for ground truth."""
    if connectivity == 8:
        offsets = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
    else:
        offsets = [(-1, 0), (0, -1), (0, 1), (1, 0)]
    h, w = skin.shape
    seen = np.zeros_like(skin, dtype=bool)
    areas = []
    for r0, c0 in zip(*np.nonzero(skin)):
        if seen[r0, c0]:
            continue
        seen[r0, c0] = True
        queue = deque([(int(r0), int(c0))])
        area = 0
        while queue:
            r, c = queue.popleft()
            area += 1
            for dr, dc in offsets:
                nr, nc = r + dr, c + dc
                if 0 <= nr < h and 0 <= nc < w and skin[nr, nc] and not seen[nr, nc]:
                    seen[nr, nc] = True
                    queue.append((nr, nc))
        areas.append(area)
    return areas


def generate(
    spec: SynthSpec,
    connectivity: int = 8,
    min_island_area: int = 1,
) -> tuple[Image, BinaryMask, SynthGroundTruth]:
    """Emit (image, fruit mask, ground truth) for the given spec.

    Deterministic for a given spec: identical specs produce identical
    bytes. The image is single-channel with pixels at exactly skin_level
    or net_level (net_level outside the fruit mask).
    """
    net = _net_pattern(spec)
    mask_bits = _fruit_mask(spec)
    pixels = np.where(net | ~mask_bits, spec.net_level, spec.skin_level).astype(np.uint8)
    image = Image(pixels[:, :, np.newaxis])
    mask = BinaryMask(mask_bits)

    # measure the raster, not the layout: re-derive skin by thresholding
    light = pixels > spec.midpoint_threshold
    skin = (light if spec.skin_polarity == "light" else ~light) & mask_bits
    areas = [a for a in _flood_fill_areas(skin, connectivity) if a >= min_island_area]
    areas.sort(reverse=True)
    count = len(areas)
    density = sum(areas) / count if count else 0.0
    uniformity = (
        math.sqrt(sum((a - density) ** 2 for a in areas) / count) if count else 0.0
    )
    truth = SynthGroundTruth(
        island_areas=tuple(areas),
        expected_density=density,
        expected_uniformity=uniformity,
        mask=mask,
        threshold=spec.midpoint_threshold,
        polarity=spec.skin_polarity,
        connectivity=connectivity,
        min_island_area=min_island_area,
    )
    return image, mask, truth


def degrade(img: Image, noise_amplitude: float, seed: int) -> Image:
    """Add seeded uniform noise in [-amplitude, +amplitude] per sample.

    Amplitude 0 returns a bit-identical image. Results are rounded to the
    nearest sample value and clamped to [0, 255].
    """
    if noise_amplitude < 0:
        raise ValueError("noise_amplitude must be >= 0")
    n = img.height * img.width * img.channels
    u = unit_floats(seed, n).reshape(img.pixels.shape)
    noise = np.rint((2.0 * u - 1.0) * noise_amplitude)
    out = np.clip(img.pixels.astype(np.float64) + noise, 0.0, 255.0)
    return Image(out.astype(np.uint8))
