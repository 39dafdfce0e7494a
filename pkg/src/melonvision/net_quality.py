"""Melon net-quality quantification from a masked fruit region.

Pipeline: luma conversion, skin/net thresholding restricted to the fruit
mask (Otsu on the masked histogram or a fixed threshold), connected-
component labeling of skin pixels into islands, then island statistics.
Net density is total skin area divided by island count (mean island area,
lower = denser net); net uniformity is the population standard deviation
of island areas (lower = more uniform). Both are raw pixel units; roi_area
is reported alongside so callers can normalize if they wish.

Thresholding convention: samples strictly above the threshold fall on the
"light" side; polarity selects whether skin is the light or the dark side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .image_core import BinaryMask, Image, load_image, load_mask, to_luma

_METHODS = ("otsu", "fixed")
_POLARITIES = ("light", "dark")


@dataclass(frozen=True)
class BinarizeParams:
    method: str = "otsu"
    fixed_threshold: float = 128.0
    polarity: str = "light"
    min_island_area: int = 4
    connectivity: int = 8

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}, got {self.method!r}")
        if not 0.0 <= self.fixed_threshold <= 255.0:
            raise ValueError(f"fixed_threshold {self.fixed_threshold} outside [0, 255]")
        if self.polarity not in _POLARITIES:
            raise ValueError(f"polarity must be one of {_POLARITIES}, got {self.polarity!r}")
        if self.min_island_area < 1:
            raise ValueError("min_island_area must be >= 1")
        if self.connectivity not in (4, 8):
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")


@dataclass(frozen=True)
class IslandReport:
    """Per-image island statistics; degenerate marks an islandless result."""

    island_areas: tuple[int, ...]
    island_count: int
    total_skin_area: int
    net_density: float
    net_uniformity: float
    roi_area: int
    degenerate: bool


def otsu_threshold(values: np.ndarray) -> int:
    """Threshold maximizing between-class variance over all 256 cut points.

    Classes are {v <= t} and {v > t}; ties take the smallest t. A single-
    level histogram has zero variance everywhere and yields t = 0.
    """
    if values.size == 0:
        raise ValueError("cannot compute a threshold from zero samples")
    counts = np.bincount(values.ravel(), minlength=256).astype(np.float64)
    weighted = counts * np.arange(256, dtype=np.float64)
    n0 = np.cumsum(counts)
    s0 = np.cumsum(weighted)
    n1 = n0[-1] - n0
    s1 = s0[-1] - s0
    valid = (n0 > 0) & (n1 > 0)
    mu0 = np.divide(s0, n0, out=np.zeros(256), where=n0 > 0)
    mu1 = np.divide(s1, n1, out=np.zeros(256), where=n1 > 0)
    d = mu0 - mu1
    between = np.where(valid, n0 * n1 * d * d, 0.0)
    return int(np.argmax(between))


def binarize_skin(img: Image, mask: BinaryMask, params: BinarizeParams = BinarizeParams()) -> BinaryMask:
    """Threshold the masked fruit region into a skin map.

    True marks skin, false marks net or anything outside the mask. Otsu
    thresholds are computed from the histogram of mask-interior luma only.
    """
    if (img.height, img.width) != (mask.height, mask.width):
        raise ValueError(
            f"mask {mask.width}x{mask.height} does not match image {img.width}x{img.height}"
        )
    if mask.true_count == 0:
        raise ValueError("mask has no true pixels")
    luma = to_luma(img).pixels[:, :, 0]
    if params.method == "otsu":
        threshold = float(otsu_threshold(luma[mask.bits]))
    else:
        threshold = params.fixed_threshold
    light = luma > threshold
    skin = light if params.polarity == "light" else ~light
    return BinaryMask(skin & mask.bits)


def _row_runs(row: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of true pixels as (start, end) with end exclusive."""
    padded = np.empty(row.size + 2, dtype=np.int8)
    padded[0] = padded[-1] = 0
    padded[1:-1] = row
    d = np.diff(padded)
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    return list(zip(starts.tolist(), ends.tolist()))


def label_islands(skin: BinaryMask, params: BinarizeParams = BinarizeParams()) -> list[int]:
    """Areas of connected skin components, descending, noise floor applied.

    Run-length labeling with union-find: runs of true pixels per row are
    merged across adjacent rows when they touch under the configured
    connectivity. Components smaller than min_island_area are discarded.
    """
    parent: list[int] = []
    length: list[int] = []

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    diag = params.connectivity == 8
    prev: list[tuple[int, int, int]] = []
    for row in skin.bits:
        cur = []
        for s, e in _row_runs(row):
            rid = len(parent)
            parent.append(rid)
            length.append(e - s)
            cur.append((s, e, rid))
        i = j = 0
        while i < len(prev) and j < len(cur):
            ps, pe, plabel = prev[i]
            s, e, label = cur[j]
            touching = (ps <= e and s <= pe) if diag else (ps < e and s < pe)
            if touching:
                union(plabel, label)
            if pe <= e:
                i += 1
            else:
                j += 1
        prev = cur

    area_by_root: dict[int, int] = {}
    for rid, run_len in enumerate(length):
        root = find(rid)
        area_by_root[root] = area_by_root.get(root, 0) + run_len
    areas = [a for a in area_by_root.values() if a >= params.min_island_area]
    areas.sort(reverse=True)
    return areas


def assess_net_quality(
    img: Image, mask: BinaryMask, params: BinarizeParams = BinarizeParams()
) -> IslandReport:
    """Full single-fruit pipeline: binarize, label, summarize."""
    skin = binarize_skin(img, mask, params)
    areas = label_islands(skin, params)
    count = len(areas)
    total = sum(areas)
    if count == 0:
        return IslandReport(
            island_areas=(),
            island_count=0,
            total_skin_area=0,
            net_density=0.0,
            net_uniformity=0.0,
            roi_area=mask.true_count,
            degenerate=True,
        )
    density = total / count
    uniformity = math.sqrt(sum((a - density) ** 2 for a in areas) / count)
    return IslandReport(
        island_areas=tuple(areas),
        island_count=count,
        total_skin_area=total,
        net_density=density,
        net_uniformity=uniformity,
        roi_area=mask.true_count,
        degenerate=False,
    )


_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def _find_mask_for(stem: str, mask_dir: Path) -> Path | None:
    for suffix in _IMAGE_SUFFIXES:
        candidate = mask_dir / f"{stem}{suffix}"
        if candidate.exists():
            return candidate
    return None


def batch_assess(
    image_dir: str | Path,
    mask_dir: str | Path,
    params: BinarizeParams = BinarizeParams(),
) -> tuple[list[tuple[str, IslandReport]], list[tuple[str, str]]]:
    """Assess every image in a directory against its same-stem mask.

    Returns (reports, failures), both sorted by image id. A missing mask or
    a per-image error is recorded as a failure and the batch continues.
    """
    image_dir = Path(image_dir)
    mask_dir = Path(mask_dir)
    by_stem: dict[str, Path] = {}
    for p in sorted(image_dir.iterdir()):
        if p.is_file() and p.suffix.lower() in _IMAGE_SUFFIXES and p.stem not in by_stem:
            by_stem[p.stem] = p
    reports = []
    failures = []
    for stem, image_path in sorted(by_stem.items()):
        mask_path = _find_mask_for(stem, mask_dir)
        if mask_path is None:
            failures.append((stem, f"no mask with stem {stem!r} in {mask_dir}"))
            continue
        try:
            img = load_image(image_path)
            mask = load_mask(mask_path)
            reports.append((stem, assess_net_quality(img, mask, params)))
        except (ValueError, OSError) as exc:
            failures.append((stem, str(exc)))
    return reports, failures


__all__ = [
    "BinarizeParams",
    "IslandReport",
    "otsu_threshold",
    "binarize_skin",
    "label_islands",
    "assess_net_quality",
    "batch_assess",
]
