"""Image containers and raster utilities shared by all pipelines.

Working depth is fixed at 8-bit samples; 16-bit sources are reduced on
load so the peak sample value is always 255. RGB to gray conversion uses
the BT.601 weights (0.299, 0.587, 0.114) evaluated in exact integer
arithmetic, rounding half up.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage, UnidentifiedImageError


class ImageLoadError(ValueError):
    """Raised when a file cannot be decoded into a supported image."""


@dataclass(frozen=True)
class Image:
    """8-bit raster, shape (height, width, channels) with channels 1 or 3.

    The pixel buffer is made read-only on construction; all operations on
    images return new instances.
    """

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim == 2:
            px = px[:, :, np.newaxis]
        if px.dtype != np.uint8:
            raise ValueError(f"image samples must be uint8, got {px.dtype}")
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise ValueError(f"image shape must be (h, w, 1|3), got {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image dimensions must be >= 1")
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    def same_geometry(self, other: "Image") -> bool:
        return self.pixels.shape == other.pixels.shape


@dataclass(frozen=True)
class BinaryMask:
    """Per-pixel boolean raster, shape (height, width)."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.dtype != np.bool_:
            raise ValueError(f"mask bits must be bool, got {b.dtype}")
        if b.ndim != 2:
            raise ValueError(f"mask shape must be (h, w), got {b.shape}")
        b = np.ascontiguousarray(b)
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def true_count(self) -> int:
        return int(self.bits.sum())


_SUPPORTED_FORMATS = {"PNG", "JPEG"}


def load_image(path: str | os.PathLike) -> Image:
    """Decode a PNG or JPEG file.

    Grayscale sources yield one channel, color sources three; alpha is
    dropped. 16-bit samples are reduced to 8-bit by integer right-shift.
    Raises ImageLoadError for unreadable, truncated, or non-PNG/JPEG input.
    """
    try:
        with PILImage.open(path) as im:
            fmt = im.format
            if fmt not in _SUPPORTED_FORMATS:
                raise ImageLoadError(f"{path}: unsupported format {fmt!r} (PNG or JPEG required)")
            im.load()
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(im, dtype=np.uint32)
                arr = (arr >> 8).astype(np.uint8)
            elif mode in ("L", "1"):
                arr = np.asarray(im.convert("L"), dtype=np.uint8)
            elif mode == "LA":
                arr = np.asarray(im.convert("L"), dtype=np.uint8)
            else:
                arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except ImageLoadError:
        raise
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageLoadError(f"{path}: cannot decode image ({exc})") from exc
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ImageLoadError(f"{path}: zero-dimension image")
    return Image(arr)


def save_image(img: Image, path: str | os.PathLike) -> None:
    """Encode to PNG (lossless) or JPEG depending on the file extension."""
    arr = img.pixels[:, :, 0] if img.channels == 1 else img.pixels
    PILImage.fromarray(arr).save(path)


def load_mask(path: str | os.PathLike) -> BinaryMask:
    """Load a mask image; any sample >= 128 (after luma conversion) is true."""
    img = load_image(path)
    return BinaryMask(to_luma(img).pixels[:, :, 0] >= 128)


def save_mask(mask: BinaryMask, path: str | os.PathLike) -> None:
    """Write a mask as single-channel PNG with true -> 255, false -> 0."""
    arr = np.where(mask.bits, 255, 0).astype(np.uint8)
    PILImage.fromarray(arr).save(path)


def to_luma(img: Image) -> Image:
    """BT.601 grayscale conversion; single-channel input passes through.

    Per pixel: (299*R + 587*G + 114*B + 500) // 1000, i.e. the weighted sum
    rounded half up, computed exactly in integers.
    """
    if img.channels == 1:
        return img
    px = img.pixels.astype(np.uint32)
    luma = (299 * px[:, :, 0] + 587 * px[:, :, 1] + 114 * px[:, :, 2] + 500) // 1000
    return Image(luma.astype(np.uint8)[:, :, np.newaxis])


def apply_mask(img: Image, mask: BinaryMask) -> Image:
    """Zero out all channels where the mask is false."""
    if (img.height, img.width) != (mask.height, mask.width):
        raise ValueError(
            f"mask {mask.width}x{mask.height} does not match image {img.width}x{img.height}"
        )
    out = np.where(mask.bits[:, :, np.newaxis], img.pixels, np.uint8(0))
    return Image(out)


def resize_bilinear(img: Image, width: int, height: int) -> Image:
    """Bilinear resample to the given dimensions."""
    if width < 1 or height < 1:
        raise ValueError("target dimensions must be >= 1")
    arr = img.pixels[:, :, 0] if img.channels == 1 else img.pixels
    resized = PILImage.fromarray(arr).resize((width, height), PILImage.Resampling.BILINEAR)
    out = np.asarray(resized, dtype=np.uint8)
    return Image(out)
