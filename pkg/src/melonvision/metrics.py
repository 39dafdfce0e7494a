"""Full-reference quality metrics comparing a generated image to an original.

MSE and PSNR are computed jointly over all channels on raw 8-bit samples
with a fixed peak of 255. SSIM is computed on luma with uniform square
windows slid over every fully interior position (stride 1) and mean-pooled;
window statistics use population normalization. A zero MSE yields an
explicit +infinity PSNR sentinel, never an exception.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .image_core import Image, load_image, resize_bilinear, to_luma

PEAK_SAMPLE = 255.0


@dataclass(frozen=True)
class SsimParams:
    """SSIM configuration: window side, stabilizing constants, exponents."""

    window: int = 11
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError(f"window must be odd and >= 3, got {self.window}")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be positive")
        if self.dynamic_range <= 0:
            raise ValueError("dynamic_range must be positive")


@dataclass(frozen=True)
class QualityScore:
    """One image pair's metric triple; psnr is math.inf when mse == 0."""

    mse: float
    psnr: float
    ssim: float


def _require_same_geometry(original: Image, generated: Image) -> None:
    if not original.same_geometry(generated):
        raise ValueError(
            f"image geometry mismatch: original {original.width}x{original.height}"
            f"x{original.channels} vs generated {generated.width}x{generated.height}"
            f"x{generated.channels}"
        )


def mse(original: Image, generated: Image) -> float:
    """Mean squared sample difference over all pixels and channels."""
    _require_same_geometry(original, generated)
    diff = original.pixels.astype(np.float64) - generated.pixels.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr(original: Image, generated: Image) -> float:
    """Peak signal-to-noise ratio in dB against the fixed 8-bit peak of 255."""
    err = mse(original, generated)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK_SAMPLE * PEAK_SAMPLE / err)


def _window_sums(arr: np.ndarray, w: int) -> np.ndarray:
    """Sum of every interior w-by-w window, via separable direct sums."""
    rows = np.lib.stride_tricks.sliding_window_view(arr, w, axis=1).sum(axis=-1)
    return np.lib.stride_tricks.sliding_window_view(rows, w, axis=0).sum(axis=-1)


def _signed_power(base: np.ndarray, exponent: float) -> np.ndarray:
    # keeps exponents well-defined when the structure term is negative
    if exponent == 1.0:
        return base
    return np.sign(base) * np.abs(base) ** exponent


def ssim(original: Image, generated: Image, params: SsimParams = SsimParams()) -> float:
    """Mean structural similarity over all interior sliding windows.

    Per window, with population statistics (mu, sigma, covariance) of the
    luma samples:

        l = (2*mux*muy + C1) / (mux^2 + muy^2 + C1)
        c = (2*sx*sy + C2) / (sx^2 + sy^2 + C2)
        s = (sxy + C3) / (sx*sy + C3)

    where C1 = (k1*L)^2, C2 = (k2*L)^2, C3 = C2/2, and the window score is
    l^alpha * c^beta * s^gamma.
    """
    _require_same_geometry(original, generated)
    w = params.window
    if min(original.width, original.height) < w:
        raise ValueError(
            f"image {original.width}x{original.height} smaller than {w}x{w} window"
        )
    x = to_luma(original).pixels[:, :, 0].astype(np.float64)
    y = to_luma(generated).pixels[:, :, 0].astype(np.float64)

    n = float(w * w)
    mu_x = _window_sums(x, w) / n
    mu_y = _window_sums(y, w) / n
    var_x = np.maximum(_window_sums(x * x, w) / n - mu_x * mu_x, 0.0)
    var_y = np.maximum(_window_sums(y * y, w) / n - mu_y * mu_y, 0.0)
    cov_xy = _window_sums(x * y, w) / n - mu_x * mu_y
    sig_x = np.sqrt(var_x)
    sig_y = np.sqrt(var_y)

    c1 = (params.k1 * params.dynamic_range) ** 2
    c2 = (params.k2 * params.dynamic_range) ** 2
    c3 = c2 / 2.0

    lum = (2.0 * mu_x * mu_y + c1) / (mu_x * mu_x + mu_y * mu_y + c1)
    con = (2.0 * sig_x * sig_y + c2) / (var_x + var_y + c2)
    stru = (cov_xy + c3) / (sig_x * sig_y + c3)

    scores = (
        _signed_power(lum, params.alpha)
        * _signed_power(con, params.beta)
        * _signed_power(stru, params.gamma)
    )
    return float(np.mean(scores))


def score_pair(
    original_path: str | os.PathLike,
    generated_path: str | os.PathLike,
    params: SsimParams = SsimParams(),
    resize: bool = False,
) -> QualityScore:
    """Load a pair from disk and compute all three metrics.

    Dimension mismatches are an error unless resize is enabled, in which
    case the generated image is bilinearly resampled to the original's
    dimensions (channel-count mismatches are always an error).
    """
    original = load_image(original_path)
    generated = load_image(generated_path)
    if not original.same_geometry(generated):
        if not resize or original.channels != generated.channels:
            _require_same_geometry(original, generated)
        generated = resize_bilinear(generated, original.width, original.height)
    return QualityScore(
        mse=mse(original, generated),
        psnr=psnr(original, generated),
        ssim=ssim(original, generated, params),
    )
