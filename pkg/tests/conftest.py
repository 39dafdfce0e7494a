import numpy as np
import pytest

from melonvision.image_core import BinaryMask, Image


def make_image(rng: np.random.Generator, width: int, height: int, channels: int = 3) -> Image:
    return Image(rng.integers(0, 256, size=(height, width, channels), dtype=np.uint8))


def make_mask(rng: np.random.Generator, width: int, height: int, density: float = 0.5) -> BinaryMask:
    return BinaryMask(rng.random((height, width)) < density)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def run_cli(argv) -> int:
    """Invoke the CLI in-process, normalizing SystemExit to an exit code."""
    from melonvision.cli import main

    try:
        return main(list(argv))
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
