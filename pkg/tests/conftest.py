"""Shared fixtures: deterministic RNG and synthetic corpus builders."""

import numpy as np
import pytest
from PIL import Image

from texref.imageio import ChannelPlane, RgbImage

# Two-class corpus geometry: flat grays versus checkerboards.  Large,
# tightly clustered periods keep every checkerboard query closer to all
# its classmates than to the flat-image cluster (verified margin), which
# is what makes the 100%-retrieval tests meaningful rather than flaky.
CORPUS_SIDE = 120
CONSTANT_LEVELS = tuple(range(40, 240, 20))
CHECKER_PERIODS = tuple(range(20, 30))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_plane(rng, height, width, high=256):
    return ChannelPlane(rng.integers(0, high, size=(height, width), dtype=np.uint8))


def random_image(rng, height, width):
    return RgbImage(rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8))


def constant_image(level, side=CORPUS_SIDE):
    return np.full((side, side, 3), level, dtype=np.uint8)


def checkerboard_image(period, side=CORPUS_SIDE, low=0, high=255):
    y, x = np.mgrid[0:side, 0:side]
    cells = ((y // period) + (x // period)) % 2
    plane = np.where(cells == 1, high, low).astype(np.uint8)
    return np.stack([plane] * 3, axis=-1)


def write_two_class_corpus(root):
    """Ten flat grays (class 0, ids 0..9) and ten checkerboards with
    distinct periods (class 1, ids 100..109), saved as lossless PNG."""
    root.mkdir(parents=True, exist_ok=True)
    for i, level in enumerate(CONSTANT_LEVELS):
        Image.fromarray(constant_image(level)).save(root / f"{i}.png")
    for i, period in enumerate(CHECKER_PERIODS):
        Image.fromarray(checkerboard_image(period)).save(root / f"{100 + i}.png")
    return root


@pytest.fixture
def two_class_corpus(tmp_path):
    return write_two_class_corpus(tmp_path / "corpus")


def write_image(path, pixels):
    Image.fromarray(pixels).save(path)
    return path
