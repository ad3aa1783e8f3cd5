import numpy as np
import pytest

from stylebake.image import ImageGrid
from stylebake.rng import SeededRng


@pytest.fixture
def rng():
    return SeededRng(1234)


def random_image(seed: int, channels: int = 3, height: int = 64, width: int = 64) -> ImageGrid:
    return ImageGrid(np.asarray(SeededRng(seed, "img").uniform((channels, height, width))))


@pytest.fixture
def image_64(rng):
    return random_image(1, 3, 64, 64)
