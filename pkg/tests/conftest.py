import numpy as np
import pytest

from vitaltrace.media_io import Frame, GrayFrame
from vitaltrace.synth import value_noise


def textured_gray(size=64, seed=0, cell=8):
    tex = value_noise(size, size, cell=cell,
                      rng=np.random.default_rng([seed, 1]), lo=60, hi=220)
    return GrayFrame(luma=tex / 255.0)


def solid_frame(r, g, b, w=4, h=4, index=0):
    return Frame(
        index=index,
        red=np.full((h, w), r, dtype=np.uint8),
        green=np.full((h, w), g, dtype=np.uint8),
        blue=np.full((h, w), b, dtype=np.uint8),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
