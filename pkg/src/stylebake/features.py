"""Deterministic multi-scale feature bank for style statistics.

Five levels: level 0 is the raw pixels (receptive field 1x1); levels 1-4 each
apply a fixed seeded 3x3 convolution (widths 16/32/64/128), a 2x2 average
downsample, and a clamp-at-zero nonlinearity.  Filter weights are a pure
function of the bank seed, so every metric computed on top is reproducible
without shipping pretrained weights.  Summation order inside the convolution
is fixed (tap-major, input-channel minor), making extraction bit-stable.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ChannelMismatch, DimensionMismatch
from .image import ImageGrid
from .rng import SeededRng

STAGE_WIDTHS = (16, 32, 64, 128)
LEVELS = 5


@dataclass(frozen=True)
class FeatureBank:
    """Immutable filter stack; safe to share across threads."""

    seed: int = 0
    weights: tuple[np.ndarray, ...] = field(init=False, repr=False)

    def __post_init__(self):
        rng = SeededRng(self.seed, "feature-bank")
        ws = []
        c_in = 3
        for i, c_out in enumerate(STAGE_WIDTHS):
            stage = rng.child(f"stage{i + 1}")
            scale = np.sqrt(2.0 / (9.0 * c_in))
            w = stage.normal((c_out, c_in, 3, 3)) * scale
            ws.append(np.ascontiguousarray(w))
            c_in = c_out
        object.__setattr__(self, "weights", tuple(ws))


def _avgpool2(x: np.ndarray) -> np.ndarray:
    c, h, w = x.shape
    return (x[:, 0::2, 0::2] + x[:, 0::2, 1::2]
            + x[:, 1::2, 0::2] + x[:, 1::2, 1::2]) * 0.25


def extract_features(image: ImageGrid, bank: FeatureBank) -> list[np.ndarray]:
    """Five feature maps (C,H,W); level 0 is the input pixels, bit-identical."""
    if image.channels != 3:
        raise ChannelMismatch(f"feature extraction wants 3 channels, got {image.channels}")
    if image.height % 16 or image.width % 16:
        raise DimensionMismatch(
            f"image {image.height}x{image.width} must be divisible by 16 "
            "(four halvings)"
        )
    levels = [image.data.copy()]
    x = image.data
    for w in bank.weights:
        c_out = w.shape[0]
        h, wd = x.shape[1], x.shape[2]
        padded = np.zeros((x.shape[0], h + 2, wd + 2))
        padded[:, 1:-1, 1:-1] = x
        out = np.zeros((c_out, h, wd))
        _kernels.conv3x3_acc(out, padded, w)
        x = np.maximum(_avgpool2(out), 0.0)
        levels.append(x)
    return levels
