"""Dense C x H x W float image container and pixel-statistics helpers."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import png_io
from .errors import DimensionMismatch, ImageFormatError


@dataclass(frozen=True)
class ImageGrid:
    """Image with float64 channels in [0, 1], laid out (channels, height, width)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[0] < 1:
            raise DimensionMismatch(f"ImageGrid wants (C,H,W), got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ImageFormatError("ImageGrid values must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ImageFormatError("ImageGrid values must lie in [0, 1]")
        object.__setattr__(self, "data", arr)

    @staticmethod
    def _wrap(arr: np.ndarray) -> "ImageGrid":
        """Skip validation for arrays already known to satisfy the invariants
        (pure relocations of validated data).  Internal use only."""
        obj = object.__new__(ImageGrid)
        object.__setattr__(obj, "data", arr)
        return obj

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    # -- constructors ---------------------------------------------------------

    @staticmethod
    def zeros(channels: int, height: int, width: int) -> "ImageGrid":
        return ImageGrid(np.zeros((channels, height, width)))

    @staticmethod
    def full(channels: int, height: int, width: int, values) -> "ImageGrid":
        vals = np.broadcast_to(np.asarray(values, dtype=np.float64), (channels,))
        return ImageGrid(np.tile(vals[:, None, None], (1, height, width)))

    # -- persistence ------------------------------------------------------------

    @staticmethod
    def load_png(path: str | Path) -> "ImageGrid":
        arr, bitdepth = png_io.read_png(path)
        scale = float(2 ** bitdepth - 1)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        return ImageGrid(arr.astype(np.float64).transpose(2, 0, 1) / scale)

    def save_png(self, path: str | Path, bitdepth: int = 8) -> None:
        if self.channels not in (1, 3):
            raise ImageFormatError(f"PNG output needs 1 or 3 channels, image has {self.channels}")
        scale = float(2 ** bitdepth - 1)
        ints = np.rint(self.data * scale).astype(np.uint32)
        arr = ints.transpose(1, 2, 0)
        if self.channels == 1:
            arr = arr[:, :, 0]
        png_io.write_png(path, arr, bitdepth)

    def quantize(self, bitdepth: int = 8) -> "ImageGrid":
        """Snap values onto the bitdepth grid, i.e. what a PNG round trip yields."""
        scale = float(2 ** bitdepth - 1)
        return ImageGrid(np.rint(self.data * scale) / scale)

    # -- misc ------------------------------------------------------------------

    def crop_to_multiple(self, patch_size: int) -> "ImageGrid":
        """Center-crop height/width down to the nearest multiple of patch_size."""
        h = (self.height // patch_size) * patch_size
        w = (self.width // patch_size) * patch_size
        if h == 0 or w == 0:
            raise DimensionMismatch(
                f"image {self.height}x{self.width} smaller than patch size {patch_size}"
            )
        y0 = (self.height - h) // 2
        x0 = (self.width - w) // 2
        return ImageGrid(self.data[:, y0:y0 + h, x0:x0 + w])


def pairwise_sum(values: np.ndarray, axis: int = -1,
                 consume: bool = False) -> np.ndarray | float:
    """Sum by repeated pairwise halving along one axis (fixed reduction order).

    consume=True lets the reduction scribble over the input buffer.
    """
    a = np.asarray(values, dtype=np.float64)
    scalar = a.ndim == 1
    a = np.moveaxis(a, axis, -1)
    if not (consume and a.flags.c_contiguous and a.flags.writeable):
        a = a.copy()
    n = a.shape[-1]
    if n == 0:
        return 0.0 if scalar else np.zeros(a.shape[:-1])
    while n > 1:
        half = n // 2
        a[..., :half] = a[..., :half * 2:2] + a[..., 1:half * 2:2]
        if n % 2:
            a[..., half] = a[..., n - 1]
            n = half + 1
        else:
            n = half
    out = a[..., 0]
    return float(out) if scalar else out


def multiset_channel_stats(image: ImageGrid) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel (mean, variance) computed over the sorted value multiset.

    Sorting canonicalizes pixel order, so any relocation of pixels (e.g. a
    patch shuffle) yields bit-identical statistics, not merely close ones.
    Variance is the population variance.
    """
    c = image.channels
    n = image.height * image.width
    vals = np.sort(image.data.reshape(c, n), axis=1)
    squares = vals * vals
    means = np.asarray(pairwise_sum(vals, axis=1, consume=True)) / n
    mean_sq = np.asarray(pairwise_sum(squares, axis=1, consume=True)) / n
    return means, mean_sq - means * means


def bilinear_sample(texture: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Sample a (C,H,W) texture at UV coordinates with clamp-to-edge.

    Texel centers sit at u=(x+0.5)/W, v=1-(y+0.5)/H; v runs bottom-up as in
    OBJ texture coordinates while image row 0 is the top.
    Returns an array of shape u.shape + (C,).
    """
    c, h, w = texture.shape
    x = np.clip(u * w - 0.5, 0.0, w - 1.0)
    y = np.clip((1.0 - v) * h - 0.5, 0.0, h - 1.0)
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    tex = texture.reshape(c, -1)
    idx00 = y0 * w + x0
    idx01 = y0 * w + x1
    idx10 = y1 * w + x0
    idx11 = y1 * w + x1
    out = np.empty(u.shape + (c,))
    for ch in range(c):
        t = tex[ch]
        top = t[idx00] * (1.0 - fx) + t[idx01] * fx
        bot = t[idx10] * (1.0 - fx) + t[idx11] * fx
        out[..., ch] = top * (1.0 - fy) + bot * fy
    return out
