"""Patch-shuffle transform: partition, permutation shuffle, stochastic masking.

The transform relocates whole S x S patches, so the multiset of pixel values
per channel (and with it mean and variance) is exactly preserved; masking then
replaces a Bernoulli-chosen subset of patches with a constant background.
Inference mode applies the shuffle only.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DimensionMismatch, NonDivisibleDimensions
from .image import ImageGrid
from .rng import SeededRng

DEFAULT_TRAIN_PATCH = 64
DEFAULT_INFER_PATCH = 128
DEFAULT_BACKGROUND = 0.5
MASK_RATIO_MAX = 0.25


@dataclass(frozen=True)
class JigsawConfig:
    patch_size: int = DEFAULT_TRAIN_PATCH
    mask_ratio: float = 0.0
    background: tuple[float, ...] = (DEFAULT_BACKGROUND,)
    seed: int = 0

    def __post_init__(self):
        if self.patch_size < 1:
            raise ValueError("patch_size must be >= 1")
        if not 0.0 <= self.mask_ratio <= 1.0:
            raise ValueError("mask_ratio must lie in [0, 1]")
        if any(not 0.0 <= b <= 1.0 for b in self.background):
            raise ValueError("background values must lie in [0, 1]")


@dataclass(frozen=True)
class PatchPermutation:
    """Bijection on patch cells: mapping[dest] = source cell index (row-major)."""

    rows: int
    cols: int
    mapping: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mapping, dtype=np.int64)
        n = self.rows * self.cols
        if m.shape != (n,) or not np.array_equal(np.sort(m), np.arange(n)):
            raise ValueError("mapping must be a bijection on the patch cells")
        object.__setattr__(self, "mapping", m)

    def inverse(self) -> "PatchPermutation":
        inv = np.empty_like(self.mapping)
        inv[self.mapping] = np.arange(self.mapping.size)
        return PatchPermutation(self.rows, self.cols, inv)

    @staticmethod
    def identity(rows: int, cols: int) -> "PatchPermutation":
        return PatchPermutation(rows, cols, np.arange(rows * cols))


@dataclass(frozen=True)
class MaskPattern:
    rows: int
    cols: int
    visible: np.ndarray  # bool per cell, row-major

    def __post_init__(self):
        v = np.asarray(self.visible, dtype=bool)
        if v.shape != (self.rows * self.cols,):
            raise ValueError("visible must have rows*cols entries")
        object.__setattr__(self, "visible", v)


@dataclass(frozen=True)
class JigsawOutput:
    image: ImageGrid
    permutation: PatchPermutation
    mask: MaskPattern
    config: JigsawConfig
    mode: str = "train"


def partition(image: ImageGrid, patch_size: int) -> tuple[int, int]:
    """Patch grid dimensions (rows, cols) for a non-overlapping partition."""
    if patch_size < 1:
        raise NonDivisibleDimensions(f"patch size must be >= 1, got {patch_size}")
    if image.height % patch_size or image.width % patch_size:
        raise NonDivisibleDimensions(
            f"image {image.height}x{image.width} not divisible by patch size {patch_size}"
        )
    return image.height // patch_size, image.width // patch_size


def make_permutation(rows: int, cols: int, seed: int) -> PatchPermutation:
    """Uniformly random patch permutation (Fisher-Yates), deterministic per seed."""
    if rows * cols < 1:
        raise ValueError("need at least one patch cell")
    mapping = SeededRng(seed, "perm").permutation(rows * cols)
    return PatchPermutation(rows, cols, mapping)


def _to_cells(data: np.ndarray, s: int) -> np.ndarray:
    """(C,H,W) -> (R*Q, C, S, S) row-major cell stack."""
    c, h, w = data.shape
    r, q = h // s, w // s
    cells = data.reshape(c, r, s, q, s).transpose(1, 3, 0, 2, 4)
    return cells.reshape(r * q, c, s, s)


def _from_cells(cells: np.ndarray, r: int, q: int) -> np.ndarray:
    n, c, s, _ = cells.shape
    grid = cells.reshape(r, q, c, s, s).transpose(2, 0, 3, 1, 4)
    return grid.reshape(c, r * s, q * s)


def shuffle(image: ImageGrid, perm: PatchPermutation, patch_size: int) -> ImageGrid:
    """Relocate patches: destination cell (i,j) receives source patch perm(i,j)."""
    r, q = partition(image, patch_size)
    if (perm.rows, perm.cols) != (r, q):
        raise DimensionMismatch(
            f"permutation grid {perm.rows}x{perm.cols} does not match partition {r}x{q}"
        )
    cells = _to_cells(image.data, patch_size)
    return ImageGrid._wrap(_from_cells(cells[perm.mapping], r, q))


def unshuffle(image: ImageGrid, perm: PatchPermutation, patch_size: int) -> ImageGrid:
    """Exact inverse of :func:`shuffle` with the same permutation."""
    return shuffle(image, perm.inverse(), patch_size)


def make_mask(rows: int, cols: int, mask_ratio: float, seed: int) -> MaskPattern:
    """Independent Bernoulli visibility per cell: visible with prob 1 - mask_ratio."""
    if not 0.0 <= mask_ratio <= 1.0:
        raise ValueError("mask_ratio must lie in [0, 1]")
    visible = ~SeededRng(seed, "mask").bernoulli(mask_ratio, (rows * cols,))
    return MaskPattern(rows, cols, visible)


def apply_mask(image: ImageGrid, mask: MaskPattern, background, patch_size: int) -> ImageGrid:
    """Fill masked cells with the per-channel background value."""
    r, q = partition(image, patch_size)
    if (mask.rows, mask.cols) != (r, q):
        raise DimensionMismatch(
            f"mask grid {mask.rows}x{mask.cols} does not match partition {r}x{q}"
        )
    bg = np.broadcast_to(np.asarray(background, dtype=np.float64), (image.channels,))
    cells = _to_cells(image.data, patch_size).copy()
    hidden = ~mask.visible
    cells[hidden] = bg[None, :, None, None]
    return ImageGrid._wrap(_from_cells(cells, r, q))


def jigsaw(image: ImageGrid, config: JigsawConfig,
           mode: Literal["train", "infer"] = "train") -> JigsawOutput:
    """Full transform: shuffle always; Bernoulli patch masking in train mode only."""
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    r, q = partition(image, config.patch_size)
    perm = make_permutation(r, q, config.seed)
    p = config.mask_ratio if mode == "train" else 0.0
    mask = make_mask(r, q, p, config.seed)
    out = shuffle(image, perm, config.patch_size)
    if mode == "train":
        out = apply_mask(out, mask, config.background, config.patch_size)
    return JigsawOutput(image=out, permutation=perm, mask=mask, config=config, mode=mode)
