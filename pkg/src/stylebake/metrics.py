"""Gram-matrix and mean/std style distances over the feature bank.

Definitions (per feature map F with C channels and N = C*H*W elements):
    gram        G = F F^T / (C*H*W), a C x C channel-correlation matrix
    gram dist   || G_a - G_b ||_F
    adain dist  || mu_a - mu_b ||_2 + || sigma_a - sigma_b ||_2
with per-channel means and population standard deviations.  Spatial sizes may
differ between the two maps; channel counts must match.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChannelMismatch, EmptyFeature, EmptyViewList
from .features import FeatureBank, extract_features
from .image import ImageGrid


def gram(feature: np.ndarray) -> np.ndarray:
    """Channel-correlation matrix normalized by C*H*W."""
    f = np.asarray(feature, dtype=np.float64)
    if f.ndim != 3 or f.shape[1] * f.shape[2] < 1:
        raise EmptyFeature(f"feature map must be (C,H,W) with pixels, got {f.shape}")
    c = f.shape[0]
    flat = f.reshape(c, -1)
    g = np.einsum("ip,jp->ij", flat, flat, optimize=False)
    return g / float(f.size)


def channel_mean_std(feature: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    f = np.asarray(feature, dtype=np.float64)
    flat = f.reshape(f.shape[0], -1)
    mu = flat.mean(axis=1)
    sigma = np.sqrt(((flat - mu[:, None]) ** 2).mean(axis=1))
    return mu, sigma


def gram_distance(f_ref: np.ndarray, f_gen: np.ndarray) -> float:
    if f_ref.shape[0] != f_gen.shape[0]:
        raise ChannelMismatch(
            f"channel counts differ: {f_ref.shape[0]} vs {f_gen.shape[0]}"
        )
    diff = gram(f_ref) - gram(f_gen)
    return float(np.sqrt(np.sum(diff * diff)))


def adain_distance(f_ref: np.ndarray, f_gen: np.ndarray) -> float:
    if f_ref.shape[0] != f_gen.shape[0]:
        raise ChannelMismatch(
            f"channel counts differ: {f_ref.shape[0]} vs {f_gen.shape[0]}"
        )
    mu_r, sd_r = channel_mean_std(f_ref)
    mu_g, sd_g = channel_mean_std(f_gen)
    return float(np.sqrt(np.sum((mu_r - mu_g) ** 2))
                 + np.sqrt(np.sum((sd_r - sd_g) ** 2)))


@dataclass(frozen=True)
class StyleDistanceReport:
    """Per-level distances plus their arithmetic means."""

    gram: tuple[float, ...]
    adain: tuple[float, ...]
    bank_seed: int

    @property
    def mean_gram(self) -> float:
        return float(np.mean(self.gram))

    @property
    def mean_adain(self) -> float:
        return float(np.mean(self.adain))

    def to_dict(self) -> dict:
        return {
            "gram": list(self.gram),
            "adain": list(self.adain),
            "mean_gram": self.mean_gram,
            "mean_adain": self.mean_adain,
        }


def style_distance(a: ImageGrid, b: ImageGrid, bank: FeatureBank) -> StyleDistanceReport:
    """Level-wise gram and adain distances between two images."""
    fa = extract_features(a, bank)
    fb = extract_features(b, bank)
    return StyleDistanceReport(
        gram=tuple(gram_distance(x, y) for x, y in zip(fa, fb)),
        adain=tuple(adain_distance(x, y) for x, y in zip(fa, fb)),
        bank_seed=bank.seed,
    )


def multi_view_style_score(views: list[ImageGrid], reference: ImageGrid,
                           bank: FeatureBank) -> StyleDistanceReport:
    """Elementwise mean of the per-view reports against one reference."""
    if not views:
        raise EmptyViewList("need at least one view")
    reports = [style_distance(v, reference, bank) for v in views]
    grams = np.mean([r.gram for r in reports], axis=0)
    adains = np.mean([r.adain for r in reports], axis=0)
    return StyleDistanceReport(gram=tuple(float(g) for g in grams),
                               adain=tuple(float(a) for a in adains),
                               bank_seed=bank.seed)
