import numpy as np
import pytest

from stylebake.errors import ChannelMismatch, EmptyFeature, EmptyViewList
from stylebake.features import FeatureBank, extract_features
from stylebake.image import ImageGrid
from stylebake.jigsaw import JigsawConfig, jigsaw
from stylebake.metrics import (StyleDistanceReport, adain_distance, gram,
                               gram_distance, multi_view_style_score,
                               style_distance)
from stylebake.primitives import checkerboard, smooth_noise, stripes
from stylebake.rng import SeededRng

from conftest import random_image


@pytest.fixture(scope="module")
def bank():
    return FeatureBank(seed=0)


class TestExtract:
    def test_zero_image_zero_features(self, bank):
        feats = extract_features(ImageGrid.zeros(3, 64, 64), bank)
        assert all(np.all(f == 0.0) for f in feats)

    def test_level0_is_input(self, bank):
        img = random_image(2, 3, 64, 64)
        feats = extract_features(img, bank)
        assert np.array_equal(feats[0], img.data)

    def test_shapes_halve(self, bank):
        feats = extract_features(ImageGrid.zeros(3, 128, 64), bank)
        assert [f.shape for f in feats] == [
            (3, 128, 64), (16, 64, 32), (32, 32, 16), (64, 16, 8), (128, 8, 4)]

    def test_deterministic_across_bank_instances(self):
        img = random_image(3, 3, 32, 32)
        f1 = extract_features(img, FeatureBank(seed=9))
        f2 = extract_features(img, FeatureBank(seed=9))
        assert all(np.array_equal(a, b) for a, b in zip(f1, f2))

    def test_channel_mismatch(self, bank):
        with pytest.raises(ChannelMismatch):
            extract_features(ImageGrid.zeros(1, 64, 64), bank)


class TestGram:
    def test_constant_image_closed_form(self):
        v = np.array([0.2, 0.5, 0.9])
        img = ImageGrid.full(3, 8, 8, v)
        g = gram(img.data)
        assert np.allclose(g, np.outer(v, v) / 3.0, atol=1e-15)

    def test_zero_feature(self):
        assert np.all(gram(np.zeros((4, 3, 3))) == 0.0)

    def test_matches_brute_force(self):
        f = np.asarray(SeededRng(4).normal((2, 2, 2)))
        g = gram(f)
        expected = np.zeros((2, 2))
        for i in range(2):
            for j in range(2):
                for y in range(2):
                    for x in range(2):
                        expected[i, j] += f[i, y, x] * f[j, y, x]
        expected /= f.size
        assert np.allclose(g, expected, atol=1e-14)

    def test_symmetric_psd(self):
        f = np.asarray(SeededRng(8).normal((6, 5, 7)))
        g = gram(f)
        assert np.array_equal(g, g.T)
        eigvals = np.linalg.eigvalsh(g)
        assert eigvals.min() >= -1e-9 * np.linalg.norm(g)

    def test_empty_feature(self):
        with pytest.raises(EmptyFeature):
            gram(np.zeros((3, 0, 4)))


class TestDistances:
    def test_identical_zero(self):
        f = np.asarray(SeededRng(1).normal((4, 6, 6)))
        assert gram_distance(f, f) == 0.0
        assert adain_distance(f, f) == 0.0

    def test_symmetry(self):
        a = np.asarray(SeededRng(2).normal((4, 6, 6)))
        b = np.asarray(SeededRng(3).normal((4, 6, 6)))
        assert gram_distance(a, b) == gram_distance(b, a)
        assert adain_distance(a, b) == adain_distance(b, a)

    def test_gram_distance_brute_force(self):
        a = np.asarray(SeededRng(5).normal((3, 4, 4)))
        b = np.asarray(SeededRng(6).normal((3, 4, 4)))
        expected = np.sqrt(((gram(a) - gram(b)) ** 2).sum())
        assert abs(gram_distance(a, b) - expected) < 1e-14

    def test_adain_constant_shift(self):
        f = np.asarray(SeededRng(7).normal((5, 8, 8)))
        c = 0.37
        d = adain_distance(f, f + c)
        assert abs(d - c * np.sqrt(5)) < 1e-9

    def test_adain_brute_force(self):
        a = np.asarray(SeededRng(8).normal((3, 4, 5)))
        b = np.asarray(SeededRng(9).normal((3, 6, 2)))  # different spatial size
        mu = lambda f: f.reshape(3, -1).mean(1)
        sd = lambda f: f.reshape(3, -1).std(1)
        expected = (np.linalg.norm(mu(a) - mu(b)) + np.linalg.norm(sd(a) - sd(b)))
        assert abs(adain_distance(a, b) - expected) < 1e-12

    def test_channel_mismatch(self):
        with pytest.raises(ChannelMismatch):
            gram_distance(np.zeros((3, 2, 2)), np.zeros((4, 2, 2)))


class TestStyleDistance:
    def test_self_distance_zero(self, bank):
        img = random_image(10, 3, 64, 64)
        rep = style_distance(img, img, bank)
        assert all(g == 0.0 for g in rep.gram)
        assert all(a == 0.0 for a in rep.adain)

    def test_level0_shuffle_invariance(self, bank):
        img = random_image(11, 3, 64, 64)
        out = jigsaw(img, JigsawConfig(patch_size=8, seed=3), "infer")
        rep = style_distance(img, out.image, bank)
        assert rep.gram[0] <= 1e-12
        assert rep.adain[0] <= 1e-12

    def test_adain_level0_pixel_permutation_invariance(self):
        img = random_image(15, 3, 32, 32)
        perm = SeededRng(16).permutation(32 * 32)
        permuted = img.data.reshape(3, -1)[:, perm].reshape(3, 32, 32)
        assert adain_distance(img.data, permuted) <= 1e-12

    def test_distinct_textures_positive(self, bank):
        rep = style_distance(checkerboard(64, 4), smooth_noise(64, seed=3), bank)
        assert rep.mean_gram > 0.0 and rep.mean_adain > 0.0

    def test_shuffle_closer_than_unrelated_deeper_levels(self, bank):
        img = stripes(64, period=16)
        shuffled = jigsaw(img, JigsawConfig(patch_size=16, seed=1), "infer").image
        unrelated = smooth_noise(64, seed=8)
        r_sh = style_distance(img, shuffled, bank)
        r_un = style_distance(img, unrelated, bank)
        assert np.mean(r_sh.gram[1:]) < np.mean(r_un.gram[1:])
        assert np.mean(r_sh.adain[1:]) < np.mean(r_un.adain[1:])


class TestMultiView:
    def test_single_view_equals_style_distance(self, bank):
        a, b = random_image(12, 3, 32, 32), random_image(13, 3, 32, 32)
        single = multi_view_style_score([a], b, bank)
        direct = style_distance(a, b, bank)
        assert single.gram == direct.gram
        assert single.adain == direct.adain

    def test_identical_views_zero(self, bank):
        x = random_image(14, 3, 32, 32)
        rep = multi_view_style_score([x, x], x, bank)
        assert rep.mean_gram == 0.0 and rep.mean_adain == 0.0

    def test_mean_of_reports_oracle(self, bank):
        views = [random_image(20 + i, 3, 32, 32) for i in range(6)]
        ref = random_image(30, 3, 32, 32)
        combined = multi_view_style_score(views, ref, bank)
        individual = [style_distance(v, ref, bank) for v in views]
        assert np.allclose(combined.gram, np.mean([r.gram for r in individual], axis=0))
        assert np.allclose(combined.adain, np.mean([r.adain for r in individual], axis=0))

    def test_empty_view_list(self, bank):
        with pytest.raises(EmptyViewList):
            multi_view_style_score([], random_image(1), bank)


def test_report_aggregate_is_mean():
    rep = StyleDistanceReport(gram=(1.0, 2.0, 3.0, 4.0, 5.0),
                              adain=(0.0, 0.0, 0.0, 0.0, 10.0), bank_seed=0)
    assert rep.mean_gram == 3.0
    assert rep.mean_adain == 2.0
