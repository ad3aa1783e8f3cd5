import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stylebake.errors import DimensionMismatch, NonDivisibleDimensions
from stylebake.image import ImageGrid, multiset_channel_stats
from stylebake.jigsaw import (JigsawConfig, MaskPattern, PatchPermutation,
                              apply_mask, jigsaw, make_mask, make_permutation,
                              partition, shuffle, unshuffle)
from conftest import random_image


def brute_force_shuffle(image: ImageGrid, perm: PatchPermutation, s: int) -> np.ndarray:
    """Independent oracle: relocate every pixel one by one."""
    out = np.empty_like(image.data)
    q = image.width // s
    for dest in range(perm.mapping.size):
        src = perm.mapping[dest]
        di, dj = divmod(dest, q)
        si, sj = divmod(int(src), q)
        for y in range(s):
            for x in range(s):
                out[:, di * s + y, dj * s + x] = image.data[:, si * s + y, sj * s + x]
    return out


class TestPartition:
    def test_512_s64(self):
        img = ImageGrid.zeros(3, 512, 512)
        assert partition(img, 64) == (8, 8)

    def test_single_patch(self):
        img = ImageGrid.zeros(3, 512, 512)
        assert partition(img, 512) == (1, 1)

    def test_non_divisible(self):
        img = ImageGrid.zeros(3, 512, 512)
        with pytest.raises(NonDivisibleDimensions):
            partition(img, 100)


class TestMakePermutation:
    def test_single_cell_identity(self):
        assert np.array_equal(make_permutation(1, 1, 12345).mapping, [0])

    def test_deterministic(self):
        a = make_permutation(2, 2, 7)
        b = make_permutation(2, 2, 7)
        assert np.array_equal(a.mapping, b.mapping)

    def test_uniformity_chi_squared(self):
        # destination distribution of every source cell over many seeds
        cells = 16  # 4x4 keeps the test fast; acceptance covers 8x8
        trials = 4000
        counts = np.zeros((cells, cells))
        for seed in range(trials):
            m = make_permutation(4, 4, seed).mapping
            counts[np.arange(cells), m] += 1
        expected = trials / cells
        chi2 = ((counts - expected) ** 2 / expected).sum()
        dof = cells * (cells - 1)
        # mean dof, sd sqrt(2*dof); allow 5 sigma
        assert chi2 < dof + 5 * np.sqrt(2 * dof)


class TestShuffle:
    def test_identity_permutation(self, image_64):
        out = shuffle(image_64, PatchPermutation.identity(4, 4), 16)
        assert np.array_equal(out.data, image_64.data)

    def test_exact_statistics(self, image_64):
        perm = make_permutation(8, 8, 3)
        out = shuffle(image_64, perm, 8)
        m1, v1 = multiset_channel_stats(image_64)
        m2, v2 = multiset_channel_stats(out)
        assert np.array_equal(m1, m2) and np.array_equal(v1, v2)

    def test_swap_cells_explicit_layout(self):
        img = ImageGrid((np.arange(16, dtype=np.float64) / 15).reshape(1, 4, 4))
        perm = PatchPermutation(2, 2, np.array([3, 1, 2, 0]))  # swap cells 0 and 3
        out = shuffle(img, perm, 2)
        expected = img.data.copy()
        expected[0, 0:2, 0:2] = img.data[0, 2:4, 2:4]
        expected[0, 2:4, 2:4] = img.data[0, 0:2, 0:2]
        assert np.array_equal(out.data, expected)
        assert np.array_equal(out.data, brute_force_shuffle(img, perm, 2))

    def test_matches_brute_force_oracle(self):
        img = random_image(21, 3, 12, 18)
        perm = make_permutation(2, 3, 5)
        out = shuffle(img, perm, 6)
        assert np.array_equal(out.data, brute_force_shuffle(img, perm, 6))

    def test_dimension_mismatch(self, image_64):
        with pytest.raises(DimensionMismatch):
            shuffle(image_64, PatchPermutation.identity(2, 2), 16)


class TestMask:
    def test_p_zero_all_visible(self):
        assert make_mask(8, 8, 0.0, 1).visible.all()

    def test_p_one_none_visible(self):
        assert not make_mask(8, 8, 1.0, 1).visible.any()

    def test_masked_count_monte_carlo(self):
        counts = [64 - make_mask(8, 8, 0.25, seed).visible.sum() for seed in range(10_000)]
        mean = np.mean(counts)
        sigma = np.sqrt(64 * 0.25 * 0.75 / 10_000)
        assert abs(mean - 16.0) <= 3 * sigma

    def test_apply_all_visible_identity(self, image_64):
        mask = MaskPattern(4, 4, np.ones(16, dtype=bool))
        out = apply_mask(image_64, mask, (0.5, 0.5, 0.5), 16)
        assert np.array_equal(out.data, image_64.data)

    def test_apply_all_masked_constant(self, image_64):
        mask = MaskPattern(4, 4, np.zeros(16, dtype=bool))
        mu = (0.25, 0.5, 0.75)
        out = apply_mask(image_64, mask, mu, 16)
        for c in range(3):
            assert np.all(out.data[c] == mu[c])

    def test_one_masked_cell_pixel_count(self, image_64):
        visible = np.ones(16, dtype=bool)
        visible[5] = False
        out = apply_mask(image_64, MaskPattern(4, 4, visible), (0.5, 0.5, 0.5), 16)
        changed = out.data != image_64.data
        # exactly the 16x16 cell is replaced (oracle: count changed pixels)
        assert changed.any(axis=0).sum() == 16 * 16
        cell = out.data[:, 16:32, 16:32]
        assert np.all(cell == 0.5)


class TestJigsaw:
    def test_infer_preserves_multiset(self, image_64):
        cfg = JigsawConfig(patch_size=16, mask_ratio=0.9, seed=5)
        out = jigsaw(image_64, cfg, mode="infer")
        for c in range(3):
            assert np.array_equal(np.sort(out.image.data[c].ravel()),
                                  np.sort(image_64.data[c].ravel()))

    def test_infer_ignores_mask_ratio(self, image_64):
        a = jigsaw(image_64, JigsawConfig(patch_size=16, mask_ratio=0.0, seed=5), "infer")
        b = jigsaw(image_64, JigsawConfig(patch_size=16, mask_ratio=0.9, seed=5), "infer")
        assert np.array_equal(a.image.data, b.image.data)

    def test_train_p0_equals_shuffle(self, image_64):
        cfg = JigsawConfig(patch_size=16, mask_ratio=0.0, seed=9)
        out = jigsaw(image_64, cfg, mode="train")
        direct = shuffle(image_64, out.permutation, 16)
        assert np.array_equal(out.image.data, direct.data)

    def test_train_reproducible(self):
        img = random_image(77, 3, 512, 512)
        cfg = JigsawConfig(patch_size=64, mask_ratio=0.25, seed=123)
        a = jigsaw(img, cfg, "train")
        b = jigsaw(img, cfg, "train")
        assert np.array_equal(a.image.data, b.image.data)
        assert np.array_equal(a.permutation.mapping, b.permutation.mapping)
        assert np.array_equal(a.mask.visible, b.mask.visible)

    def test_bad_mode(self, image_64):
        with pytest.raises(ValueError):
            jigsaw(image_64, JigsawConfig(patch_size=16), mode="test")


class TestUnshuffle:
    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), patch=st.sampled_from([8, 16, 32]))
    def test_round_trip_property(self, seed, patch):
        img = random_image(seed % 50, 3, 64, 64)
        perm = make_permutation(64 // patch, 64 // patch, seed)
        assert np.array_equal(unshuffle(shuffle(img, perm, patch), perm, patch).data,
                              img.data)

    def test_identity(self, image_64):
        perm = PatchPermutation.identity(4, 4)
        assert np.array_equal(unshuffle(image_64, perm, 16).data, image_64.data)

    def test_composition_oracle(self, image_64):
        s1 = make_permutation(4, 4, 1)
        s2 = make_permutation(4, 4, 2)
        composed = shuffle(shuffle(image_64, s1, 16), s2, 16)
        # group law: shuffling by s1 then s2 equals one shuffle by s1[s2]
        fused = PatchPermutation(4, 4, s1.mapping[s2.mapping])
        assert np.array_equal(composed.data, shuffle(image_64, fused, 16).data)
        back = unshuffle(unshuffle(composed, s2, 16), s1, 16)
        assert np.array_equal(back.data, image_64.data)
