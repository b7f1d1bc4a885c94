import math

import numpy as np
import pytest

from floodkit.masking import PixelMask
from floodkit.raster import Raster
from floodkit.texture import (
    DEFAULT_OFFSETS,
    SENTINEL,
    FeatureVector,
    Glcm,
    QuantizedGrid,
    glcm,
    haralick,
    pair_delta,
    quantize,
)


def brute_force_glcm(q, offsets):
    """Oracle: explicit double loop over pixels and offsets."""
    grid = q.to_array()
    g = q.levels
    mat = np.zeros((g, g))
    pairs = 0
    for dx, dy in offsets:
        for y in range(q.height):
            for x in range(q.width):
                y2, x2 = y + dy, x + dx
                if not (0 <= y2 < q.height and 0 <= x2 < q.width):
                    continue
                a, b = grid[y, x], grid[y2, x2]
                if a == SENTINEL or b == SENTINEL:
                    continue
                mat[a, b] += 1
                mat[b, a] += 1
                pairs += 1
    if pairs:
        mat /= mat.sum()
    return mat, pairs


def random_grid(rng, w=8, h=8, levels=16, mask_p=0.3):
    codes = rng.integers(0, levels, w * h).astype(np.int32)
    codes[rng.random(w * h) < mask_p] = SENTINEL
    return QuantizedGrid(w, h, levels, codes)


class TestQuantize:
    def gray(self, values):
        values = np.asarray(values, dtype=np.uint8)
        return Raster(values.size, 1, 1, values)

    def test_edges_and_midpoint(self):
        r = self.gray([0, 255, 128])
        q = quantize(r, PixelMask.full(3, 1), levels=16)
        assert list(q.codes) == [0, 15, 8]

    def test_masked_pixels_get_sentinel(self):
        r = self.gray([10, 20])
        mask = PixelMask(2, 1, np.array([True, False]))
        q = quantize(r, mask, levels=4)
        assert q.codes[1] == SENTINEL

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            quantize(self.gray([1, 2]), PixelMask.full(3, 1), levels=4)

    def test_codes_cover_exact_bins(self):
        r = self.gray(range(256))
        q = quantize(r, PixelMask.full(256, 1), levels=16)
        values = np.arange(256)
        assert np.array_equal(q.codes, values * 16 // 256)


class TestGlcm:
    def test_single_pair_symmetric(self):
        q = QuantizedGrid(2, 1, 16, np.array([3, 5], dtype=np.int32))
        g = glcm(q, offsets=[(1, 0)])
        assert g.pair_count == 1
        assert g.matrix[3, 5] == 0.5
        assert g.matrix[5, 3] == 0.5
        assert g.matrix.sum() == 1.0

    def test_constant_grid_all_mass_diagonal(self):
        q = QuantizedGrid(4, 4, 8, np.full(16, 6, dtype=np.int32))
        g = glcm(q)
        assert g.matrix[6, 6] == 1.0
        assert g.matrix.sum() == 1.0

    def test_fully_masked_zero_matrix(self):
        q = QuantizedGrid(3, 3, 4, np.full(9, SENTINEL, dtype=np.int32))
        g = glcm(q)
        assert g.pair_count == 0
        assert not g.matrix.any()

    def test_matches_brute_force_on_random_grids(self):
        rng = np.random.default_rng(67)
        for _ in range(50):
            q = random_grid(rng)
            got = glcm(q, DEFAULT_OFFSETS)
            mat, pairs = brute_force_glcm(q, DEFAULT_OFFSETS)
            assert got.pair_count == pairs
            assert np.all(np.abs(got.matrix - mat) <= 1e-12)

    def test_symmetry_invariant(self):
        rng = np.random.default_rng(71)
        for _ in range(10):
            g = glcm(random_grid(rng))
            assert np.array_equal(g.matrix, g.matrix.T)

    def test_normalization_invariant(self):
        rng = np.random.default_rng(73)
        for _ in range(10):
            g = glcm(random_grid(rng, mask_p=0.1))
            if g.pair_count > 0:
                assert abs(g.matrix.sum() - 1.0) <= 1e-12

    def test_zero_offset_rejected(self):
        q = QuantizedGrid(2, 2, 4, np.zeros(4, dtype=np.int32))
        with pytest.raises(ValueError):
            glcm(q, offsets=[(0, 0)])

    def test_empty_offsets_rejected(self):
        q = QuantizedGrid(2, 2, 4, np.zeros(4, dtype=np.int32))
        with pytest.raises(ValueError):
            glcm(q, offsets=[])


def glcm_from_matrix(mat, pair_count=100, max_pairs=100):
    return Glcm(mat.shape[0], mat, pair_count, max_pairs)


class TestHaralick:
    def test_diagonal_degenerate(self):
        mat = np.zeros((4, 4))
        mat[2, 2] = 1.0
        fv = haralick(glcm_from_matrix(mat))
        assert fv.get("contrast") == 0.0
        assert fv.get("energy") == 1.0
        assert fv.get("homogeneity") == 1.0
        assert fv.get("entropy") == 0.0
        assert fv.get("correlation") == 1.0

    def test_uniform_two_level_hand_values(self):
        mat = np.full((2, 2), 0.25)
        fv = haralick(glcm_from_matrix(mat))
        assert fv.get("contrast") == pytest.approx(0.5, abs=1e-12)
        assert fv.get("energy") == pytest.approx(0.25, abs=1e-12)
        assert fv.get("homogeneity") == pytest.approx(0.75, abs=1e-12)
        assert fv.get("entropy") == pytest.approx(math.log(4), abs=1e-12)

    def test_empty_evidence_convention(self):
        g = Glcm(4, np.zeros((4, 4)), 0, 0)
        fv = haralick(g)
        assert fv.get("correlation") == 1.0
        assert fv.get("valid_fraction") == 0.0
        assert fv.get("contrast") == 0.0
        assert fv.get("energy") == 0.0

    def test_valid_fraction_from_pair_counts(self):
        mat = np.zeros((2, 2))
        mat[0, 0] = 1.0
        fv = haralick(Glcm(2, mat, 30, 120))
        assert fv.get("valid_fraction") == 0.25

    def test_relabel_invariance(self):
        rng = np.random.default_rng(79)
        raw = rng.random((6, 6))
        mat = (raw + raw.T) / (raw + raw.T).sum()
        flipped = mat[::-1, ::-1]
        a = haralick(glcm_from_matrix(mat))
        b = haralick(glcm_from_matrix(flipped))
        for name in ("contrast", "energy", "homogeneity", "entropy", "correlation"):
            assert a.get(name) == pytest.approx(b.get(name), abs=1e-12)

    def test_transpose_invariance(self):
        rng = np.random.default_rng(83)
        raw = rng.random((5, 5))
        mat = (raw + raw.T) / (raw + raw.T).sum()
        a = haralick(glcm_from_matrix(mat))
        b = haralick(glcm_from_matrix(mat.T))
        assert np.array_equal(a.values, b.values)


class TestPairDelta:
    def fv(self, **kv):
        return FeatureVector(tuple(kv), np.array(list(kv.values()), dtype=float))

    def test_identical_vectors_zero(self):
        a = self.fv(contrast=0.5, valid_fraction=0.8)
        d = pair_delta(a, a)
        assert d.get("contrast_delta") == 0.0
        assert d.get("valid_fraction_delta") == 0.0
        assert d.get("min_valid_fraction") == 0.8

    def test_subtraction(self):
        a = self.fv(contrast=0.5, valid_fraction=1.0)
        b = self.fv(contrast=0.9, valid_fraction=0.6)
        d = pair_delta(a, b)
        assert d.get("contrast_delta") == pytest.approx(0.4)
        assert d.get("min_valid_fraction") == 0.6

    def test_symmetric(self):
        rng = np.random.default_rng(89)
        names = ("a", "b", "valid_fraction")
        u = FeatureVector(names, rng.random(3))
        v = FeatureVector(names, rng.random(3))
        assert pair_delta(u, v) == pair_delta(v, u)

    def test_name_mismatch_rejected(self):
        with pytest.raises(ValueError):
            pair_delta(self.fv(a=1.0), self.fv(b=1.0))

    def test_missing_coverage_defaults_to_full(self):
        d = pair_delta(self.fv(a=1.0), self.fv(a=2.0))
        assert d.get("min_valid_fraction") == 1.0


class TestFeatureVector:
    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError):
            FeatureVector(("a", "a"), np.array([1.0, 2.0]))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            FeatureVector(("a",), np.array([np.nan]))

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            FeatureVector(("a", "b"), np.array([1.0]))
