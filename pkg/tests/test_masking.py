import numpy as np
import pytest

from floodkit.masking import (
    MaskConfig,
    PixelMask,
    cloud_mask,
    dark_missing_mask,
    dilate_invalid,
    downscale_mask,
    intersect,
    mask_to_raster,
    median_filter,
    raster_to_mask,
    sv_mask,
    white_reference,
)
from floodkit.raster import HsvRaster, Raster, to_hsv

CFG = MaskConfig()


def gray(arr):
    return Raster.from_array(np.asarray(arr, dtype=np.uint8))


def constant(value, size=16):
    return gray(np.full((size, size), value))


def block_frame_fixture():
    """250-valued 16x16 block inside a 0-valued 64x64 frame."""
    arr = np.zeros((64, 64), dtype=np.uint8)
    arr[24:40, 24:40] = 250
    return gray(arr)


def brute_force_white_reference(arr, cfg):
    """Oracle: explicit per-pixel window scan."""
    h, w = arr.shape
    r = cfg.window // 2
    vals = []
    for y in range(h):
        for x in range(w):
            win = arr[max(0, y - r) : y + r + 1, max(0, x - r) : x + r + 1].astype(float)
            if win.std() <= cfg.uniform_sigma_max and arr[y, x] >= cfg.white_floor:
                vals.append(float(arr[y, x]))
    return sum(vals) / len(vals) if vals else None


class TestWhiteReference:
    def test_constant_white(self):
        assert white_reference(constant(255), CFG) == 255.0

    def test_below_floor_absent(self):
        assert white_reference(constant(100), CFG) is None

    def test_block_frame_matches_brute_force(self):
        img = block_frame_fixture()
        expected = brute_force_white_reference(img.to_array(), CFG)
        got = white_reference(img, CFG)
        assert expected == 250.0  # only interior block pixels qualify
        assert got == pytest.approx(expected, abs=1e-9)

    def test_random_images_match_brute_force(self):
        rng = np.random.default_rng(29)
        for _ in range(5):
            arr = rng.integers(0, 256, (12, 12), dtype=np.uint8)
            arr[rng.integers(0, 12), rng.integers(0, 12)] = 255
            expected = brute_force_white_reference(arr, CFG)
            got = white_reference(gray(arr), CFG)
            if expected is None:
                assert got is None
            else:
                assert got == pytest.approx(expected, abs=1e-9)


class TestCloudMask:
    def test_constant_white_all_invalid(self):
        assert not cloud_mask(constant(255), CFG).bits.any()

    def test_no_reference_all_valid(self):
        assert cloud_mask(constant(100), CFG).bits.all()

    def test_block_frame_thresholded(self):
        # reference 250, factor 0.92 -> pixels >= 230 invalid
        m = cloud_mask(block_frame_fixture(), CFG).to_array()
        expected_invalid = block_frame_fixture().to_array() >= 0.92 * 250
        assert np.array_equal(~m, expected_invalid)
        assert (~m).sum() == 16 * 16


class TestDarkMissingMask:
    def test_constant_zero_invalid(self):
        assert not dark_missing_mask(constant(0), CFG).bits.any()

    def test_mid_gray_valid(self):
        assert dark_missing_mask(constant(128), CFG).bits.all()

    def test_ceiling_boundary(self):
        m = dark_missing_mask(gray([[0, 15, 16, 255]]), CFG)
        assert list(m.bits) == [False, False, True, True]


class TestSvMask:
    def make_hsv(self, s, v):
        return HsvRaster(1, 1, np.array([0.0]), np.array([s]), np.array([v]))

    def test_interior_valid(self):
        assert sv_mask(self.make_hsv(0.5, 0.5), CFG).bits[0]

    def test_low_s_invalid(self):
        assert not sv_mask(self.make_hsv(0.0, 0.5), CFG).bits[0]

    def test_high_v_invalid(self):
        assert not sv_mask(self.make_hsv(0.5, 1.0), CFG).bits[0]

    def test_matches_per_pixel_rule_on_random_image(self):
        rng = np.random.default_rng(31)
        arr = rng.integers(0, 256, (9, 9, 3), dtype=np.uint8)
        hsv = to_hsv(Raster.from_array(arr))
        m = sv_mask(hsv, CFG)
        for i in range(81):
            expected = CFG.s_lo <= hsv.s[i] <= CFG.s_hi and CFG.v_lo <= hsv.v[i] <= CFG.v_hi
            assert m.bits[i] == expected


def random_mask(rng, w=12, h=9, p=0.5):
    return PixelMask(w, h, rng.random(w * h) < p)


def brute_force_median(mask, k):
    bits = mask.to_array()
    h, w = bits.shape
    r = k // 2
    out = np.zeros_like(bits)
    for y in range(h):
        for x in range(w):
            win = bits[max(0, y - r) : y + r + 1, max(0, x - r) : x + r + 1]
            valid = int(win.sum())
            out[y, x] = valid > win.size - valid
    return PixelMask.from_array(out)


class TestMedianFilter:
    def test_all_valid_fixed_point(self):
        m = PixelMask.full(5, 5, True)
        assert median_filter(m, 3) == m

    def test_all_invalid_fixed_point(self):
        m = PixelMask.full(5, 5, False)
        assert median_filter(m, 3) == m

    def test_isolated_speck_removed(self):
        bits = np.ones((5, 5), dtype=bool)
        bits[2, 2] = False
        assert median_filter(PixelMask.from_array(bits), 3).bits.all()

    def test_center_row_hand_enumeration(self):
        # center window holds 6 valid vs 3 invalid cells -> valid wins
        bits = np.ones((3, 3), dtype=bool)
        bits[1, :] = False
        out = median_filter(PixelMask.from_array(bits), 3)
        assert out.to_array()[1, 1]

    def test_tie_resolves_invalid(self):
        # corner window of a 2x2 checkerboard has 4 cells, 2 valid: tie
        bits = np.array([[True, False], [False, True]])
        out = median_filter(PixelMask.from_array(bits), 3)
        assert not out.bits.any()

    def test_matches_brute_force(self):
        rng = np.random.default_rng(37)
        for _ in range(20):
            m = random_mask(rng)
            for k in (1, 3, 5):
                assert median_filter(m, k) == brute_force_median(m, k)

    def test_even_k_rejected(self):
        with pytest.raises(ValueError):
            median_filter(PixelMask.full(3, 3), 2)


class TestDilateInvalid:
    def test_all_valid_unchanged(self):
        m = PixelMask.full(5, 5, True)
        assert dilate_invalid(m, 3) == m

    def test_single_invalid_grows_to_block(self):
        bits = np.ones((5, 5), dtype=bool)
        bits[2, 2] = False
        out = dilate_invalid(PixelMask.from_array(bits), 3).to_array()
        expected = np.ones((5, 5), dtype=bool)
        expected[1:4, 1:4] = False
        assert np.array_equal(out, expected)

    def test_extensive_on_random_masks(self):
        rng = np.random.default_rng(41)
        for _ in range(50):
            m = random_mask(rng)
            out = dilate_invalid(m, 3)
            assert np.all(~m.bits | out.bits | ~out.bits)
            assert np.all((~m.bits) <= (~out.bits))  # invalid set only grows

    def test_even_k_rejected(self):
        with pytest.raises(ValueError):
            dilate_invalid(PixelMask.full(3, 3), 4)


class TestIntersect:
    def test_identity(self):
        a = PixelMask.full(4, 4, True)
        assert intersect([a, PixelMask.full(4, 4, True)]) == a

    def test_absorbing(self):
        rng = np.random.default_rng(43)
        m = random_mask(rng, 4, 4)
        out = intersect([m, PixelMask.full(4, 4, False)])
        assert not out.bits.any()

    def test_idempotent(self):
        rng = np.random.default_rng(47)
        m = random_mask(rng)
        assert intersect([m, m]) == m

    def test_commutative_associative(self):
        rng = np.random.default_rng(53)
        for _ in range(25):
            a, b, c = (random_mask(rng) for _ in range(3))
            assert intersect([a, b]) == intersect([b, a])
            assert intersect([intersect([a, b]), c]) == intersect([a, intersect([b, c])])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            intersect([PixelMask.full(3, 3), PixelMask.full(4, 3)])


class TestDownscaleMask:
    def test_majority_valid(self):
        bits = np.array([[True, True], [True, False]])
        out = downscale_mask(PixelMask.from_array(bits), 1, 1)
        assert out.bits[0]  # 3 of 4 valid

    def test_tie_invalid(self):
        bits = np.array([[True, True], [False, False]])
        out = downscale_mask(PixelMask.from_array(bits), 1, 1)
        assert not out.bits[0]

    def test_constant_preserved(self):
        m = PixelMask.full(8, 8, True)
        assert downscale_mask(m, 4, 4).bits.all()


class TestMaskRasterDump:
    def test_round_trip(self):
        rng = np.random.default_rng(59)
        m = random_mask(rng)
        assert raster_to_mask(mask_to_raster(m)) == m

    def test_values_are_0_and_255(self):
        rng = np.random.default_rng(61)
        dumped = mask_to_raster(random_mask(rng))
        assert set(np.unique(dumped.samples)) <= {0, 255}


class TestMaskConfig:
    def test_even_window_rejected(self):
        with pytest.raises(ValueError):
            MaskConfig(window=4)

    def test_sv_band_order_enforced(self):
        with pytest.raises(ValueError):
            MaskConfig(s_lo=0.9, s_hi=0.1)
