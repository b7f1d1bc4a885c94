"""Validity masks: cloud, dark/missing, and S/V-range exclusion, plus the
median / dilation cleanup filters and mask combination.

A mask bit of True means the pixel participates in further analysis.
Window operations clip to in-bounds cells at image borders; no padding
values are invented.
"""

from dataclasses import dataclass

import numpy as np

from .raster import HsvRaster, Raster


@dataclass(frozen=True, eq=False)
class PixelMask:
    """W x H boolean grid; True = valid (analyzed) pixel."""

    width: int
    height: int
    bits: np.ndarray

    def __post_init__(self):
        bits = np.ascontiguousarray(self.bits, dtype=bool)
        if bits.ndim != 1 or bits.size != self.width * self.height:
            raise ValueError(
                f"bits length {bits.size} != width*height = {self.width * self.height}"
            )
        object.__setattr__(self, "bits", bits)

    def __eq__(self, other):
        if not isinstance(other, PixelMask):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.bits, other.bits)
        )

    def to_array(self) -> np.ndarray:
        return self.bits.reshape(self.height, self.width)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "PixelMask":
        a = np.asarray(arr, dtype=bool)
        if a.ndim != 2:
            raise ValueError(f"expected 2-D boolean array, got shape {a.shape}")
        return cls(a.shape[1], a.shape[0], a.reshape(-1))

    @classmethod
    def full(cls, width: int, height: int, valid: bool = True) -> "PixelMask":
        return cls(width, height, np.full(width * height, valid, dtype=bool))

    def valid_fraction(self) -> float:
        return float(self.bits.mean())


@dataclass(frozen=True)
class MaskConfig:
    """Thresholds for all masking stages.

    The source method publishes no numeric thresholds; every default here
    is ours and is meant to be tuned per dataset.
    """

    window: int = 5
    uniform_sigma_max: float = 4.0
    white_floor: int = 200
    cloud_factor: float = 0.92
    dark_ceiling: int = 15
    s_lo: float = 0.02
    s_hi: float = 0.98
    v_lo: float = 0.08
    v_hi: float = 0.97
    median_k: int = 5
    dilate_k: int = 3

    def __post_init__(self):
        for name in ("window", "median_k", "dilate_k"):
            k = getattr(self, name)
            if k < 1 or k % 2 == 0:
                raise ValueError(f"{name} must be odd and >= 1, got {k}")
        if not (0 <= self.s_lo < self.s_hi <= 1):
            raise ValueError(f"need 0 <= s_lo < s_hi <= 1, got [{self.s_lo}, {self.s_hi}]")
        if not (0 <= self.v_lo < self.v_hi <= 1):
            raise ValueError(f"need 0 <= v_lo < v_hi <= 1, got [{self.v_lo}, {self.v_hi}]")
        if not (0 < self.cloud_factor <= 1):
            raise ValueError(f"cloud_factor must lie in (0, 1], got {self.cloud_factor}")


def _integral(a: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + 1, a.shape[1] + 1), dtype=np.float64)
    np.cumsum(np.cumsum(a, axis=0), axis=1, out=out[1:, 1:])
    return out


def _box_sum(a: np.ndarray, k: int) -> np.ndarray:
    """Sum over each k x k window clipped to the array bounds."""
    h, w = a.shape
    r = k // 2
    integ = _integral(a.astype(np.float64))
    ys = np.arange(h)
    xs = np.arange(w)
    y0 = np.clip(ys - r, 0, h)
    y1 = np.clip(ys + r + 1, 0, h)
    x0 = np.clip(xs - r, 0, w)
    x1 = np.clip(xs + r + 1, 0, w)
    return (
        integ[np.ix_(y1, x1)]
        - integ[np.ix_(y0, x1)]
        - integ[np.ix_(y1, x0)]
        + integ[np.ix_(y0, x0)]
    )


def _window_counts(h: int, w: int, k: int) -> np.ndarray:
    r = k // 2
    ys = np.arange(h)
    xs = np.arange(w)
    ny = np.clip(ys + r + 1, 0, h) - np.clip(ys - r, 0, h)
    nx = np.clip(xs + r + 1, 0, w) - np.clip(xs - r, 0, w)
    return np.outer(ny, nx).astype(np.float64)


def _require_gray(gray: Raster, op: str):
    if gray.channels != 1:
        raise ValueError(f"{op} requires a gray raster, got {gray.channels} channels")


def white_reference(gray: Raster, cfg: MaskConfig) -> float | None:
    """Mean intensity over monotonically white pixels, or None.

    A pixel qualifies when the population standard deviation of its
    window-local neighbourhood (clipped at borders) is at most
    uniform_sigma_max and its own value is at least white_floor.
    """
    _require_gray(gray, "white_reference")
    g = gray.to_array().astype(np.float64)
    n = _window_counts(gray.height, gray.width, cfg.window)
    mean = _box_sum(g, cfg.window) / n
    var = np.maximum(_box_sum(g * g, cfg.window) / n - mean * mean, 0.0)
    qualify = (np.sqrt(var) <= cfg.uniform_sigma_max) & (g >= cfg.white_floor)
    if not qualify.any():
        return None
    return float(g[qualify].mean())


def cloud_mask(gray: Raster, cfg: MaskConfig) -> PixelMask:
    """Invalidate pixels at least cloud_factor * white_reference bright;
    all-valid when no white reference exists."""
    _require_gray(gray, "cloud_mask")
    ref = white_reference(gray, cfg)
    if ref is None:
        return PixelMask.full(gray.width, gray.height, True)
    g = gray.to_array().astype(np.float64)
    return PixelMask.from_array(g < cfg.cloud_factor * ref)


def dark_missing_mask(gray: Raster, cfg: MaskConfig) -> PixelMask:
    """Invalidate underexposed / missing-data pixels (value <= dark_ceiling)."""
    _require_gray(gray, "dark_missing_mask")
    return PixelMask.from_array(gray.to_array() > cfg.dark_ceiling)


def sv_mask(hsv: HsvRaster, cfg: MaskConfig) -> PixelMask:
    """Valid iff saturation in [s_lo, s_hi] and value in [v_lo, v_hi]."""
    ok = (
        (hsv.s >= cfg.s_lo)
        & (hsv.s <= cfg.s_hi)
        & (hsv.v >= cfg.v_lo)
        & (hsv.v <= cfg.v_hi)
    )
    return PixelMask(hsv.width, hsv.height, ok)


def _require_odd(k: int, op: str):
    if k < 1 or k % 2 == 0:
        raise ValueError(f"{op} window must be odd and >= 1, got {k}")


def median_filter(m: PixelMask, k: int) -> PixelMask:
    """Boolean median: valid iff valid cells form a strict majority of the
    in-bounds window; ties resolve to invalid."""
    _require_odd(k, "median_filter")
    bits = m.to_array()
    valid = _box_sum(bits, k)
    cells = _window_counts(m.height, m.width, k)
    return PixelMask.from_array(2.0 * valid > cells)


def dilate_invalid(m: PixelMask, k: int) -> PixelMask:
    """Grow the invalid region: invalid iff any window cell is invalid."""
    _require_odd(k, "dilate_invalid")
    invalid = _box_sum(~m.to_array(), k)
    return PixelMask.from_array(invalid < 0.5)


def intersect(masks: list[PixelMask]) -> PixelMask:
    """Valid iff valid in every input mask."""
    if not masks:
        raise ValueError("intersect requires at least one mask")
    first = masks[0]
    bits = first.bits.copy()
    for m in masks[1:]:
        if (m.width, m.height) != (first.width, first.height):
            raise ValueError(
                f"mask dimensions differ: {m.width}x{m.height} vs {first.width}x{first.height}"
            )
        bits &= m.bits
    return PixelMask(first.width, first.height, bits)


def downscale_mask(m: PixelMask, out_w: int, out_h: int) -> PixelMask:
    """Majority vote over the covered box; exact ties become invalid."""
    from .raster import box_weights

    if out_w < 1 or out_h < 1:
        raise ValueError(f"target dimensions must be >= 1, got {out_w}x{out_h}")
    wy = box_weights(m.height, out_h)
    wx = box_weights(m.width, out_w)
    area = np.outer(wy.sum(axis=1), wx.sum(axis=1))
    frac = wy @ m.to_array().astype(np.float64) @ wx.T / area
    return PixelMask.from_array(frac > 0.5)


def mask_to_raster(m: PixelMask) -> Raster:
    """Inspection dump: P5-compatible gray raster, 255 = valid, 0 = invalid."""
    return Raster.from_array(np.where(m.to_array(), 255, 0).astype(np.uint8))


def raster_to_mask(r: Raster) -> PixelMask:
    """Inverse of mask_to_raster: valid iff value >= 128."""
    if r.channels != 1:
        raise ValueError("mask rasters must be gray")
    return PixelMask.from_array(r.to_array() >= 128)
