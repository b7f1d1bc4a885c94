"""Grey-level co-occurrence texture features over masked images and the
sequential-pair difference features built from them.

Conventions: one GLCM is pooled across all offsets (symmetric
accumulation, normalized to sum 1), entropy uses the natural logarithm,
and a fully masked region yields zero features with valid_fraction 0 so
downstream classifiers can learn to abstain instead of erroring.
"""

from dataclasses import dataclass

import numpy as np

from .masking import PixelMask
from .raster import Raster

SENTINEL = -1
DEFAULT_OFFSETS = ((1, 0), (0, 1), (1, 1), (1, -1))
HARALICK_NAMES = ("contrast", "energy", "homogeneity", "entropy", "correlation", "valid_fraction")


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Ordered named real-valued features; the currency between modules."""

    names: tuple
    values: np.ndarray

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 1 or len(names) != values.size:
            raise ValueError(f"{len(names)} names vs {values.size} values")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        if not np.all(np.isfinite(values)):
            raise ValueError("feature values must be finite")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", values)

    def __eq__(self, other):
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return self.names == other.names and np.array_equal(self.values, other.values)

    def __len__(self):
        return len(self.names)

    def get(self, name: str, default: float | None = None) -> float:
        try:
            return float(self.values[self.names.index(name)])
        except ValueError:
            if default is None:
                raise KeyError(name) from None
            return default


@dataclass(frozen=True, eq=False)
class QuantizedGrid:
    """Gray levels reduced to codes in [0, levels); SENTINEL marks
    masked-out pixels."""

    width: int
    height: int
    levels: int
    codes: np.ndarray

    def __post_init__(self):
        if self.levels < 2:
            raise ValueError(f"levels must be >= 2, got {self.levels}")
        codes = np.ascontiguousarray(self.codes, dtype=np.int32)
        if codes.ndim != 1 or codes.size != self.width * self.height:
            raise ValueError("codes length must equal width*height")
        live = codes[codes != SENTINEL]
        if live.size and (live.min() < 0 or live.max() >= self.levels):
            raise ValueError("codes must lie in [0, levels) or be the sentinel")
        object.__setattr__(self, "codes", codes)

    def to_array(self) -> np.ndarray:
        return self.codes.reshape(self.height, self.width)


@dataclass(frozen=True, eq=False)
class Glcm:
    """Normalized symmetric co-occurrence matrix.

    pair_count is the number of contributing pixel pairs; max_pairs the
    number of in-bounds pairs the grid could have contributed (used to
    derive coverage).
    """

    levels: int
    matrix: np.ndarray
    pair_count: int
    max_pairs: int

    def __post_init__(self):
        matrix = np.ascontiguousarray(self.matrix, dtype=np.float64)
        if matrix.shape != (self.levels, self.levels):
            raise ValueError(f"matrix shape {matrix.shape} != ({self.levels}, {self.levels})")
        if self.pair_count > 0 and abs(matrix.sum() - 1.0) > 1e-12:
            raise ValueError(f"matrix entries sum to {matrix.sum()!r}, expected 1")
        if not np.allclose(matrix, matrix.T, rtol=0, atol=1e-15):
            raise ValueError("matrix must be symmetric")
        object.__setattr__(self, "matrix", matrix)


def quantize(gray: Raster, mask: PixelMask, levels: int = 16) -> QuantizedGrid:
    """code = floor(value*levels/256) clamped to levels-1; masked pixels
    get the sentinel."""
    if gray.channels != 1:
        raise ValueError("quantize requires a gray raster")
    if levels < 2:
        raise ValueError(f"levels must be >= 2, got {levels}")
    if (mask.width, mask.height) != (gray.width, gray.height):
        raise ValueError(
            f"mask {mask.width}x{mask.height} does not match raster {gray.width}x{gray.height}"
        )
    codes = (gray.samples.astype(np.int32) * levels) // 256
    np.clip(codes, 0, levels - 1, out=codes)
    codes[~mask.bits] = SENTINEL
    return QuantizedGrid(gray.width, gray.height, levels, codes)


def glcm(q: QuantizedGrid, offsets=DEFAULT_OFFSETS) -> Glcm:
    """Symmetric co-occurrence accumulation over the given (dx, dy) offsets.

    For each pixel p with p and p+offset in bounds and both unmasked, the
    (code(p), code(p+offset)) and transposed cells are incremented; the
    matrix is normalized by the total number of increments.
    """
    offsets = tuple(offsets)
    if not offsets:
        raise ValueError("offsets must be non-empty")
    g = q.levels
    grid = q.to_array()
    mat = np.zeros((g, g), dtype=np.float64)
    pair_count = 0
    max_pairs = 0
    for dx, dy in offsets:
        dx, dy = int(dx), int(dy)
        if dx == 0 and dy == 0:
            raise ValueError("offset (0, 0) is not a valid co-occurrence offset")
        if abs(dx) >= q.width or abs(dy) >= q.height:
            continue
        ys = slice(max(0, -dy), q.height - max(0, dy))
        xs = slice(max(0, -dx), q.width - max(0, dx))
        ysb = slice(max(0, dy), q.height - max(0, -dy))
        xsb = slice(max(0, dx), q.width - max(0, -dx))
        a = grid[ys, xs]
        b = grid[ysb, xsb]
        max_pairs += a.size
        ok = (a != SENTINEL) & (b != SENTINEL)
        av = a[ok]
        bv = b[ok]
        if av.size:
            np.add.at(mat, (av, bv), 1.0)
            np.add.at(mat, (bv, av), 1.0)
            pair_count += int(av.size)
    if pair_count > 0:
        mat /= mat.sum()
    return Glcm(g, mat, pair_count, max_pairs)


def haralick(g: Glcm) -> FeatureVector:
    """Contrast, energy, homogeneity, entropy, correlation, plus the
    fraction of potential pairs that contributed (valid_fraction).

    Empty evidence (pair_count 0) yields zeros with correlation 1 and
    valid_fraction 0.
    """
    if g.pair_count == 0:
        values = np.array([0.0, 0.0, 0.0, 0.0, 1.0, 0.0])
        return FeatureVector(HARALICK_NAMES, values)
    p = g.matrix
    idx = np.arange(g.levels, dtype=np.float64)
    ii, jj = np.meshgrid(idx, idx, indexing="ij")
    diff = ii - jj
    contrast = float((p * diff * diff).sum())
    energy = float((p * p).sum())
    homogeneity = float((p / (1.0 + np.abs(diff))).sum())
    pos = p[p > 0]
    entropy = float(-(pos * np.log(pos)).sum())
    marginal = p.sum(axis=1)
    mu = float((idx * marginal).sum())
    var = float(((idx - mu) ** 2 * marginal).sum())
    if var <= 0.0:
        correlation = 1.0
    else:
        correlation = float(((ii - mu) * (jj - mu) * p).sum() / var)
    valid_fraction = g.pair_count / g.max_pairs if g.max_pairs > 0 else 0.0
    values = np.array([contrast, energy, homogeneity, entropy, correlation, valid_fraction])
    return FeatureVector(HARALICK_NAMES, values)


def pair_delta(a: FeatureVector, b: FeatureVector) -> FeatureVector:
    """Per-feature absolute difference |b - a| with names suffixed
    "_delta", plus min_valid_fraction = min of the two coverages.

    Coverage is the vector's valid_fraction entry; vectors without one
    count as fully covered.
    """
    if a.names != b.names:
        raise ValueError(f"feature name lists differ: {a.names} vs {b.names}")
    deltas = np.abs(b.values - a.values)
    names = tuple(f"{n}_delta" for n in a.names) + ("min_valid_fraction",)
    coverage = min(a.get("valid_fraction", 1.0), b.get("valid_fraction", 1.0))
    return FeatureVector(names, np.concatenate([deltas, [coverage]]))
