"""City-sequence pipeline: per-frame masking and texture features,
sequential-pair deltas, sequence-level decisions, corpus evaluation, and
the synthetic sequence generator used for desk-scale verification.

Per frame: gray -> white reference -> cloud + dark masks at full
resolution -> area downscale of the image and majority downscale of the
masks to 128x128 -> HSV -> S/V mask -> intersection -> median filter ->
dilation -> quantize -> co-occurrence features.  Consecutive frames then
yield absolute-difference feature vectors, one per pair.
"""

from dataclasses import dataclass

import numpy as np

from .learn import LabeledDataset, Metrics, TrainedModel, confusion_and_f1, predict_score
from .masking import (
    MaskConfig,
    PixelMask,
    cloud_mask,
    dark_missing_mask,
    dilate_invalid,
    downscale_mask,
    intersect,
    median_filter,
    sv_mask,
)
from .raster import Raster, resize_area, to_gray, to_hsv
from .seeding import spawn_rng
from .texture import DEFAULT_OFFSETS, FeatureVector, glcm, haralick, pair_delta, quantize

ANALYSIS_SIZE = 128  # uniform working resolution for texture comparison


@dataclass
class CitySequence:
    """Time-ordered RGB frames of one city, optionally labeled.

    onset (synthetic ground truth) is the index of the first flooded
    frame; None when unknown or when no flooding occurs.
    """

    city_id: str
    frames: list
    timestamps: list | None = None
    label: int | None = None
    onset: int | None = None

    def __post_init__(self):
        if len(self.frames) < 2:
            raise ValueError(f"{self.city_id}: need at least 2 frames for pair analysis")
        first = self.frames[0]
        for i, f in enumerate(self.frames):
            if f.channels != 3:
                raise ValueError(f"{self.city_id}: frame {i} is not RGB")
            if (f.width, f.height) != (first.width, first.height):
                raise ValueError(
                    f"{self.city_id}: frame {i} is {f.width}x{f.height}, "
                    f"frame 0 is {first.width}x{first.height}"
                )

    def n_pairs(self) -> int:
        return len(self.frames) - 1


@dataclass(frozen=True)
class SynthConfig:
    size: int = 256
    n_frames: int = 6
    flood: bool = False
    cloud_prob: float = 0.3
    vegetation_drift: float = 12.0
    jitter: int = 2
    water_v: float = 0.25
    water_s: float = 0.45
    flood_coverage: float = 0.35
    seed: int = 0

    def __post_init__(self):
        if self.n_frames < 2:
            raise ValueError(f"n_frames must be >= 2, got {self.n_frames}")
        if self.size < 16:
            raise ValueError(f"size must be >= 16, got {self.size}")
        for name in ("cloud_prob", "water_v", "water_s", "flood_coverage"):
            v = getattr(self, name)
            if not (0 <= v <= 1):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.jitter < 0:
            raise ValueError(f"jitter must be >= 0, got {self.jitter}")


def frame_features(
    frame: Raster,
    mask_cfg: MaskConfig = MaskConfig(),
    levels: int = 16,
    offsets=DEFAULT_OFFSETS,
):
    """Texture features for one frame; returns (features, working mask)."""
    gray_full = to_gray(frame)
    clouds = cloud_mask(gray_full, mask_cfg)
    dark = dark_missing_mask(gray_full, mask_cfg)
    small = resize_area(frame, ANALYSIS_SIZE, ANALYSIS_SIZE)
    mask = intersect(
        [
            downscale_mask(clouds, ANALYSIS_SIZE, ANALYSIS_SIZE),
            downscale_mask(dark, ANALYSIS_SIZE, ANALYSIS_SIZE),
            sv_mask(to_hsv(small), mask_cfg),
        ]
    )
    mask = dilate_invalid(median_filter(mask, mask_cfg.median_k), mask_cfg.dilate_k)
    grid = quantize(to_gray(small), mask, levels)
    return haralick(glcm(grid, offsets)), mask


def extract_sequence_features(
    seq: CitySequence,
    mask_cfg: MaskConfig = MaskConfig(),
    levels: int = 16,
    offsets=DEFAULT_OFFSETS,
) -> list:
    """One delta FeatureVector per consecutive frame pair (frames-1 total).
    Fully masked pairs yield zero features with min_valid_fraction 0."""
    per_frame = [frame_features(f, mask_cfg, levels, offsets)[0] for f in seq.frames]
    return [pair_delta(a, b) for a, b in zip(per_frame, per_frame[1:])]


def decide_sequence(pair_scores, policy: str = "any", threshold: float = 0.5) -> int:
    """any: 1 iff some pair score >= threshold; mean: 1 iff the mean
    score >= threshold."""
    scores = np.asarray(pair_scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("pair score list must be non-empty")
    if policy == "any":
        return int(bool((scores >= threshold).any()))
    if policy == "mean":
        return int(scores.mean() >= threshold)
    raise ValueError(f"policy must be 'any' or 'mean', got {policy!r}")


def pair_flood_labels(seq: CitySequence) -> list | None:
    """Per-pair labels: 1 for the pair spanning flood onset, else 0.
    None when labels cannot be derived (unlabeled, or flooded without a
    known onset)."""
    if seq.label is None:
        return None
    if seq.label == 0:
        return [0] * seq.n_pairs()
    if seq.onset is None:
        return None
    return [1 if i == seq.onset - 1 else 0 for i in range(seq.n_pairs())]


def _smooth_field(rng, size: int, cells: int) -> np.ndarray:
    """Value noise in [0, 1]: bilinear upsampling of a coarse uniform grid."""
    coarse = rng.random((cells + 1, cells + 1))
    u = np.linspace(0.0, cells, size)
    i0 = np.minimum(u.astype(np.int64), cells - 1)
    frac = u - i0
    rows = coarse[i0] * (1 - frac)[:, None] + coarse[i0 + 1] * frac[:, None]
    return rows[:, i0] * (1 - frac)[None, :] + rows[:, i0 + 1] * frac[None, :]


def _terrain(seed: int, size: int):
    """Base city: value-noise terrain with a road grid.  Returns the
    float RGB image and the road mask."""
    rng = spawn_rng(seed, 10)
    fa = 0.6 * _smooth_field(rng, size, 8) + 0.4 * _smooth_field(rng, size, 24)
    fb = 0.6 * _smooth_field(rng, size, 10) + 0.4 * _smooth_field(rng, size, 28)
    fc = _smooth_field(rng, size, 12)
    img = np.empty((size, size, 3))
    img[..., 0] = 60.0 + 80.0 * fa
    img[..., 1] = 85.0 + 85.0 * fb
    img[..., 2] = 45.0 + 60.0 * fc
    coords = np.arange(size)
    road_line = (coords % 32) < 2
    roads = road_line[:, None] | road_line[None, :]
    img[roads] = (58.0, 62.0, 52.0)
    return img, roads


def _flood_region(rng, size: int, roads: np.ndarray, coverage: float) -> np.ndarray:
    """Contiguous blob covering ~coverage of the non-road area."""
    n_target = int(round(coverage * int((~roads).sum())))
    if n_target <= 0:
        return np.zeros((size, size), dtype=bool)
    cy, cx = size * (0.3 + 0.4 * rng.random(2))
    yy, xx = np.mgrid[0:size, 0:size]
    warp = _smooth_field(rng, size, 6) - 0.5
    dist = np.hypot(yy - cy, xx - cx) + 0.35 * size * warp
    dist = np.where(roads, np.inf, dist)
    cutoff = np.partition(dist.reshape(-1), n_target - 1)[n_target - 1]
    return dist <= cutoff


def generate_synthetic_sequence(cfg: SynthConfig) -> CitySequence:
    """Deterministic synthetic sequence with seasonal vegetation drift,
    pixel jitter, cloud cover, and (optionally) a flood onset."""
    size = cfg.size
    base, roads = _terrain(cfg.seed, size)
    flood_rng = spawn_rng(cfg.seed, 12)
    onset = None
    region = None
    water = None
    if cfg.flood:
        onset = int(flood_rng.integers(1, cfg.n_frames))
        region = _flood_region(flood_rng, size, roads, cfg.flood_coverage)
        v_top = round(cfg.water_v * 255)
        v_bot = round(v_top * (1.0 - cfg.water_s))
        color = np.array([v_bot, (v_bot + v_top) // 2, v_top], dtype=np.float64)
        ripple = flood_rng.integers(-3, 4, size=(int(region.sum()), 3)).astype(np.float64)
        water = color + ripple
    frames = []
    for t in range(cfg.n_frames):
        veg = 2.0 * _smooth_field(spawn_rng(cfg.seed, 11, t), size, 6) - 1.0
        img = base.copy()
        img[..., 1] += cfg.vegetation_drift * veg
        if region is not None and t >= onset:
            img[region] = water
        frame_rng = spawn_rng(cfg.seed, 13, t)
        dy, dx = frame_rng.integers(-cfg.jitter, cfg.jitter + 1, size=2)
        img = np.roll(img, (int(dy), int(dx)), axis=(0, 1))
        if frame_rng.random() < cfg.cloud_prob:
            yy, xx = np.mgrid[0:size, 0:size]
            for _ in range(int(frame_rng.integers(1, 4))):
                cy, cx = size * frame_rng.random(2)
                ay, ax = size * (0.12 + 0.18 * frame_rng.random(2))
                brightness = float(frame_rng.integers(235, 253))
                ellipse = ((yy - cy) / ay) ** 2 + ((xx - cx) / ax) ** 2 <= 1.0
                img[ellipse] = brightness
        frames.append(Raster.from_array(np.clip(img, 0, 255).astype(np.uint8)))
    return CitySequence(
        city_id=f"synth{cfg.seed:05d}",
        frames=frames,
        label=1 if cfg.flood else 0,
        onset=onset,
    )


def corpus_pair_dataset(
    sequences,
    mask_cfg: MaskConfig = MaskConfig(),
    levels: int = 16,
    offsets=DEFAULT_OFFSETS,
) -> LabeledDataset:
    """Pair-delta training table over labeled sequences; the group id of
    each row is the owning city_id."""
    rows = []
    for seq in sequences:
        labels = pair_flood_labels(seq)
        if labels is None:
            raise ValueError(f"{seq.city_id}: pair labels cannot be derived")
        for fv, label in zip(extract_sequence_features(seq, mask_cfg, levels, offsets), labels):
            rows.append((fv, label, seq.city_id))
    return LabeledDataset.from_rows(rows)


@dataclass
class SequenceReport:
    city_id: str
    label: int
    decision: int
    scores: list
    min_valid_fraction: float


@dataclass
class CorpusReport:
    metrics: Metrics
    rows: list


def evaluate_corpus(
    sequences,
    model: TrainedModel,
    mask_cfg: MaskConfig = MaskConfig(),
    levels: int = 16,
    offsets=DEFAULT_OFFSETS,
    policy: str = "any",
    threshold: float = 0.5,
) -> CorpusReport:
    """Sequence-level confusion/F1 of the model over a labeled corpus,
    with a per-sequence report row."""
    rows = []
    decisions = []
    labels = []
    for seq in sequences:
        if seq.label is None:
            raise ValueError(f"{seq.city_id}: evaluate_corpus requires labeled sequences")
        feats = extract_sequence_features(seq, mask_cfg, levels, offsets)
        scores = [predict_score(model, fv) for fv in feats]
        decision = decide_sequence(scores, policy, threshold)
        coverage = min(fv.get("min_valid_fraction", 1.0) for fv in feats)
        rows.append(SequenceReport(seq.city_id, seq.label, decision, scores, coverage))
        decisions.append(decision)
        labels.append(seq.label)
    return CorpusReport(confusion_and_f1(decisions, labels), rows)
