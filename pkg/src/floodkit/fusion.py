"""Classifier fusion: feature-level concatenation (early), score
averaging and optimized weighting (late), and the particle-swarm
optimizer behind the weight search.

Weight fitness is 1 - F1 of the fused scores thresholded at 0.5, plus a
tiny merit tie-break that prefers weight on individually stronger
streams among equally good weightings; a final comparison against
uniform weights guarantees the result never underperforms plain
averaging on the validation data.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .learn import confusion_and_f1, zscore_stats
from .seeding import spawn_rng
from .texture import FeatureVector

MERIT_TIE_BREAK = 1e-6


@dataclass(frozen=True)
class PsoParams:
    particles: int = 20
    iterations: int = 100
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    v_max: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.particles < 2:
            raise ValueError(f"particles must be >= 2, got {self.particles}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if not (0 < self.inertia < 1):
            raise ValueError(f"inertia must lie in (0, 1), got {self.inertia}")
        if self.cognitive <= 0 or self.social <= 0:
            raise ValueError("cognitive and social factors must be positive")


@dataclass(frozen=True, eq=False)
class FusionWeights:
    """Non-negative per-stream weights summing to 1."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1 within 1e-9, got {w.sum()!r}")
        object.__setattr__(self, "weights", w)

    def __eq__(self, other):
        if not isinstance(other, FusionWeights):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    @classmethod
    def normalize(cls, raw) -> "FusionWeights":
        """Simplex-normalize a raw non-negative vector; all-zero input
        falls back to uniform weights."""
        raw = np.asarray(raw, dtype=np.float64)
        total = raw.sum()
        if total <= 0:
            return cls.uniform(raw.size)
        return cls(raw / total)

    @classmethod
    def uniform(cls, n: int) -> "FusionWeights":
        return cls(np.full(n, 1.0 / n))


@dataclass(frozen=True)
class StreamStats:
    stream_id: str
    names: tuple
    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True)
class EarlyFusionStats:
    streams: tuple


def fit_early_fusion(streams) -> EarlyFusionStats:
    """streams: ordered (stream_id, training FeatureVectors).  The
    z-normalization statistics are frozen here, on training data only."""
    fitted = []
    seen_ids = set()
    for stream_id, vectors in streams:
        vectors = list(vectors)
        if not vectors:
            raise ValueError(f"stream {stream_id!r} has no training vectors")
        if stream_id in seen_ids:
            raise ValueError(f"duplicate stream id {stream_id!r}")
        seen_ids.add(stream_id)
        names = vectors[0].names
        X = np.array([v.values for v in vectors])
        for v in vectors:
            if v.names != names:
                raise DataError(f"stream {stream_id!r}: inconsistent feature names")
        mean, std = zscore_stats(X)
        fitted.append(StreamStats(str(stream_id), names, mean, std))
    return EarlyFusionStats(tuple(fitted))


def early_fuse(vectors, stats: EarlyFusionStats) -> FeatureVector:
    """z-normalize each stream with its frozen stats and concatenate;
    names come out prefixed with the stream id."""
    vectors = list(vectors)
    if len(vectors) != len(stats.streams):
        raise DataError(f"{len(vectors)} vectors for {len(stats.streams)} fitted streams")
    names = []
    chunks = []
    for v, st in zip(vectors, stats.streams):
        if v.names != st.names:
            raise DataError(
                f"stream {st.stream_id!r}: feature names {v.names} do not match fitted {st.names}"
            )
        names.extend(f"{st.stream_id}:{n}" for n in st.names)
        chunks.append((v.values - st.mean) / st.std)
    return FeatureVector(tuple(names), np.concatenate(chunks))


def late_fuse_average(scores) -> float:
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("cannot average an empty score list")
    return float(scores.mean())


def late_fuse_weighted(scores, w: FusionWeights) -> float:
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != w.weights.shape:
        raise ValueError(f"{scores.size} scores for {w.weights.size} weights")
    return float(scores @ w.weights)


@dataclass
class PsoResult:
    position: np.ndarray
    value: float
    trace: list


def pso_minimize(objective, dim: int, lo: float, hi: float, p: PsoParams) -> PsoResult:
    """Canonical global-best PSO on the box [lo, hi]^dim.

    Velocities are clamped to +/- v_max*(hi-lo), positions to the box.
    The trace holds the best-ever objective value after initialization
    and after each iteration, so it is monotone non-increasing.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    rng = spawn_rng(p.seed, 4)
    span = hi - lo
    vmax = p.v_max * span

    def evaluate(xs):
        vals = np.empty(xs.shape[0])
        for i, x in enumerate(xs):
            v = float(objective(x))
            if not np.isfinite(v):
                raise ValueError(f"objective returned non-finite value {v!r} at position {x.tolist()}")
            vals[i] = v
        return vals

    X = lo + rng.random((p.particles, dim)) * span
    V = np.zeros_like(X)
    f = evaluate(X)
    pbest = X.copy()
    pbest_f = f.copy()
    g = int(np.argmin(pbest_f))
    gbest = pbest[g].copy()
    gbest_f = float(pbest_f[g])
    trace = [gbest_f]
    for _ in range(p.iterations):
        r1 = rng.random((p.particles, dim))
        r2 = rng.random((p.particles, dim))
        V = p.inertia * V + p.cognitive * r1 * (pbest - X) + p.social * r2 * (gbest - X)
        np.clip(V, -vmax, vmax, out=V)
        X = np.clip(X + V, lo, hi)
        f = evaluate(X)
        improved = f < pbest_f
        pbest[improved] = X[improved]
        pbest_f[improved] = f[improved]
        g = int(np.argmin(pbest_f))
        if float(pbest_f[g]) < gbest_f:
            gbest = pbest[g].copy()
            gbest_f = float(pbest_f[g])
        trace.append(gbest_f)
    return PsoResult(gbest, gbest_f, trace)


def _fused_f1(weights: FusionWeights, scores: np.ndarray, labels: np.ndarray) -> float:
    fused = weights.weights @ scores
    preds = (fused >= 0.5).astype(np.int64)
    return confusion_and_f1(preds, labels).f1


def optimize_fusion_weights(val_scores, val_labels, p: PsoParams) -> FusionWeights:
    """PSO weight search on validation scores, guarded so the returned
    weights never score a lower validation F1 than uniform weighting."""
    scores = np.asarray(val_scores, dtype=np.float64)
    labels = np.asarray(val_labels, dtype=np.int64)
    if scores.ndim != 2 or scores.shape[0] < 2:
        raise ValueError("need at least 2 score streams, one row per stream")
    if scores.shape[1] != labels.size:
        raise ValueError(f"{scores.shape[1]} scores per stream vs {labels.size} labels")
    if len(np.unique(labels)) < 2:
        raise DataError("validation labels contain a single class; weights cannot be fit")
    n_streams = scores.shape[0]
    merit = np.array(
        [confusion_and_f1((s >= 0.5).astype(np.int64), labels).f1 for s in scores]
    )

    def objective(raw):
        w = FusionWeights.normalize(raw)
        return 1.0 - _fused_f1(w, scores, labels) + MERIT_TIE_BREAK * (1.0 - w.weights @ merit)

    result = pso_minimize(objective, n_streams, 0.0, 1.0, p)
    candidate = FusionWeights.normalize(result.position)
    uniform = FusionWeights.uniform(n_streams)
    if _fused_f1(candidate, scores, labels) > _fused_f1(uniform, scores, labels):
        return candidate
    return uniform
