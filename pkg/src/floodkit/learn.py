"""From-scratch binary classifiers and evaluation metrics.

Decision trees grow greedily by Gini-impurity reduction on axis-aligned
midpoint thresholds; forests add bootstrap rows and per-split random
feature subsets; the linear SVM is trained with the projected stochastic
subgradient schedule (step 1/(lambda*t)) and squashes its margin through
a logistic to give scores in [0, 1].  All trainers are deterministic for
a fixed seed and serialize to a versioned JSON document.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError, SchemaError
from .seeding import spawn_rng
from .texture import FeatureVector

MODEL_FORMAT_VERSION = 1
MODEL_KINDS = ("tree", "forest", "svm", "ensemble")


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 8
    min_leaf: int = 2
    n_trees: int = 100
    feature_subsample: float | None = None  # None = sqrt rule (forests only)
    seed: int = 0

    def __post_init__(self):
        if self.max_depth < 1 or self.min_leaf < 1 or self.n_trees < 1:
            raise ValueError("max_depth, min_leaf, and n_trees must all be >= 1")
        if self.feature_subsample is not None and not (0 < self.feature_subsample <= 1):
            raise ValueError(f"feature_subsample must lie in (0, 1], got {self.feature_subsample}")


@dataclass(frozen=True)
class SvmParams:
    lam: float = 1e-3
    epochs: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")


class LabeledDataset:
    """Rows of (features, 0|1 label, optional group id) sharing one
    feature-name list."""

    def __init__(self, feature_names, X, y, groups=None):
        self.feature_names = tuple(str(n) for n in feature_names)
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        self.y = np.ascontiguousarray(y, dtype=np.int64)
        self.groups = list(groups) if groups is not None else None
        if self.X.ndim != 2 or self.X.shape[1] != len(self.feature_names):
            raise ValueError(f"X shape {self.X.shape} does not match {len(self.feature_names)} names")
        if self.y.shape != (self.X.shape[0],):
            raise ValueError("labels must be one per row")
        if not np.all((self.y == 0) | (self.y == 1)):
            raise ValueError("labels must be 0 or 1")
        if self.groups is not None and len(self.groups) != self.X.shape[0]:
            raise ValueError("groups must be one per row")

    @classmethod
    def from_rows(cls, rows):
        """rows: iterable of (FeatureVector, label) or (FeatureVector, label, group)."""
        rows = list(rows)
        if not rows:
            raise ValueError("dataset must be non-empty")
        names = rows[0][0].names
        X = np.empty((len(rows), len(names)))
        y = np.empty(len(rows), dtype=np.int64)
        groups = []
        for i, row in enumerate(rows):
            fv, label = row[0], row[1]
            if fv.names != names:
                raise SchemaError(f"row {i} feature names differ from row 0")
            X[i] = fv.values
            y[i] = label
            groups.append(row[2] if len(row) > 2 else None)
        has_groups = any(g is not None for g in groups)
        return cls(names, X, y, groups if has_groups else None)

    def __len__(self):
        return self.X.shape[0]

    def class_counts(self):
        return int((self.y == 0).sum()), int((self.y == 1).sum())


@dataclass
class TrainedModel:
    """Serializable classifier producing a score in [0, 1]."""

    kind: str
    parameters: dict
    feature_names: tuple
    format_version: int = MODEL_FORMAT_VERSION
    metadata: dict = field(default_factory=dict)

    def to_document(self) -> dict:
        return {
            "format_version": self.format_version,
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "parameters": self.parameters,
            "metadata": self.metadata,
        }

    @classmethod
    def from_document(cls, doc: dict) -> "TrainedModel":
        try:
            version = int(doc["format_version"])
            kind = doc["kind"]
            names = tuple(doc["feature_names"])
            params = doc["parameters"]
            meta = doc.get("metadata", {})
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed model document: {exc}") from None
        if version != MODEL_FORMAT_VERSION:
            raise SchemaError(f"unsupported model format_version {version}")
        if kind not in MODEL_KINDS:
            raise SchemaError(f"unknown model kind {kind!r}")
        return cls(kind, params, names, version, dict(meta))


def zscore_stats(X: np.ndarray):
    """Per-column mean and population stddev; zero-variance columns get
    stddev 1 so normalization stays total."""
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return mean, std


def _gini(pos: float, total: float) -> float:
    if total <= 0:
        return 0.0
    p = pos / total
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def _best_split(X, y, feature_ids, min_leaf):
    """Best (gain, feature, threshold) over midpoint candidates, or None.

    Ties resolve to the lowest feature index, then the lowest threshold,
    so training is order-independent and deterministic.
    """
    n = y.size
    total_pos = float(y.sum())
    parent = _gini(total_pos, n)
    best = None
    for f in feature_ids:
        vals = X[:, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        sy = y[order]
        boundaries = np.nonzero(sv[:-1] < sv[1:])[0]
        if boundaries.size == 0:
            continue
        left_n = boundaries + 1
        keep = (left_n >= min_leaf) & (n - left_n >= min_leaf)
        if not keep.any():
            continue
        left_n = left_n[keep]
        boundaries = boundaries[keep]
        cum_pos = np.cumsum(sy)
        left_pos = cum_pos[boundaries].astype(np.float64)
        right_n = n - left_n
        right_pos = total_pos - left_pos
        pl = left_pos / left_n
        pr = right_pos / right_n
        gini_l = 1.0 - pl * pl - (1.0 - pl) * (1.0 - pl)
        gini_r = 1.0 - pr * pr - (1.0 - pr) * (1.0 - pr)
        weighted = (left_n * gini_l + right_n * gini_r) / n
        gains = parent - weighted
        k = int(np.argmax(gains))
        gain = float(gains[k])
        threshold = float((sv[boundaries[k]] + sv[boundaries[k] + 1]) / 2.0)
        if best is None or gain > best[0] + 1e-15:
            best = (gain, int(f), threshold)
    return best


def _grow_tree(X, y, depth, max_depth, min_leaf, pick_features):
    n = y.size
    pos = float(y.sum())
    if depth >= max_depth or n < 2 * min_leaf or pos == 0.0 or pos == n:
        return {"leaf": pos / n}
    best = _best_split(X, y, pick_features(), min_leaf)
    if best is None:
        return {"leaf": pos / n}
    _, f, threshold = best
    left = X[:, f] <= threshold
    return {
        "feature": f,
        "threshold": threshold,
        "left": _grow_tree(X[left], y[left], depth + 1, max_depth, min_leaf, pick_features),
        "right": _grow_tree(X[~left], y[~left], depth + 1, max_depth, min_leaf, pick_features),
    }


def _tree_score(node, x):
    while "leaf" not in node:
        node = node["left"] if x[node["feature"]] <= node["threshold"] else node["right"]
    return node["leaf"]


def _degenerate_model(kind: str, d: LabeledDataset) -> TrainedModel:
    score = float(d.y.mean())
    params = {"tree": {"leaf": score}} if kind == "tree" else {"trees": [{"leaf": score}]}
    return TrainedModel(kind, params, d.feature_names, metadata={"degenerate": True})


def train_tree(d: LabeledDataset, p: TreeParams) -> TrainedModel:
    """Single deterministic tree considering every feature at each split.

    A single-class dataset yields a constant-score model flagged
    degenerate in the metadata.
    """
    if len(d) == 0:
        raise ValueError("dataset must be non-empty")
    n0, n1 = d.class_counts()
    if n0 == 0 or n1 == 0:
        return _degenerate_model("tree", d)
    all_features = tuple(range(len(d.feature_names)))
    tree = _grow_tree(d.X, d.y, 0, p.max_depth, p.min_leaf, lambda: all_features)
    return TrainedModel("tree", {"tree": tree}, d.feature_names)


def _subsample_size(n_features: int, fraction: float | None) -> int:
    if fraction is None:
        return max(1, round(math.sqrt(n_features)))
    return max(1, round(n_features * fraction))


def train_forest(d: LabeledDataset, p: TreeParams) -> TrainedModel:
    """Bagged trees with per-split random feature subsets; the score is
    the mean of the member scores."""
    if len(d) == 0:
        raise ValueError("dataset must be non-empty")
    n0, n1 = d.class_counts()
    if n0 == 0 or n1 == 0:
        return _degenerate_model("forest", d)
    n = len(d)
    n_features = len(d.feature_names)
    m = _subsample_size(n_features, p.feature_subsample)
    trees = []
    for t in range(p.n_trees):
        rng = spawn_rng(p.seed, 1, t)
        idx = rng.integers(0, n, size=n)
        Xb = d.X[idx]
        yb = d.y[idx]
        if m >= n_features:
            pool = tuple(range(n_features))
            pick = lambda: pool  # noqa: E731
        else:
            pick = lambda: tuple(np.sort(rng.choice(n_features, size=m, replace=False)))  # noqa: E731
        trees.append(_grow_tree(Xb, yb, 0, p.max_depth, p.min_leaf, pick))
    return TrainedModel("forest", {"trees": trees}, d.feature_names)


def train_svm(d: LabeledDataset, p: SvmParams) -> TrainedModel:
    """Linear hinge-loss model with L2 regularization.

    Features are z-normalized internally (statistics stored in the
    model) and a constant intercept feature is appended.  Weights are
    projected onto the ball of radius 1/sqrt(lambda) after each step.
    """
    if len(d) == 0:
        raise ValueError("dataset must be non-empty")
    n0, n1 = d.class_counts()
    if n0 == 0 or n1 == 0:
        raise DataError("cannot train an SVM on a single-class dataset (margin undefined)")
    mean, std = zscore_stats(d.X)
    Xz = np.column_stack([(d.X - mean) / std, np.ones(len(d))])
    yy = 2.0 * d.y - 1.0
    n, dim = Xz.shape
    w = np.zeros(dim)
    rng = spawn_rng(p.seed, 2)
    radius = 1.0 / math.sqrt(p.lam)
    steps = p.epochs * n
    for t in range(1, steps + 1):
        i = int(rng.integers(0, n))
        eta = 1.0 / (p.lam * t)
        margin = yy[i] * float(w @ Xz[i])
        w *= 1.0 - eta * p.lam
        if margin < 1.0:
            w += eta * yy[i] * Xz[i]
        norm = float(np.linalg.norm(w))
        if norm > radius:
            w *= radius / norm
    params = {
        "weights": w[:-1].tolist(),
        "intercept": float(w[-1]),
        "mean": mean.tolist(),
        "std": std.tolist(),
    }
    return TrainedModel("svm", params, d.feature_names)


@dataclass(frozen=True)
class MemberPlan:
    """Row indices a resampled-ensemble member trains on."""

    minority_idx: tuple
    majority_idx: tuple


def plan_resampled_members(y: np.ndarray, k: int, seed: int) -> list[MemberPlan]:
    """Sampling plan: every member gets all minority rows plus a distinct
    uniform sample (without replacement) of majority rows of the same
    count, or all majority rows when the majority is the smaller pool."""
    y = np.asarray(y)
    if k < 1:
        raise ValueError(f"member count must be >= 1, got {k}")
    n0 = int((y == 0).sum())
    n1 = int((y == 1).sum())
    if n0 == 0 or n1 == 0:
        raise DataError("resampled ensemble requires both classes present")
    minority_label = 0 if n0 <= n1 else 1
    minority = tuple(np.nonzero(y == minority_label)[0].tolist())
    majority_pool = np.nonzero(y != minority_label)[0]
    take = min(len(minority), majority_pool.size)
    distinct_possible = take < majority_pool.size
    plans = []
    seen = set()
    for m in range(k):
        rng = spawn_rng(seed, 3, m)
        for _ in range(64):
            pick = tuple(sorted(rng.choice(majority_pool, size=take, replace=False).tolist()))
            if not distinct_possible or pick not in seen:
                break
        seen.add(pick)
        plans.append(MemberPlan(minority, pick))
    return plans


def train_resampled_ensemble(d: LabeledDataset, base_kind: str, base_params, k: int = 5) -> TrainedModel:
    """Imbalance remedy: k base models on balanced resamples, mean score."""
    if base_kind not in ("tree", "forest", "svm"):
        raise ValueError(f"base kind must be tree, forest, or svm, got {base_kind!r}")
    trainers = {"tree": train_tree, "forest": train_forest, "svm": train_svm}
    plans = plan_resampled_members(d.y, k, base_params.seed)
    members = []
    for m, plan in enumerate(plans):
        idx = np.array(sorted(plan.minority_idx + plan.majority_idx))
        sub = LabeledDataset(d.feature_names, d.X[idx], d.y[idx])
        member_params = replace(base_params, seed=base_params.seed + 1000003 * (m + 1))
        members.append(trainers[base_kind](sub, member_params).to_document())
    params = {"base_kind": base_kind, "members": members}
    return TrainedModel("ensemble", params, d.feature_names)


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _score_values(m: TrainedModel, x: np.ndarray) -> float:
    if m.kind == "tree":
        return float(_tree_score(m.parameters["tree"], x))
    if m.kind == "forest":
        trees = m.parameters["trees"]
        return float(sum(_tree_score(t, x) for t in trees) / len(trees))
    if m.kind == "svm":
        p = m.parameters
        z = (x - np.asarray(p["mean"])) / np.asarray(p["std"])
        return _sigmoid(float(z @ np.asarray(p["weights"]) + p["intercept"]))
    if m.kind == "ensemble":
        members = [TrainedModel.from_document(doc) for doc in m.parameters["members"]]
        return float(sum(_score_values(mm, x) for mm in members) / len(members))
    raise SchemaError(f"unknown model kind {m.kind!r}")


def predict_score(m: TrainedModel, f: FeatureVector) -> float:
    """Score in [0, 1]; the hard label is score >= 0.5.

    Feature vectors whose name set differs from the model's are rejected;
    a matching set in a different order is reordered to the model schema.
    """
    if f.names == m.feature_names:
        x = f.values
    elif set(f.names) == set(m.feature_names):
        pos = {n: i for i, n in enumerate(f.names)}
        x = f.values[[pos[n] for n in m.feature_names]]
    else:
        missing = sorted(set(m.feature_names) - set(f.names))
        extra = sorted(set(f.names) - set(m.feature_names))
        raise SchemaError(f"feature names do not match model: missing {missing}, extra {extra}")
    score = _score_values(m, x)
    return min(1.0, max(0.0, score))


def predict_scores(m: TrainedModel, d: LabeledDataset) -> np.ndarray:
    """predict_score over every dataset row (schema already aligned)."""
    if d.feature_names != m.feature_names:
        raise SchemaError(
            f"dataset feature names {d.feature_names} do not match model {m.feature_names}"
        )
    return np.array([_score_values(m, x) for x in d.X])


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float


def confusion_and_f1(preds, labels) -> Metrics:
    """Confusion counts and F1 = 2PR/(P+R) with the zero conventions:
    precision 0 when TP+FP = 0, recall 0 when TP+FN = 0, F1 0 when
    P+R = 0 (computed as 2TP/(2TP+FP+FN), which is algebraically equal)."""
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if preds.shape != labels.shape or preds.ndim != 1:
        raise ValueError(f"predictions shape {preds.shape} != labels shape {labels.shape}")
    if preds.size == 0:
        raise ValueError("predictions must be non-empty")
    if not np.all((preds == 0) | (preds == 1)) or not np.all((labels == 0) | (labels == 1)):
        raise ValueError("predictions and labels must be 0 or 1")
    tp = int(((preds == 1) & (labels == 1)).sum())
    fp = int(((preds == 1) & (labels == 0)).sum())
    fn = int(((preds == 0) & (labels == 1)).sum())
    tn = int(((preds == 0) & (labels == 0)).sum())
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    denom = 2 * tp + fp + fn
    f1 = 2 * tp / denom if denom > 0 else 0.0
    return Metrics(tp, fp, fn, tn, precision, recall, f1)
