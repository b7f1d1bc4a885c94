"""On-disk interchange formats.

- Feature/score tables: plain CSV with a header row; the reserved column
  names "label" (0|1) and "group" (free-form id) are split off when
  reading.  Floats are written with repr so values round-trip exactly.
- Documents (models, vocabularies, fusion weights, manifests): versioned
  JSON with sorted keys and a fixed "kind" field, so artifacts are
  byte-reproducible and diff cleanly.
"""

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, SchemaError

DOCUMENT_FORMAT_VERSION = 1
RESERVED_COLUMNS = ("label", "group")


@dataclass
class FeatureTable:
    names: tuple
    X: np.ndarray
    labels: np.ndarray | None = None
    groups: list | None = None


def _format_value(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_feature_csv(path, names, X, labels=None, groups=None) -> None:
    names = tuple(names)
    for reserved in RESERVED_COLUMNS:
        if reserved in names:
            raise SchemaError(f"feature name {reserved!r} collides with a reserved CSV column")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(names):
        raise ValueError(f"matrix shape {X.shape} does not match {len(names)} names")
    header = list(names)
    if labels is not None:
        header.append("label")
    if groups is not None:
        header.append("group")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for i in range(X.shape[0]):
        row = [_format_value(v) for v in X[i]]
        if labels is not None:
            row.append(str(int(labels[i])))
        if groups is not None:
            row.append(str(groups[i]))
        writer.writerow(row)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_feature_csv(path) -> FeatureTable:
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError(f"{path}: empty CSV") from None
    names = tuple(c for c in header if c not in RESERVED_COLUMNS)
    if len(set(header)) != len(header):
        raise FormatError(f"{path}: duplicate column names in header")
    label_col = header.index("label") if "label" in header else None
    group_col = header.index("group") if "group" in header else None
    feat_cols = [i for i, c in enumerate(header) if c not in RESERVED_COLUMNS]
    rows, labels, groups = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise FormatError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
        try:
            rows.append([float(row[i]) for i in feat_cols])
            if label_col is not None:
                label = int(row[label_col])
                if label not in (0, 1):
                    raise ValueError(label)
                labels.append(label)
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-numeric or non-binary value") from None
        if group_col is not None:
            groups.append(row[group_col])
    X = np.array(rows, dtype=np.float64) if rows else np.empty((0, len(names)))
    return FeatureTable(
        names,
        X,
        np.array(labels, dtype=np.int64) if label_col is not None else None,
        groups if group_col is not None else None,
    )


def write_score_csv(path, columns: dict, labels=None) -> None:
    """columns: ordered mapping of column name -> score sequence."""
    header = list(columns)
    series = [np.asarray(v, dtype=np.float64) for v in columns.values()]
    n = series[0].size if series else 0
    if any(s.size != n for s in series):
        raise ValueError("score columns must have equal lengths")
    if labels is not None:
        header.append("label")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for i in range(n):
        row = [_format_value(s[i]) for s in series]
        if labels is not None:
            row.append(str(int(labels[i])))
        writer.writerow(row)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_score_csv(path):
    """Returns (stream_names, scores array shaped (n_streams, n), labels | None)."""
    table = read_feature_csv(path)
    return table.names, table.X.T.copy(), table.labels


def save_document(path, kind: str, payload: dict) -> None:
    doc = dict(payload)
    doc["format_version"] = DOCUMENT_FORMAT_VERSION
    doc["kind"] = kind
    text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def load_document(path, expected_kind: str | None = None) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: document must be a JSON object")
    version = doc.get("format_version")
    if version != DOCUMENT_FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format_version {version!r}")
    if expected_kind is not None and doc.get("kind") != expected_kind:
        raise FormatError(f"{path}: expected kind {expected_kind!r}, got {doc.get('kind')!r}")
    return doc


@dataclass
class SequenceEntry:
    city_id: str
    frame_paths: list
    label: int | None = None
    onset: int | None = None
    timestamps: list | None = None


def write_manifest(path, entries) -> None:
    sequences = []
    for e in entries:
        rec = {"city_id": e.city_id, "frames": [str(p) for p in e.frame_paths]}
        if e.label is not None:
            rec["label"] = int(e.label)
        if e.onset is not None:
            rec["onset"] = int(e.onset)
        if e.timestamps is not None:
            rec["timestamps"] = list(e.timestamps)
        sequences.append(rec)
    save_document(path, "manifest", {"sequences": sequences})


def read_manifest(path) -> list:
    """Frame paths are resolved relative to the manifest's directory."""
    doc = load_document(path, "manifest")
    base = Path(path).parent
    entries = []
    for i, rec in enumerate(doc.get("sequences", [])):
        try:
            city_id = str(rec["city_id"])
            frames = [base / f for f in rec["frames"]]
        except (KeyError, TypeError) as exc:
            raise FormatError(f"{path}: sequence {i} malformed ({exc})") from None
        if len(frames) < 2:
            raise FormatError(f"{path}: sequence {city_id!r} needs at least 2 frames")
        label = rec.get("label")
        onset = rec.get("onset")
        entries.append(
            SequenceEntry(
                city_id,
                frames,
                int(label) if label is not None else None,
                int(onset) if onset is not None else None,
                rec.get("timestamps"),
            )
        )
    return entries
