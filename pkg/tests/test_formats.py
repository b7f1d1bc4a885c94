import numpy as np
import pytest

from floodkit import formats
from floodkit.errors import FormatError, SchemaError


class TestFeatureCsv:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        names = ("contrast", "energy")
        X = rng.random((5, 2)) * 1e3
        labels = rng.integers(0, 2, 5)
        path = tmp_path / "f.csv"
        formats.write_feature_csv(path, names, X, labels=labels, groups=["a"] * 5)
        table = formats.read_feature_csv(path)
        assert table.names == names
        assert np.array_equal(table.X, X)  # repr round-trips floats exactly
        assert np.array_equal(table.labels, labels)
        assert table.groups == ["a"] * 5

    def test_unlabeled(self, tmp_path):
        path = tmp_path / "f.csv"
        formats.write_feature_csv(path, ("x",), np.array([[1.5]]))
        table = formats.read_feature_csv(path)
        assert table.labels is None and table.groups is None

    def test_reserved_name_rejected(self, tmp_path):
        with pytest.raises(SchemaError):
            formats.write_feature_csv(tmp_path / "f.csv", ("label",), np.array([[1.0]]))

    def test_bad_column_count(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("a,b\n1.0\n")
        with pytest.raises(FormatError, match="columns"):
            formats.read_feature_csv(path)

    def test_non_numeric_value(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("a\nxyz\n")
        with pytest.raises(FormatError):
            formats.read_feature_csv(path)

    def test_non_binary_label(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("a,label\n1.0,3\n")
        with pytest.raises(FormatError):
            formats.read_feature_csv(path)

    def test_deterministic_bytes(self, tmp_path):
        X = np.array([[0.1, 0.2], [1 / 3, 2 / 3]])
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        formats.write_feature_csv(a, ("u", "v"), X)
        formats.write_feature_csv(b, ("u", "v"), X)
        assert a.read_bytes() == b.read_bytes()


class TestScoreCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "s.csv"
        formats.write_score_csv(
            path, {"m1": [0.25, 0.5], "m2": [1.0, 0.0]}, labels=[1, 0]
        )
        names, streams, labels = formats.read_score_csv(path)
        assert names == ("m1", "m2")
        assert np.array_equal(streams, np.array([[0.25, 0.5], [1.0, 0.0]]))
        assert list(labels) == [1, 0]

    def test_unequal_lengths_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            formats.write_score_csv(tmp_path / "s.csv", {"a": [0.1], "b": [0.1, 0.2]})


class TestDocuments:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "d.json"
        formats.save_document(path, "vocabulary", {"terms": ["a"]})
        doc = formats.load_document(path, "vocabulary")
        assert doc["terms"] == ["a"]

    def test_kind_checked(self, tmp_path):
        path = tmp_path / "d.json"
        formats.save_document(path, "model", {})
        with pytest.raises(FormatError, match="kind"):
            formats.load_document(path, "vocabulary")

    def test_version_checked(self, tmp_path):
        path = tmp_path / "d.json"
        path.write_text('{"format_version": 42, "kind": "model"}')
        with pytest.raises(FormatError, match="format_version"):
            formats.load_document(path)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "d.json"
        path.write_text("{")
        with pytest.raises(FormatError):
            formats.load_document(path)

    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        payload = {"zeta": 1, "alpha": [0.1, 0.2], "nested": {"b": 2, "a": 1}}
        formats.save_document(a, "model", payload)
        formats.save_document(b, "model", payload)
        assert a.read_bytes() == b.read_bytes()


class TestManifest:
    def test_round_trip(self, tmp_path):
        entries = [
            formats.SequenceEntry("c0", ["c0/f0.ppm", "c0/f1.ppm"], label=1, onset=1),
            formats.SequenceEntry("c1", ["c1/f0.ppm", "c1/f1.ppm"]),
        ]
        path = tmp_path / "manifest.json"
        formats.write_manifest(path, entries)
        got = formats.read_manifest(path)
        assert [e.city_id for e in got] == ["c0", "c1"]
        assert got[0].label == 1 and got[0].onset == 1
        assert got[1].label is None
        assert got[0].frame_paths[0] == tmp_path / "c0/f0.ppm"

    def test_short_sequence_rejected(self, tmp_path):
        path = tmp_path / "manifest.json"
        formats.save_document(
            path, "manifest", {"sequences": [{"city_id": "x", "frames": ["only.ppm"]}]}
        )
        with pytest.raises(FormatError, match="2 frames"):
            formats.read_manifest(path)
