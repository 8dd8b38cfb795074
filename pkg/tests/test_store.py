"""Embedding file format and manifest loading."""

import json
import struct

import numpy as np
import pytest

from speechalign import (
    EmbeddingSequence,
    FormatError,
    UtteranceManifest,
    UtteranceRecord,
    ValidationError,
    load_manifest,
    read_embedding,
    save_manifest,
    sha256_file,
    write_embedding,
)


class TestEmbeddingSequence:
    def test_rejects_nan(self):
        with pytest.raises(ValidationError):
            EmbeddingSequence(np.array([[np.nan, 1.0]]))

    def test_rejects_inf(self):
        with pytest.raises(ValidationError):
            EmbeddingSequence(np.array([[np.inf]]))

    def test_rejects_overflowing_float64(self):
        # 1e300 overflows to inf when stored as float32
        with pytest.raises(ValidationError):
            EmbeddingSequence(np.array([[1e300]]))

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            EmbeddingSequence(np.zeros((0, 4), dtype=np.float32))
        with pytest.raises(ValidationError):
            EmbeddingSequence(np.zeros((4, 0), dtype=np.float32))

    def test_rejects_wrong_ndim(self):
        with pytest.raises(ValidationError):
            EmbeddingSequence(np.zeros(3, dtype=np.float32))

    def test_shape_properties(self):
        seq = EmbeddingSequence(np.zeros((3, 5), dtype=np.float32))
        assert seq.frames == 3
        assert seq.dim == 5


class TestFileFormat:
    def test_minimal_file_is_16_bytes(self, tmp_path):
        # 12-byte header (magic + two u32 counts) plus one float32 payload
        path = tmp_path / "one.xse1"
        write_embedding(EmbeddingSequence(np.array([[0.5]], dtype=np.float32)), path)
        raw = path.read_bytes()
        assert len(raw) == 16
        assert raw[:4] == b"XSE1"
        assert struct.unpack("<II", raw[4:12]) == (1, 1)
        assert struct.unpack("<f", raw[12:]) == (0.5,)

    def test_2x3_file_size(self, tmp_path):
        path = tmp_path / "s.xse1"
        seq = EmbeddingSequence(np.arange(6, dtype=np.float32).reshape(2, 3))
        write_embedding(seq, path)
        assert path.stat().st_size == 12 + 24
        assert read_embedding(path) == seq

    def test_roundtrip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(7)
        for shape in [(1, 1), (3, 4), (17, 9), (128, 32)]:
            seq = EmbeddingSequence(rng.standard_normal(shape).astype(np.float32))
            path = tmp_path / "rt.xse1"
            write_embedding(seq, path)
            back = read_embedding(path)
            assert back == seq
            assert back.data.tobytes() == seq.data.tobytes()

    def test_roundtrip_preserves_denormals_and_negative_zero(self, tmp_path):
        vals = np.array([[1e-42, -0.0, 3.4e38, -1.1754944e-38]], dtype=np.float32)
        path = tmp_path / "edge.xse1"
        write_embedding(EmbeddingSequence(vals), path)
        assert read_embedding(path).data.tobytes() == vals.tobytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.xse1"
        path.write_bytes(b"XXXX" + struct.pack("<II", 1, 1) + struct.pack("<f", 0.5))
        with pytest.raises(FormatError, match="magic"):
            read_embedding(path)

    def test_truncated_payload(self, tmp_path):
        # header says 2x2 but only 3 values follow
        path = tmp_path / "trunc.xse1"
        path.write_bytes(b"XSE1" + struct.pack("<II", 2, 2) + struct.pack("<3f", 1, 2, 3))
        with pytest.raises(FormatError, match="size mismatch"):
            read_embedding(path)

    def test_oversized_payload(self, tmp_path):
        path = tmp_path / "over.xse1"
        path.write_bytes(b"XSE1" + struct.pack("<II", 1, 1) + struct.pack("<2f", 1, 2))
        with pytest.raises(FormatError):
            read_embedding(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "hdr.xse1"
        path.write_bytes(b"XSE")
        with pytest.raises(FormatError):
            read_embedding(path)

    def test_nonfinite_payload_rejected(self, tmp_path):
        path = tmp_path / "nan.xse1"
        path.write_bytes(b"XSE1" + struct.pack("<II", 1, 1) + struct.pack("<f", float("nan")))
        with pytest.raises(FormatError, match="non-finite"):
            read_embedding(path)

    def test_zero_frame_header_rejected(self, tmp_path):
        path = tmp_path / "zero.xse1"
        path.write_bytes(b"XSE1" + struct.pack("<II", 0, 4))
        with pytest.raises(FormatError):
            read_embedding(path)


def _write_files(tmp_path, names):
    for name in names:
        write_embedding(EmbeddingSequence(np.ones((1, 2), dtype=np.float32)), tmp_path / name)


class TestManifest:
    def test_load_two_records(self, tmp_path):
        _write_files(tmp_path, ["a.xse1", "b.xse1"])
        doc = {
            "dataset_tag": "challenge",
            "records": [
                {"utt_id": "a", "lang": "eng", "layer": 32, "file": "a.xse1"},
                {"utt_id": "b", "lang": "eng", "layer": 32, "file": "b.xse1"},
            ],
        }
        path = tmp_path / "m.json"
        path.write_text(json.dumps(doc))
        manifest = load_manifest(path)
        assert len(manifest.records) == 2
        assert manifest.dataset_tag == "challenge"
        assert manifest.resolve(manifest.records[0]).exists()

    def test_duplicate_key_rejected(self, tmp_path):
        _write_files(tmp_path, ["a.xse1"])
        doc = {
            "dataset_tag": "",
            "records": [
                {"utt_id": "a", "lang": "eng", "layer": 32, "file": "a.xse1"},
                {"utt_id": "a", "lang": "eng", "layer": 32, "file": "a.xse1"},
            ],
        }
        path = tmp_path / "m.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ValidationError, match="duplicate"):
            load_manifest(path)

    def test_same_utt_different_layer_ok(self, tmp_path):
        _write_files(tmp_path, ["a24.xse1", "a32.xse1"])
        doc = {
            "dataset_tag": "",
            "records": [
                {"utt_id": "a", "lang": "eng", "layer": 24, "file": "a24.xse1"},
                {"utt_id": "a", "lang": "eng", "layer": 32, "file": "a32.xse1"},
            ],
        }
        path = tmp_path / "m.json"
        path.write_text(json.dumps(doc))
        manifest = load_manifest(path)
        assert [r.layer for r in manifest.for_layer(24)] == [24]
        assert manifest.lookup("a", 32).file == "a32.xse1"

    def test_empty_manifest_valid(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"dataset_tag": "x", "records": []}))
        assert load_manifest(path).records == []

    def test_dangling_reference_error_then_warn(self, tmp_path):
        doc = {"dataset_tag": "", "records": [{"utt_id": "a", "lang": "eng", "layer": 1, "file": "gone.xse1"}]}
        path = tmp_path / "m.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ValidationError, match="missing file"):
            load_manifest(path)
        with pytest.warns(UserWarning):
            load_manifest(path, missing_files="warn")
        load_manifest(path, missing_files="ignore")

    def test_parse_failure(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text("{not json")
        with pytest.raises(FormatError):
            load_manifest(path)

    def test_checksum_verified_only_when_present(self, tmp_path):
        _write_files(tmp_path, ["a.xse1"])
        good = sha256_file(tmp_path / "a.xse1")
        doc = {
            "dataset_tag": "",
            "records": [
                {"utt_id": "a", "lang": "eng", "layer": 1, "file": "a.xse1", "checksum": good},
                {"utt_id": "b", "lang": "eng", "layer": 1, "file": "a.xse1"},
            ],
        }
        path = tmp_path / "m.json"
        path.write_text(json.dumps(doc))
        load_manifest(path, verify_checksums=True)

        doc["records"][0]["checksum"] = "0" * 64
        path.write_text(json.dumps(doc))
        load_manifest(path)  # not verified by default
        with pytest.raises(ValidationError, match="checksum"):
            load_manifest(path, verify_checksums=True)

    def test_save_load_roundtrip(self, tmp_path):
        _write_files(tmp_path, ["a.xse1"])
        manifest = UtteranceManifest(
            records=[UtteranceRecord("a", "jpn", 7, "a.xse1", None)],
            dataset_tag="sampled_full",
        )
        out = tmp_path / "saved.json"
        save_manifest(manifest, out)
        back = load_manifest(out)
        assert back.records == manifest.records
        assert back.dataset_tag == "sampled_full"
