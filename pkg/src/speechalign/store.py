"""Bit-exact storage of frame-embedding sequences and the manifests that index them.

File format (XSE1), fixed little-endian so files are portable across machines:

    bytes 0-3    ASCII magic "XSE1"
    bytes 4-7    unsigned 32-bit frame count m
    bytes 8-11   unsigned 32-bit embedding dim d
    bytes 12-    m * d IEEE-754 binary32 values, row-major

One file holds one (utterance, layer) sequence; a manifest (UTF-8 JSON)
catalogs many files:

    {"dataset_tag": "...", "records": [
        {"utt_id": "...", "lang": "...", "layer": 0, "file": "rel/path.xse1",
         "checksum": "<sha256 hex, optional>"}, ...]}
"""

from __future__ import annotations

import hashlib
import json
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError

MAGIC = b"XSE1"
_HEADER = struct.Struct("<4sII")


@dataclass(frozen=True, eq=False)
class EmbeddingSequence:
    """One utterance's frame-level encoder states: float32 matrix, frames x dim.

    All values must be finite; frames >= 1 and dim >= 1.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        # values beyond float32 range become inf here; the finiteness check
        # below rejects them, so the cast itself need not warn
        with np.errstate(over="ignore"):
            arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise ValidationError(f"embedding sequence must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"embedding sequence needs frames >= 1 and dim >= 1, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValidationError("embedding sequence contains non-finite values")
        object.__setattr__(self, "data", arr)

    @property
    def frames(self) -> int:
        return int(self.data.shape[0])

    @property
    def dim(self) -> int:
        return int(self.data.shape[1])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingSequence):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(
            (self.data.view(np.uint32) == other.data.view(np.uint32)).all()
        )

    def __repr__(self) -> str:
        return f"EmbeddingSequence(frames={self.frames}, dim={self.dim})"


def write_embedding(seq: EmbeddingSequence, path: str | Path) -> None:
    """Write `seq` to `path` in XSE1 format. Round-trips bit-exactly via read_embedding."""
    path = Path(path)
    header = _HEADER.pack(MAGIC, seq.frames, seq.dim)
    payload = np.ascontiguousarray(seq.data, dtype="<f4").tobytes()
    path.write_bytes(header + payload)


def read_embedding(path: str | Path) -> EmbeddingSequence:
    """Read an XSE1 file. Rejects bad magic, size mismatches, and non-finite values."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, frames, dim = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if frames < 1 or dim < 1:
        raise FormatError(f"{path}: invalid header (frames={frames}, dim={dim})")
    expected = _HEADER.size + 4 * frames * dim
    if len(raw) != expected:
        raise FormatError(f"{path}: payload size mismatch, expected {expected} bytes, got {len(raw)}")
    mat = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(frames, dim)
    try:
        return EmbeddingSequence(mat.copy())
    except ValidationError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def sha256_file(path: str | Path) -> str:
    """Hex sha256 of a file's bytes, the checksum scheme used by manifests."""
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass(frozen=True)
class UtteranceRecord:
    """Catalog entry binding an utterance at one layer to its embedding file."""

    utt_id: str
    lang: str
    layer: int
    file: str
    checksum: str | None = None


@dataclass
class UtteranceManifest:
    """Ordered catalog of utterance records; (utt_id, layer) is unique within it.

    `base_dir` anchors relative file paths and is set by load_manifest; it is
    not part of the serialized form.
    """

    records: list[UtteranceRecord]
    dataset_tag: str = ""
    base_dir: Path | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        seen: set[tuple[str, int]] = set()
        for rec in self.records:
            key = (rec.utt_id, rec.layer)
            if key in seen:
                raise ValidationError(f"duplicate manifest key (utt_id={rec.utt_id!r}, layer={rec.layer})")
            seen.add(key)

    def resolve(self, record: UtteranceRecord) -> Path:
        """Absolute-ish path of a record's embedding file."""
        p = Path(record.file)
        if self.base_dir is not None and not p.is_absolute():
            return self.base_dir / p
        return p

    def for_layer(self, layer: int) -> list[UtteranceRecord]:
        """Records of one layer, in manifest order (the gold parallel order)."""
        return [r for r in self.records if r.layer == layer]

    def lookup(self, utt_id: str, layer: int) -> UtteranceRecord:
        for rec in self.records:
            if rec.utt_id == utt_id and rec.layer == layer:
                return rec
        raise ValidationError(f"no manifest record for (utt_id={utt_id!r}, layer={layer})")


def load_manifest(
    path: str | Path,
    *,
    missing_files: str = "error",
    verify_checksums: bool = False,
) -> UtteranceManifest:
    """Load and validate a manifest JSON file.

    `missing_files` controls dangling file references: "error" raises,
    "warn" emits a warning, "ignore" skips the existence check. Checksums
    are verified only when present on a record and `verify_checksums` is set.
    """
    if missing_files not in ("error", "warn", "ignore"):
        raise ValidationError(f"missing_files must be error|warn|ignore, got {missing_files!r}")
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: cannot parse manifest: {exc}") from exc
    if not isinstance(doc, dict) or "records" not in doc:
        raise FormatError(f"{path}: manifest must be an object with a 'records' list")
    raw_records = doc["records"]
    if not isinstance(raw_records, list):
        raise FormatError(f"{path}: 'records' must be a list")

    records = []
    for i, raw in enumerate(raw_records):
        try:
            records.append(
                UtteranceRecord(
                    utt_id=str(raw["utt_id"]),
                    lang=str(raw["lang"]),
                    layer=int(raw["layer"]),
                    file=str(raw["file"]),
                    checksum=str(raw["checksum"]) if raw.get("checksum") is not None else None,
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: record {i} is malformed: {exc}") from exc

    manifest = UtteranceManifest(
        records=records,
        dataset_tag=str(doc.get("dataset_tag", "")),
        base_dir=path.parent,
    )

    if missing_files != "ignore":
        for rec in manifest.records:
            # Selection manifests may carry empty file fields on purpose.
            if rec.file == "":
                continue
            target = manifest.resolve(rec)
            if not target.exists():
                msg = f"{path}: record (utt_id={rec.utt_id!r}, layer={rec.layer}) references missing file {target}"
                if missing_files == "error":
                    raise ValidationError(msg)
                warnings.warn(msg, stacklevel=2)

    if verify_checksums:
        for rec in manifest.records:
            if rec.checksum is None or rec.file == "":
                continue
            actual = sha256_file(manifest.resolve(rec))
            if actual != rec.checksum:
                raise ValidationError(
                    f"{path}: checksum mismatch for (utt_id={rec.utt_id!r}, layer={rec.layer}): "
                    f"expected {rec.checksum}, got {actual}"
                )
    return manifest


def save_manifest(manifest: UtteranceManifest, path: str | Path) -> None:
    """Write a manifest as deterministic UTF-8 JSON."""
    doc = {
        "dataset_tag": manifest.dataset_tag,
        "records": [
            {
                "utt_id": r.utt_id,
                "lang": r.lang,
                "layer": r.layer,
                "file": r.file,
                **({"checksum": r.checksum} if r.checksum is not None else {}),
            }
            for r in manifest.records
        ],
    }
    Path(path).write_text(json.dumps(doc, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
