"""Writers for the evaluation toolkit's file contracts.

This package talks to the evaluation side only through files, so the formats
are implemented here against their byte-level documentation rather than by
importing the consumer.

Embedding files (XSE1), little-endian:

    bytes 0-3    ASCII magic "XSE1"
    bytes 4-7    uint32 frame count m
    bytes 8-11   uint32 embedding dim d
    bytes 12-    m * d float32 values, row-major

Manifest JSON: {"dataset_tag": str, "records": [{"utt_id", "lang", "layer",
"file", "checksum"?}, ...]} with file paths relative to the manifest.

Hypothesis TSVs: <root>/<lang>/<split>/layer_<i>.tsv, lines "utt_id\ttext".
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import ExportError

_HEADER = struct.Struct("<4sII")


def write_xse1(states: np.ndarray, path: str | Path) -> None:
    """Write one utterance's (frames, dim) float32 state matrix."""
    arr = np.ascontiguousarray(states, dtype=np.float32)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ExportError(f"states must be a nonempty 2-D matrix, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ExportError("states contain non-finite values")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(b"XSE1", arr.shape[0], arr.shape[1]))
        fh.write(arr.tobytes(order="C"))


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(
    records: list[dict],
    path: str | Path,
    *,
    dataset_tag: str = "",
) -> None:
    """Write the embedding catalog. Records are emitted in the given order."""
    for i, rec in enumerate(records):
        missing = {"utt_id", "lang", "layer", "file"} - rec.keys()
        if missing:
            raise ExportError(f"record {i} lacks {sorted(missing)}")
    doc = {"dataset_tag": dataset_tag, "records": records}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def write_hypotheses(
    hypotheses: dict[str, str],
    root: str | Path,
    lang: str,
    split: str,
    layer: int,
) -> Path:
    """Write one layer's transcript file under the sweep naming contract."""
    for utt_id, text in hypotheses.items():
        if "\t" in utt_id or "\n" in utt_id or "\t" in text or "\n" in text:
            raise ExportError(f"utt {utt_id!r}: tabs/newlines cannot be stored in a TSV")
    out = Path(root) / lang / split / f"layer_{layer}.tsv"
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = "".join(f"{u}\t{t}\n" for u, t in hypotheses.items())
    out.write_text(lines, encoding="utf-8")
    return out


def read_audio_manifest(path: str | Path) -> list[tuple[str, str, Path]]:
    """Read the audio catalog TSV: utt_id, lang, audio path per line.

    Relative audio paths resolve against the manifest's directory.
    """
    path = Path(path)
    entries: list[tuple[str, str, Path]] = []
    seen: set[str] = set()
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ExportError(f"cannot read audio manifest {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ExportError(f"{path}:{lineno}: expected utt_id<TAB>lang<TAB>path")
        utt_id, lang, audio = parts
        if not utt_id or not lang or not audio:
            raise ExportError(f"{path}:{lineno}: empty field")
        if utt_id in seen:
            raise ExportError(f"{path}:{lineno}: duplicate utt_id {utt_id!r}")
        seen.add(utt_id)
        audio_path = Path(audio)
        if not audio_path.is_absolute():
            audio_path = path.parent / audio_path
        entries.append((utt_id, lang, audio_path))
    if not entries:
        raise ExportError(f"{path}: no entries")
    return entries
