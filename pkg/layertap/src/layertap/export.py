"""Batch jobs: encoder-state export and early-exit transcription.

Utterances are processed independently in manifest order; all file writes go
to distinct paths, so partial reruns simply overwrite their own outputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .errors import ExportError
from .model import SpeechModel
from .store import read_audio_manifest, sha256_file, write_hypotheses, write_manifest, write_xse1


@dataclass(frozen=True)
class ExportJob:
    """Everything one batch run needs. CLI flags map onto these fields 1:1."""

    model: str
    audio_manifest: str
    layers: tuple[int, ...]
    out_dir: str
    task: str = "transcribe"
    language: str | None = None
    split: str = "test"
    max_new_tokens: int = 32
    forced_token_ids: tuple[int, ...] = field(default_factory=tuple)
    dataset_tag: str = ""
    checksums: bool = False

    def __post_init__(self) -> None:
        if not self.layers:
            raise ExportError("at least one layer index is required")
        if len(set(self.layers)) != len(self.layers):
            raise ExportError(f"duplicate layer indices in {self.layers}")
        if self.split not in ("dev", "test"):
            raise ExportError(f"split must be dev|test, got {self.split!r}")


def _load(job: ExportJob, model: SpeechModel | None) -> tuple[SpeechModel, list[tuple[str, str, Path]]]:
    if model is None:
        model = SpeechModel(job.model)
    for layer in job.layers:
        model.check_layer(layer)
    return model, read_audio_manifest(job.audio_manifest)


def export_encoder_states(job: ExportJob, model: SpeechModel | None = None) -> Path:
    """Write one XSE1 file per (utterance, layer) plus the manifest indexing them.

    States are the raw outputs of each encoder layer. Chunked utterances are
    concatenated along time, so every layer of one utterance shares one frame
    count. Returns the manifest path.
    """
    model, entries = _load(job, model)
    out = Path(job.out_dir)
    records: list[dict] = []
    meta_utts: list[dict] = []
    for utt_id, lang, audio_path in entries:
        chunks = model.chunk_states(model.load_audio(audio_path))
        for layer in job.layers:
            states = torch.cat([c[layer] for c in chunks], dim=1)[0].numpy()
            rel = f"{lang}/{utt_id}__layer{layer:02d}.xse1"
            write_xse1(states, out / rel)
            record = {"utt_id": utt_id, "lang": lang, "layer": layer, "file": rel}
            if job.checksums:
                record["checksum"] = sha256_file(out / rel)
            records.append(record)
        meta_utts.append({"utt_id": utt_id, "lang": lang, "chunks": len(chunks)})
    manifest_path = out / "manifest.json"
    write_manifest(records, manifest_path, dataset_tag=job.dataset_tag)
    meta = {
        "model": job.model,
        "layers": list(job.layers),
        "window_samples": model.window_samples,
        "sampling_rate": model.sampling_rate,
        "hidden_size": model.hidden_size,
        "utterances": meta_utts,
    }
    (out / "export_meta.json").write_text(json.dumps(meta, indent=1) + "\n", encoding="utf-8")
    return manifest_path


def _decode_states(model: SpeechModel, job: ExportJob, per_chunk: list[torch.Tensor]) -> str:
    prefix = model.decoder_prefix(job.task, job.language, job.forced_token_ids)
    parts = []
    for states in per_chunk:
        ids = model.greedy(states, prefix, job.max_new_tokens)
        text = model.render(ids)
        if text:
            parts.append(text)
    return " ".join(parts)


def decode_from_layer(job: ExportJob, layer: int, model: SpeechModel | None = None) -> list[Path]:
    """Early-exit transcription: substitute encoder layer `layer`, apply the
    model's pre-decoder transform once, decode greedily, and write one TSV per
    language under the sweep naming contract. Returns the written paths.
    """
    model, entries = _load(job, model)
    model.check_layer(layer)
    by_lang: dict[str, dict[str, str]] = {}
    for utt_id, lang, audio_path in entries:
        chunks = model.chunk_states(model.load_audio(audio_path))
        substituted = [model.pre_decoder_transform(c[layer]) for c in chunks]
        by_lang.setdefault(lang, {})[utt_id] = _decode_states(model, job, substituted)
    return [
        write_hypotheses(hyps, job.out_dir, lang, job.split, layer)
        for lang, hyps in sorted(by_lang.items())
    ]


def transcribe(job: ExportJob, model: SpeechModel | None = None) -> dict[str, str]:
    """Standard transcription: the unmodified encoder forward, same decoding
    settings as decode_from_layer. The reference the top layer must reproduce.
    """
    model, entries = _load(job, model)
    out: dict[str, str] = {}
    for utt_id, _, audio_path in entries:
        per_chunk = model.encoder_forward(model.load_audio(audio_path))
        out[utt_id] = _decode_states(model, job, per_chunk)
    return out
