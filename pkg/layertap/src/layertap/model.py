"""Thin wrapper around a Whisper-style checkpoint.

Encoder states are captured with forward hooks on each encoder layer, so
every exported layer i holds the raw output of layer i, before the model's
final layer normalization. That normalization is the pre-decoder transform:
decoding from layer i applies it exactly once, to whichever layer was
substituted, and never again afterwards.

Decoding is plain greedy argmax with no token suppression and no sampling,
so equal inputs give equal tokens. Language/task control tokens are resolved
through the checkpoint's tokenizer when one is present; without a tokenizer,
explicit token ids can be forced instead and decoded ids are rendered as
space-joined integers.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from transformers import AutoTokenizer, WhisperFeatureExtractor, WhisperForConditionalGeneration
from transformers.modeling_outputs import BaseModelOutput

from .audio import chunk_waveform, load_wav
from .errors import ExportError, LayerError


class SpeechModel:
    def __init__(self, model_dir: str | Path):
        self.model_dir = str(model_dir)
        try:
            self.model = WhisperForConditionalGeneration.from_pretrained(self.model_dir).eval()
        except (OSError, ValueError, EnvironmentError) as exc:
            raise ExportError(f"cannot load model from {self.model_dir}: {exc}") from exc
        cfg = self.model.config
        self.n_layers: int = int(cfg.encoder_layers)
        self.hidden_size: int = int(cfg.d_model)
        if (Path(self.model_dir) / "preprocessor_config.json").exists():
            self.features = WhisperFeatureExtractor.from_pretrained(self.model_dir)
        else:
            self.features = WhisperFeatureExtractor(feature_size=cfg.num_mel_bins)
        # AutoTokenizer invents a default tokenizer for bare local checkpoints,
        # which would render ids through a vocabulary the model never saw; only
        # trust it when the checkpoint actually ships tokenizer files
        local = Path(self.model_dir)
        tokenizer_files = ("tokenizer.json", "tokenizer_config.json", "vocab.json")
        if local.is_dir() and not any((local / f).exists() for f in tokenizer_files):
            self.tokenizer = None
        else:
            try:
                self.tokenizer = AutoTokenizer.from_pretrained(self.model_dir)
            except Exception:
                self.tokenizer = None
        self.sampling_rate: int = int(self.features.sampling_rate)
        # the mel frontend halves the time axis, so one model window is
        # max_source_positions * 2 mel frames worth of samples
        self.window_samples: int = int(cfg.max_source_positions) * 2 * int(self.features.hop_length)

    def check_layer(self, layer: int) -> None:
        if not 1 <= layer <= self.n_layers:
            raise LayerError(f"layer {layer} outside 1..{self.n_layers}")

    def load_audio(self, path: str | Path) -> np.ndarray:
        return load_wav(path, self.sampling_rate)

    def _mel(self, piece: np.ndarray) -> torch.Tensor:
        batch = self.features(
            piece,
            sampling_rate=self.sampling_rate,
            padding="max_length",
            max_length=self.window_samples,
            truncation=True,
            return_tensors="pt",
        )
        return batch.input_features

    def chunk_states(self, waveform: np.ndarray) -> list[dict[int, torch.Tensor]]:
        """Raw per-layer encoder states for each model-window chunk.

        Every chunk yields states of shape (max_source_positions, d) for each
        layer 1..n; short final chunks are padded by the feature extractor,
        so all layers of one utterance share one frame count.
        """
        encoder = self.model.model.encoder
        out: list[dict[int, torch.Tensor]] = []
        for piece in chunk_waveform(waveform, self.window_samples):
            captured: dict[int, torch.Tensor] = {}
            hooks = [
                layer.register_forward_hook(
                    lambda module, args, output, idx=i: captured.__setitem__(idx, output.detach())
                )
                for i, layer in enumerate(encoder.layers, start=1)
            ]
            try:
                with torch.no_grad():
                    encoder(self._mel(piece))
            finally:
                for h in hooks:
                    h.remove()
            if len(captured) != self.n_layers:
                raise ExportError(f"captured {len(captured)} layer outputs, expected {self.n_layers}")
            out.append(captured)
        return out

    def pre_decoder_transform(self, states: torch.Tensor) -> torch.Tensor:
        """The model's final encoder normalization; the decoder expects its output."""
        with torch.no_grad():
            return self.model.model.encoder.layer_norm(states)

    def encoder_forward(self, waveform: np.ndarray) -> list[torch.Tensor]:
        """Per-chunk states exactly as the unmodified model hands them to the decoder."""
        encoder = self.model.model.encoder
        out = []
        for piece in chunk_waveform(waveform, self.window_samples):
            with torch.no_grad():
                out.append(encoder(self._mel(piece)).last_hidden_state)
        return out

    def decoder_prefix(self, task: str, language: str | None, forced_token_ids: tuple[int, ...]) -> list[int]:
        cfg = self.model.config
        prefix = [int(cfg.decoder_start_token_id)]
        wants_control = language is not None or task != "transcribe"
        if self.tokenizer is None:
            if wants_control:
                raise ExportError(
                    "language/task tokens need tokenizer files next to the checkpoint; "
                    "pass explicit forced token ids instead"
                )
        elif wants_control or not forced_token_ids:
            tokens = []
            if language is not None:
                tokens.append(f"<|{language}|>")
            tokens.append(f"<|{task}|>")
            ids = self.tokenizer.convert_tokens_to_ids(tokens)
            unknown = [t for t, i in zip(tokens, ids) if i is None or i == self.tokenizer.unk_token_id]
            if unknown:
                raise ExportError(f"tokenizer does not know control tokens {unknown}")
            prefix.extend(int(i) for i in ids)
        prefix.extend(int(i) for i in forced_token_ids)
        return prefix

    def greedy(self, states: torch.Tensor, prefix: list[int], max_new_tokens: int) -> list[int]:
        """Deterministic argmax decode; returns generated ids, eos excluded."""
        if max_new_tokens < 1:
            raise ExportError(f"max_new_tokens must be >= 1, got {max_new_tokens}")
        eos = int(self.model.config.eos_token_id)
        enc = BaseModelOutput(last_hidden_state=states)
        ids = torch.tensor([prefix], dtype=torch.long)
        generated: list[int] = []
        for _ in range(max_new_tokens):
            with torch.no_grad():
                logits = self.model(encoder_outputs=enc, decoder_input_ids=ids).logits
            next_id = int(logits[0, -1].argmax())
            if next_id == eos:
                break
            generated.append(next_id)
            ids = torch.cat([ids, torch.tensor([[next_id]], dtype=torch.long)], dim=1)
        return generated

    def render(self, ids: list[int]) -> str:
        if self.tokenizer is not None:
            return self.tokenizer.decode(ids, skip_special_tokens=True).strip()
        return " ".join(str(i) for i in ids)
