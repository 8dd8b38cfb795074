import wave

import numpy as np
import pytest
import torch
from transformers import WhisperConfig, WhisperForConditionalGeneration

# small enough to run everything on CPU in seconds, deep enough that layer
# substitution and the pre-decoder transform are observable
TINY = dict(
    vocab_size=207,
    d_model=32,
    encoder_layers=4,
    decoder_layers=2,
    encoder_attention_heads=2,
    decoder_attention_heads=2,
    encoder_ffn_dim=64,
    decoder_ffn_dim=64,
    num_mel_bins=80,
    max_source_positions=64,
    max_target_positions=48,
    decoder_start_token_id=1,
    eos_token_id=2,
    pad_token_id=0,
    bos_token_id=0,
    suppress_tokens=None,
    begin_suppress_tokens=None,
)

WINDOW_SAMPLES = TINY["max_source_positions"] * 2 * 160  # hop length 160


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory):
    torch.manual_seed(0)
    model = WhisperForConditionalGeneration(WhisperConfig(**TINY))
    path = tmp_path_factory.mktemp("checkpoint")
    model.save_pretrained(path)
    return path


def write_wav(path, seconds=1.0, freq=440.0, rate=16000, channels=1):
    t = np.arange(int(seconds * rate)) / rate
    signal = 0.4 * np.sin(2 * np.pi * freq * t)
    pcm = (signal * 32767).astype(np.int16)
    if channels == 2:
        pcm = np.column_stack([pcm, (pcm * 0.5).astype(np.int16)]).reshape(-1)
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(channels)
        wf.setsampwidth(2)
        wf.setframerate(rate)
        wf.writeframes(pcm.tobytes())
    return path


@pytest.fixture(scope="session")
def audio_tree(tmp_path_factory):
    """Four short clips in two languages plus the manifest indexing them."""
    root = tmp_path_factory.mktemp("audio")
    entries = [
        ("jv_a", "jv", 440.0),
        ("jv_b", "jv", 660.0),
        ("ast_a", "ast", 550.0),
        ("ast_b", "ast", 330.0),
    ]
    lines = []
    for utt_id, lang, freq in entries:
        write_wav(root / f"{utt_id}.wav", seconds=1.0, freq=freq)
        lines.append(f"{utt_id}\t{lang}\t{utt_id}.wav")
    manifest = root / "audio.tsv"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest
