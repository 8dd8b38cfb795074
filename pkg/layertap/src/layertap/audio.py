"""WAV decoding. Only integer PCM WAV is supported; sample rates must match
the model's feature extractor (no resampling here, by design: silent
resampling would change what the encoder sees between runs on different
machines).
"""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

from .errors import AudioError

_WIDTH_DTYPES = {2: np.int16, 4: np.int32}


def load_wav(path: str | Path, expected_rate: int) -> np.ndarray:
    """Decode to float32 mono in [-1, 1]. Stereo is averaged."""
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wf:
            rate = wf.getframerate()
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            frames = wf.readframes(wf.getnframes())
    except (OSError, wave.Error, EOFError) as exc:
        raise AudioError(f"cannot decode {path}: {exc}") from exc
    if rate != expected_rate:
        raise AudioError(f"{path}: sample rate {rate} != expected {expected_rate}; resample offline")
    if width not in _WIDTH_DTYPES:
        raise AudioError(f"{path}: only 16- or 32-bit integer PCM supported, got {8 * width}-bit")
    data = np.frombuffer(frames, dtype=_WIDTH_DTYPES[width]).astype(np.float32)
    if data.size == 0:
        raise AudioError(f"{path}: empty audio")
    if channels > 1:
        data = data.reshape(-1, channels).mean(axis=1)
    scale = float(np.iinfo(_WIDTH_DTYPES[width]).max)
    return data / scale


def chunk_waveform(wave_data: np.ndarray, window: int) -> list[np.ndarray]:
    """Split into model-window pieces; the last piece may be short."""
    if window < 1:
        raise AudioError(f"window must be >= 1 sample, got {window}")
    return [wave_data[i : i + window] for i in range(0, len(wave_data), window)] or [wave_data]
