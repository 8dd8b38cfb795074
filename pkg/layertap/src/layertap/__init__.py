"""Bridge from Whisper-style checkpoints to the alignment toolkit's files:
per-layer encoder states (XSE1 + manifest) and early-exit greedy transcripts
(per-layer hypothesis TSVs).
"""

from .audio import chunk_waveform, load_wav
from .errors import AudioError, ExportError, LayerError
from .export import ExportJob, decode_from_layer, export_encoder_states, transcribe
from .model import SpeechModel
from .store import read_audio_manifest, write_hypotheses, write_manifest, write_xse1

__version__ = "0.1.0"

__all__ = [
    "AudioError",
    "ExportError",
    "ExportJob",
    "LayerError",
    "SpeechModel",
    "chunk_waveform",
    "decode_from_layer",
    "export_encoder_states",
    "load_wav",
    "read_audio_manifest",
    "transcribe",
    "write_hypotheses",
    "write_manifest",
    "write_xse1",
]
