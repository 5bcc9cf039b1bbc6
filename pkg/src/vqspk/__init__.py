"""Speaker identification with MFCC features and LBG vector quantization."""

__version__ = "0.1.0"

from .audio import AudioClip, peak_normalize, read_wav, write_wav
from .mfcc import MfccConfig, extract_mfcc
from .recognizer import (
    MatchResult,
    SpeakerDb,
    SpeakerModel,
    distance_matrix,
    enroll,
    identify,
    load_db,
    save_db,
)
from .signal import NotchSpec, SpeakerProfile, notch_filter, synth_speaker_clip
from .vq import Codebook, LbgConfig, avg_distortion, quantize, train_codebook

__all__ = [
    "AudioClip",
    "Codebook",
    "LbgConfig",
    "MatchResult",
    "MfccConfig",
    "NotchSpec",
    "SpeakerDb",
    "SpeakerModel",
    "SpeakerProfile",
    "avg_distortion",
    "distance_matrix",
    "enroll",
    "extract_mfcc",
    "identify",
    "load_db",
    "notch_filter",
    "peak_normalize",
    "quantize",
    "read_wav",
    "save_db",
    "synth_speaker_clip",
    "train_codebook",
    "write_wav",
]
