from app.audio.preprocess import (
    PreprocessConfig,
    normalize_amplitude,
    preprocess,
    sound_activity_filter,
    trim_edges,
)
from app.audio.wav import Waveform, read_pcm_wav, resample, write_pcm_wav


__all__ = [
    "PreprocessConfig",
    "Waveform",
    "normalize_amplitude",
    "preprocess",
    "read_pcm_wav",
    "resample",
    "sound_activity_filter",
    "trim_edges",
    "write_pcm_wav",
]
