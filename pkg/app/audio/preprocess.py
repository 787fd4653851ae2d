"""Amplitude normalisation, edge trimming and sound activity filtering."""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.ndimage import maximum_filter1d

from app.audio.wav import Waveform
from app.exceptions import AudioFormatError, PreprocessError
from app.schema import TARGET_RATE


MIN_ACTIVE_SAMPLES = 1024  # one analysis frame


class PreprocessConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    sad_threshold: float = Field(0.01, ge=0.0, lt=1.0, description="Absolute amplitude threshold")
    sad_buffer_ms: float = Field(50.0, ge=0.0, description="Buffer kept on either side of active samples")
    edge_trim_ms: float = Field(20.0, ge=0.0, description="Removed at the start and at the end")
    min_duration_ms: float = Field(500.0, ge=0.0, description="Raw recordings shorter than this are discarded")


def _ms_to_samples(ms: float, rate: int) -> int:
    return int(round(ms * rate / 1000.0))


def normalize_amplitude(w: Waveform) -> Waveform:
    """Peak normalisation; an all-zero signal is returned unchanged."""
    if len(w) == 0:
        return w
    peak = float(np.max(np.abs(w.samples)))
    if peak == 0.0:
        return w
    return w.with_samples(w.samples / peak)


def sound_activity_filter(w: Waveform, threshold: float = 0.01, buffer_ms: float = 50.0) -> Waveform:
    """Keep sample i iff some sample within ``buffer_ms`` of it reaches ``threshold``.

    Discarded regions are excised and the kept samples concatenated in order.
    """
    if len(w) == 0:
        return w
    loud = np.abs(w.samples) >= threshold
    half = int(np.floor(buffer_ms * w.rate / 1000.0))
    keep = maximum_filter1d(loud.astype(np.uint8), size=2 * half + 1, mode="constant", cval=0)
    return w.with_samples(w.samples[keep.astype(bool)])


def trim_edges(w: Waveform, edge_trim_ms: float = 20.0) -> Waveform:
    n = _ms_to_samples(edge_trim_ms, w.rate)
    if n == 0:
        return w
    if 2 * n >= len(w):
        return w.with_samples(np.empty(0))
    return w.with_samples(w.samples[n : len(w) - n])


def preprocess(w: Waveform, cfg: PreprocessConfig = PreprocessConfig()) -> Waveform:
    """normalize -> trim_edges -> sound_activity_filter.

    Raises:
        AudioFormatError: WRONG_RATE unless the input is at the target rate.
        PreprocessError: TOO_SHORT for raw clips under ``min_duration_ms``,
            NO_ACTIVITY when fewer than one frame of samples survives.
    """
    if w.rate != TARGET_RATE:
        raise AudioFormatError(
            f"preprocess expects {TARGET_RATE} Hz input, got {w.rate} Hz; resample first",
            code="WRONG_RATE",
        )
    if w.duration_ms < cfg.min_duration_ms:
        raise PreprocessError(
            f"recording lasts {w.duration_ms:.1f} ms, minimum is {cfg.min_duration_ms:.0f} ms",
            code="TOO_SHORT",
        )
    out = normalize_amplitude(w)
    out = trim_edges(out, cfg.edge_trim_ms)
    out = sound_activity_filter(out, cfg.sad_threshold, cfg.sad_buffer_ms)
    if len(out) < MIN_ACTIVE_SAMPLES:
        raise PreprocessError(
            f"only {len(out)} active samples after sound activity filtering "
            f"(need {MIN_ACTIVE_SAMPLES})",
            code="NO_ACTIVITY",
        )
    return out
