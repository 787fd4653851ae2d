"""PCM WAV ingestion and the Waveform value type."""

import io
import warnings
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.io import wavfile

from app.exceptions import AudioFormatError
from app.utils.files_utils import PathLike, atomic_write_bytes


PCM16_SCALE = 32768.0


class Waveform(BaseModel):
    """Mono audio samples with their sample rate."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    samples: np.ndarray = Field(..., description="float64 samples, nominally in [-1, 1]")
    rate: int = Field(..., gt=0, description="Sample rate in Hz")

    @field_validator("samples", mode="before")
    @classmethod
    def _as_float_array(cls, v):
        arr = np.array(v, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        arr.setflags(write=False)
        return arr

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration_ms(self) -> float:
        return 1000.0 * len(self) / self.rate

    def with_samples(self, samples: np.ndarray) -> "Waveform":
        return Waveform(samples=samples, rate=self.rate)


def read_pcm_wav(path: PathLike) -> Waveform:
    """Read a 16-bit PCM RIFF/WAVE file as a mono Waveform.

    Stereo is averaged across channels; samples are scaled by 1/32768.
    """
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(str(path))
    except OSError as e:
        raise AudioFormatError(f"cannot read {path}: {e}", code="IO") from None
    except (ValueError, EOFError) as e:
        raise AudioFormatError(f"{path}: malformed WAV header: {e}", code="MALFORMED_HEADER") from None

    if data.dtype != np.int16:
        raise AudioFormatError(
            f"{path}: unsupported encoding {data.dtype}, only 16-bit PCM is accepted",
            code="UNSUPPORTED_ENCODING",
        )
    if data.ndim == 2:
        if data.shape[1] not in (1, 2):
            raise AudioFormatError(
                f"{path}: {data.shape[1]} channels, only mono or stereo is accepted",
                code="UNSUPPORTED_ENCODING",
            )
        data = data.astype(np.float64).mean(axis=1)
    return Waveform(samples=np.asarray(data, dtype=np.float64) / PCM16_SCALE, rate=int(rate))


def encode_pcm_wav(w: Waveform) -> bytes:
    pcm = np.round(np.clip(w.samples, -1.0, 1.0) * (PCM16_SCALE - 1)).astype("<i2")
    buf = io.BytesIO()
    wavfile.write(buf, w.rate, pcm)
    return buf.getvalue()


def write_pcm_wav(path: PathLike, w: Waveform) -> Path:
    return atomic_write_bytes(path, encode_pcm_wav(w))


def resample(w: Waveform, target_rate: int) -> Waveform:
    """Linear-interpolation resampling.

    Output length is round(len * target / source); output sample k sits at
    input position k * source / target (clamped at the last sample).
    """
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == w.rate or len(w) == 0:
        return Waveform(samples=w.samples, rate=target_rate)
    n_out = int(round(len(w) * target_rate / w.rate))
    positions = np.arange(n_out, dtype=np.float64) * (w.rate / target_rate)
    source = np.arange(len(w), dtype=np.float64)
    return Waveform(samples=np.interp(positions, source, w.samples), rate=target_rate)
