"""Framing, MFCC and delta features.

Per frame: Hann window, power spectrum, triangular HTK-mel filterbank,
natural log with an absolute floor, orthonormal DCT-II, first ``n_coeffs``
coefficients (c0 included). Deltas use the regression form over +-N frames
with edge replication.
"""

from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.fft import dct, idct
from scipy.signal import get_window

from app.audio.wav import Waveform
from app.exceptions import FeatureError
from app.schema import TARGET_RATE


class MfccConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    frame_len: int = Field(1024, gt=0, description="Samples per frame (23.2 ms at 44.1 kHz)")
    hop: int = Field(441, gt=0, description="Samples between frame starts (10 ms)")
    n_mels: int = Field(40, gt=0)
    n_coeffs: int = Field(13, gt=0)
    window: str = "hann"
    fmin: float = Field(0.0, ge=0.0)
    fmax: float = Field(22050.0, gt=0.0)
    log_floor: float = Field(1e-10, gt=0.0)
    delta_halfwidth: int = Field(2, ge=1)

    @field_validator("window")
    @classmethod
    def _hann_only(cls, v: str) -> str:
        if v != "hann":
            raise ValueError("only the hann window is supported")
        return v

    @model_validator(mode="after")
    def _check(self) -> "MfccConfig":
        if self.hop > self.frame_len:
            raise ValueError("hop must not exceed frame_len")
        if self.n_coeffs > self.n_mels:
            raise ValueError("n_coeffs must not exceed n_mels")
        if self.fmin >= self.fmax:
            raise ValueError("fmin must be below fmax")
        return self


class FeatureMatrix(BaseModel):
    """T x 39 rows: 13 static | 13 delta | 13 delta-delta."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    rows: np.ndarray
    recording_id: str = ""

    @field_validator("rows", mode="before")
    @classmethod
    def _check_rows(cls, v):
        arr = np.array(v, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValueError(f"feature rows must be a non-empty 2-D array, got shape {arr.shape}")
        if arr.shape[1] == 0 or arr.shape[1] % 3:
            raise ValueError(
                f"feature width {arr.shape[1]} is not three equal static|delta|delta-delta blocks"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("feature rows must be finite")
        arr.setflags(write=False)
        return arr

    @property
    def n_frames(self) -> int:
        return int(self.rows.shape[0])


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filter_centers(cfg: MfccConfig) -> np.ndarray:
    """Center frequency (Hz) of each of the ``n_mels`` filters."""
    points = np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax), cfg.n_mels + 2)
    return mel_to_hz(points[1:-1])


@lru_cache(maxsize=8)
def mel_filterbank(cfg: MfccConfig, rate: int = TARGET_RATE) -> np.ndarray:
    """Unit-height triangles on the rfft bin frequencies, shape (n_mels, frame_len//2 + 1)."""
    if cfg.fmax > rate / 2:
        raise ValueError(f"fmax {cfg.fmax} exceeds Nyquist for {rate} Hz")
    edges = mel_to_hz(np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax), cfg.n_mels + 2))
    freqs = np.fft.rfftfreq(cfg.frame_len, d=1.0 / rate)
    lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs[None, :] - lower) / (center - lower)
    falling = (upper - freqs[None, :]) / (upper - center)
    fb = np.maximum(0.0, np.minimum(rising, falling))
    fb.setflags(write=False)
    return fb


def frame_signal(w: Waveform, frame_len: int = 1024, hop: int = 441) -> np.ndarray:
    """Frames starting at 0, hop, 2*hop, ...; the incomplete tail is dropped.

    Returns a (T, frame_len) view with T = floor((len - frame_len) / hop) + 1.
    """
    if len(w) < frame_len:
        raise FeatureError(
            f"signal has {len(w)} samples, shorter than one {frame_len}-sample frame",
            code="TOO_SHORT",
        )
    return sliding_window_view(w.samples, frame_len)[::hop]


def log_mel_energies(frames: np.ndarray, cfg: MfccConfig, rate: int = TARGET_RATE) -> np.ndarray:
    window = get_window(cfg.window, cfg.frame_len, fftbins=True)
    power = np.abs(np.fft.rfft(frames * window, n=cfg.frame_len, axis=1)) ** 2
    energies = power @ mel_filterbank(cfg, rate).T
    return np.log(np.maximum(energies, cfg.log_floor))


def cepstrum(log_energies: np.ndarray, n_coeffs: int) -> np.ndarray:
    return dct(log_energies, type=2, axis=-1, norm="ortho")[..., :n_coeffs]


def inverse_cepstrum(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of ``cepstrum`` when all coefficients are kept."""
    return idct(coeffs, type=2, axis=-1, norm="ortho")


def mfcc(frames: np.ndarray, cfg: MfccConfig = MfccConfig(), rate: int = TARGET_RATE) -> np.ndarray:
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    if frames.shape[0] == 0:
        raise FeatureError("no frames to analyse", code="TOO_SHORT")
    return cepstrum(log_mel_energies(frames, cfg, rate), cfg.n_coeffs)


def _delta(x: np.ndarray, n: int) -> np.ndarray:
    padded = np.pad(x, ((n, n), (0, 0)), mode="edge")
    t = x.shape[0]
    num = sum(k * (padded[n + k : n + k + t] - padded[n - k : n - k + t]) for k in range(1, n + 1))
    return num / (2.0 * sum(k * k for k in range(1, n + 1)))


def append_deltas(static: np.ndarray, n: int = 2) -> np.ndarray:
    """[static | delta | delta-delta]"""
    static = np.atleast_2d(np.asarray(static, dtype=np.float64))
    d1 = _delta(static, n)
    return np.hstack([static, d1, _delta(d1, n)])


def extract_features(w: Waveform, cfg: MfccConfig = MfccConfig(), recording_id: str = "") -> FeatureMatrix:
    frames = frame_signal(w, cfg.frame_len, cfg.hop)
    rows = append_deltas(mfcc(frames, cfg, w.rate), cfg.delta_halfwidth)
    return FeatureMatrix(rows=rows, recording_id=recording_id)
