"""Deterministic synthetic two-class corpus.

Both classes are trains of noise bursts over a faint noise floor. Covid
recordings put most burst energy in 300-900 Hz and repeat at a steady
period; non_covid recordings put it in 2-6 kHz with irregular gaps. The
band-energy ratio (300-900 Hz over 2-6 kHz) therefore separates the classes
by construction.
"""

from pathlib import Path
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.signal import butter, sosfilt

from app.audio.wav import Waveform, write_pcm_wav
from app.corpus.folds import assign_folds
from app.corpus.manifest import MAX_AGE, MIN_AGE, Manifest, RecordingMeta, write_manifest
from app.exceptions import FoldAssignmentError, SynthSpecError
from app.logger import logger
from app.schema import Gender, Label, Split
from app.utils.files_utils import PathLike


LOW_BAND = (300.0, 900.0)
HIGH_BAND = (2000.0, 6000.0)
NOISE_FLOOR = 0.002
PEAK = 0.9


class SynthSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_recordings: int = Field(200, description="Number of recordings to synthesise")
    positive_fraction: float = Field(0.1, description="Share of covid recordings, in (0, 1)")
    duration_range_s: Tuple[float, float] = Field((1.0, 3.0), description="Uniform duration range")
    sample_rate: int = Field(44100, description="Sample rate of the written WAV files")
    seed: int = 7
    test_fraction: float = Field(0.2, description="Per-class share held out as the test split")
    male_fraction: float = Field(0.7, description="Share of recordings labelled male")
    k_folds: int = 5

    @model_validator(mode="after")
    def _check(self) -> "SynthSpec":
        lo, hi = self.duration_range_s
        problems = []
        if self.n_recordings < 0:
            problems.append("n_recordings must be >= 0")
        if not 0.0 < self.positive_fraction < 1.0:
            problems.append(f"positive_fraction {self.positive_fraction} outside (0, 1)")
        if lo < 0.5 or hi < lo:
            problems.append(f"duration_range_s {self.duration_range_s} needs 0.5 <= min <= max")
        if self.sample_rate < 16000:
            problems.append("sample_rate must be at least 16000 Hz")
        if not 0.0 <= self.test_fraction < 1.0:
            problems.append("test_fraction must be in [0, 1)")
        if not 0.0 <= self.male_fraction <= 1.0:
            problems.append("male_fraction must be in [0, 1]")
        if problems:
            raise SynthSpecError("; ".join(problems))
        return self


def band_energy_ratio(w: Waveform, low=LOW_BAND, high=HIGH_BAND) -> float:
    """Energy in ``low`` over energy in ``high``, from the DFT of the whole clip."""
    power = np.abs(np.fft.rfft(w.samples)) ** 2
    freqs = np.fft.rfftfreq(len(w), d=1.0 / w.rate)
    low_e = power[(freqs >= low[0]) & (freqs <= low[1])].sum()
    high_e = power[(freqs >= high[0]) & (freqs <= high[1])].sum()
    return float(low_e / max(high_e, 1e-300))


def _band_noise(rng: np.random.Generator, n: int, band, rate: int) -> np.ndarray:
    sos = butter(4, [band[0], min(band[1], 0.45 * rate)], btype="bandpass", fs=rate, output="sos")
    x = sosfilt(sos, rng.standard_normal(n))
    rms = np.sqrt(np.mean(x**2))
    return x / rms if rms > 0 else x


def _burst_envelope(rng: np.random.Generator, n: int, rate: int, positive: bool) -> np.ndarray:
    env = np.zeros(n)
    period = rng.uniform(0.25, 0.35)
    t = rng.uniform(0.05, 0.2)
    duration = n / rate
    while t < duration:
        length = rng.uniform(0.08, 0.15) if positive else rng.uniform(0.05, 0.2)
        start = int(t * rate)
        stop = min(n, start + int(length * rate))
        if stop - start > 1:
            env[start:stop] = np.maximum(env[start:stop], np.hanning(stop - start))
        if positive:
            t += period
        else:
            t += length + rng.uniform(0.1, 0.6)
    return env


def synthesize_recording(seed: int, index: int, positive: bool, spec: SynthSpec) -> Waveform:
    rng = np.random.default_rng([seed, index])
    n = int(round(rng.uniform(*spec.duration_range_s) * spec.sample_rate))
    rate = spec.sample_rate

    main, side = (LOW_BAND, HIGH_BAND) if positive else (HIGH_BAND, LOW_BAND)
    content = _band_noise(rng, n, main, rate) + 0.15 * _band_noise(rng, n, side, rate)
    signal = _burst_envelope(rng, n, rate, positive) * content
    signal += NOISE_FLOOR * rng.standard_normal(n)
    peak = np.max(np.abs(signal))
    if peak > 0:
        signal *= PEAK / peak
    return Waveform(samples=signal, rate=rate)


def _draw_metadata(rng: np.random.Generator, n: int, spec: SynthSpec):
    genders = np.where(rng.random(n) < spec.male_fraction, Gender.MALE.value, Gender.FEMALE.value)
    genders = np.where(rng.random(n) < 0.03, Gender.UNKNOWN.value, genders)
    young = rng.random(n) < 0.7
    ages = np.where(young, rng.integers(MIN_AGE, 40, n), rng.integers(40, MAX_AGE + 1, n))
    ages_known = rng.random(n) >= 0.03
    return genders, ages, ages_known


def generate_synthetic_corpus(spec: SynthSpec, out_dir: PathLike) -> Manifest:
    """Write ``out_dir/audio/<id>.wav`` per recording and ``out_dir/manifest.csv``.

    Output bytes depend only on ``spec``.
    """
    out_dir = Path(out_dir)
    n = spec.n_recordings
    rng = np.random.default_rng(spec.seed)

    n_pos = int(round(n * spec.positive_fraction))
    positive = np.zeros(n, dtype=bool)
    positive[rng.permutation(n)[:n_pos]] = True
    genders, ages, ages_known = _draw_metadata(rng, n, spec)

    is_test = np.zeros(n, dtype=bool)
    for cls in (True, False):
        members = np.flatnonzero(positive == cls)
        n_test = int(round(spec.test_fraction * len(members)))
        is_test[members[rng.permutation(len(members))[:n_test]]] = True

    width = max(4, len(str(n)))
    entries: List[RecordingMeta] = []
    for i in range(n):
        rec_id = f"r{i + 1:0{width}d}"
        path = out_dir / "audio" / f"{rec_id}.wav"
        write_pcm_wav(path, synthesize_recording(spec.seed, i, bool(positive[i]), spec))
        entries.append(
            RecordingMeta(
                id=rec_id,
                audio_path=path,
                label=Label.COVID if positive[i] else Label.NON_COVID,
                gender=Gender(str(genders[i])),
                age=int(ages[i]) if ages_known[i] else None,
                split=Split.TEST if is_test[i] else Split.DEV,
            )
        )

    manifest = Manifest(entries=tuple(entries), k_folds=spec.k_folds)
    if n:
        try:
            manifest = assign_folds(manifest, k=spec.k_folds, seed=spec.seed)
        except FoldAssignmentError as e:
            logger.warning(f"Synthetic corpus left without folds: {e.message}")
    write_manifest(manifest, out_dir / "manifest.csv")
    logger.info(
        f"Synthesised {n} recordings ({n_pos} covid) into {out_dir} (seed={spec.seed})"
    )
    return manifest
