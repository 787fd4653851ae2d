import unittest

import numpy as np
import pytest
from pydantic import ValidationError

from app.audio.wav import Waveform, write_pcm_wav
from app.exceptions import FeatureError
from app.features.cache import FeatureCache, read_feature_csv, write_feature_csv
from app.features.mfcc import (
    FeatureMatrix,
    MfccConfig,
    append_deltas,
    cepstrum,
    extract_features,
    frame_signal,
    inverse_cepstrum,
    log_mel_energies,
    mel_filter_centers,
    mfcc,
)
from helpers import constant, tone


CFG = MfccConfig()


class TestFraming(unittest.TestCase):
    def test_one_second_gives_98_frames(self):
        frames = frame_signal(constant(0.1, 1000), 1024, 441)
        self.assertEqual(frames.shape, (98, 1024))

    def test_frames_start_at_hop_multiples(self):
        w = Waveform(samples=np.arange(3000) / 3000.0, rate=44100)
        frames = frame_signal(w, 1024, 441)
        self.assertEqual(frames[2, 0], w.samples[882])

    def test_shorter_than_one_frame(self):
        with self.assertRaises(FeatureError) as ctx:
            frame_signal(Waveform(samples=np.zeros(1023), rate=44100))
        self.assertEqual(ctx.exception.code, "TOO_SHORT")


class TestMfcc(unittest.TestCase):
    def test_silent_frame_hits_log_floor(self):
        coeffs = mfcc(np.zeros((1, 1024)), CFG)
        self.assertAlmostEqual(coeffs[0, 0], np.sqrt(40) * np.log(1e-10), places=6)
        np.testing.assert_allclose(coeffs[0, 1:], 0.0, atol=1e-8)

    def test_sine_peaks_in_nearest_filter(self):
        frame = 0.5 * np.sin(2 * np.pi * 1000.0 * np.arange(1024) / 44100)
        energies = log_mel_energies(frame[None, :], CFG)
        expected = int(np.argmin(np.abs(mel_filter_centers(CFG) - 1000.0)))
        self.assertEqual(int(np.argmax(energies[0])), expected)

    def test_gain_shifts_only_c0(self):
        frames = np.random.default_rng(0).standard_normal((4, 1024)) * 0.1
        base = mfcc(frames, CFG)
        louder = mfcc(2.0 * frames, CFG)

        np.testing.assert_allclose(louder[:, 0] - base[:, 0], np.sqrt(40) * np.log(4.0), atol=1e-8)
        np.testing.assert_allclose(louder[:, 1:], base[:, 1:], atol=1e-8)

    def test_cepstrum_inverts_with_all_coefficients(self):
        x = np.random.default_rng(1).standard_normal((3, 40))
        np.testing.assert_allclose(inverse_cepstrum(cepstrum(x, 40)), x, atol=1e-12)

    def test_only_hann_window(self):
        with self.assertRaises(ValidationError):
            MfccConfig(window="hamming")

    def test_hop_not_above_frame(self):
        with self.assertRaises(ValidationError):
            MfccConfig(frame_len=256, hop=512)


class TestDeltas(unittest.TestCase):
    def test_constant_track_has_zero_deltas(self):
        out = append_deltas(np.ones((10, 13)) * 3.0, n=2)
        self.assertEqual(out.shape, (10, 39))
        np.testing.assert_array_equal(out[:, 13:], 0.0)

    def test_linear_track_has_unit_delta_inside(self):
        static = np.repeat(np.arange(20, dtype=float)[:, None], 13, axis=1)
        out = append_deltas(static, n=2)

        np.testing.assert_allclose(out[2:-2, 13:26], 1.0)
        np.testing.assert_allclose(out[4:-4, 26:], 0.0, atol=1e-12)
        # edge replication flattens the first frame
        self.assertLess(out[0, 13], 1.0)


def test_extract_features_shape():
    fm = extract_features(tone(ms=1000), CFG, recording_id="r1")
    assert fm.rows.shape == (98, 39)
    assert fm.recording_id == "r1"
    assert np.all(np.isfinite(fm.rows))


def test_cache_hit_returns_stored_rows(tmp_path):
    w = tone(ms=200)
    audio = write_pcm_wav(tmp_path / "a.wav", w)
    cache = FeatureCache(tmp_path / "cache")
    calls = []

    def compute():
        calls.append(1)
        return extract_features(w, CFG, recording_id="a")

    first = cache.get_or_compute(audio, compute, "a", CFG)
    second = cache.get_or_compute(audio, compute, "a", CFG)

    assert len(calls) == 1
    assert (cache.hits, cache.misses) == (1, 1)
    np.testing.assert_array_equal(first.rows, second.rows)
    assert second.recording_id == "a"


def test_cache_key_depends_on_config():
    other = MfccConfig(n_mels=26)
    assert FeatureCache.key("0f" * 32, CFG) != FeatureCache.key("0f" * 32, other)
    assert FeatureCache.key("0f" * 32, CFG) == FeatureCache.key("0f" * 32, MfccConfig())


def test_feature_csv_export(tmp_path):
    fm = extract_features(tone(ms=100), CFG, recording_id="rec7")
    path = write_feature_csv(fm, tmp_path)

    assert path.name == "rec7.csv"
    back = read_feature_csv(path)
    assert back.recording_id == "rec7"
    np.testing.assert_allclose(back.rows, fm.rows, rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("n_samples", [1024, 1465])
def test_frame_count_formula(n_samples):
    fm = extract_features(Waveform(samples=np.full(n_samples, 0.2), rate=44100), CFG)
    assert fm.n_frames == (n_samples - 1024) // 441 + 1


def test_frame_count_for_random_lengths():
    rng = np.random.default_rng(98)
    for n_samples in rng.integers(1024, 30000, 100):
        fm = extract_features(Waveform(samples=np.full(int(n_samples), 0.2), rate=44100), CFG)
        assert fm.n_frames == (int(n_samples) - 1024) // 441 + 1


def test_gain_moves_only_c0_through_the_whole_extractor():
    w = Waveform(samples=np.random.default_rng(12).standard_normal(22050) * 0.1, rate=44100)
    base = extract_features(w, CFG).rows
    quieter = extract_features(w.with_samples(0.5 * w.samples), CFG).rows

    np.testing.assert_allclose(quieter[:, 0] - base[:, 0], np.sqrt(40) * np.log(0.25), atol=1e-6)
    np.testing.assert_allclose(quieter[:, 1:13], base[:, 1:13], atol=1e-6)
    np.testing.assert_allclose(quieter[:, 13:], base[:, 13:], atol=1e-6)


@pytest.mark.parametrize("width", [0, 38, 40])
def test_feature_width_must_split_into_three_blocks(width):
    with pytest.raises(ValidationError):
        FeatureMatrix(rows=np.zeros((2, width)))
