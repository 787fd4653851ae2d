import json

import numpy as np
import pytest

from app.audio.preprocess import PreprocessConfig
from app.audio.wav import read_pcm_wav, write_pcm_wav
from app.corpus.folds import assign_folds
from app.corpus.manifest import Manifest, load_manifest
from app.corpus.synth import SynthSpec, generate_synthetic_corpus
from app.eval.roc import evaluate
from app.eval.scorefile import ScoreFile, read_scorefile, write_scorefile
from app.exceptions import AudioFormatError, FoldAssignmentError, ModelError
from app.features.cache import FeatureCache
from app.features.mfcc import MfccConfig
from app.models.base import TrainConfig
from app.pipeline.runner import (
    REPORT_FILE,
    RunConfig,
    featurize,
    preprocess_corpus,
    run_five_fold,
    run_fusion,
    run_test_scoring,
)
from app.schema import Label, ModelKind
from helpers import concat, constant, labelled_manifest, make_meta, tone, write_toy_corpus


def burst(freq=500.0):
    return concat(constant(0.0, 200), tone(freq=freq, ms=800, amp=0.6), constant(0.0, 200))


def toy_corpus(tmp_path):
    metas = write_toy_corpus(
        tmp_path / "raw",
        [
            ("good1", Label.COVID, burst(500.0)),
            ("good2", Label.NON_COVID, burst(3000.0)),
            ("short", Label.COVID, tone(ms=300)),
            ("silent", Label.NON_COVID, constant(0.0, 1000)),
        ],
    )
    return Manifest(entries=tuple(metas))


def test_preprocess_corpus_discards_and_reports(tmp_path):
    processed, report = preprocess_corpus(toy_corpus(tmp_path), PreprocessConfig(), tmp_path / "pre")

    assert processed.ids == ["good1", "good2"]
    assert {d.id: d.code for d in report.discarded} == {"short": "TOO_SHORT", "silent": "NO_ACTIVITY"}
    assert (tmp_path / "pre" / "audio" / "good1.wav").exists()
    assert load_manifest(tmp_path / "pre" / "manifest.csv") == processed
    saved = json.loads((tmp_path / "pre" / REPORT_FILE).read_text())
    assert [k["id"] for k in saved["kept"]] == ["good1", "good2"]


def test_unreadable_recording_is_discarded(tmp_path):
    manifest = toy_corpus(tmp_path)
    gone = make_meta("gone", Label.COVID, path=tmp_path / "raw" / "gone.wav")
    manifest = Manifest(entries=(*manifest.entries, gone))

    processed, report = preprocess_corpus(manifest, PreprocessConfig(), tmp_path / "pre")
    assert processed.ids == ["good1", "good2"]
    assert {d.id: d.code for d in report.discarded}["gone"] == "IO"


def test_featurize_reports_an_unreadable_recording(tmp_path):
    gone = make_meta("gone", Label.COVID, path=tmp_path / "gone.wav")
    with pytest.raises(AudioFormatError) as ctx:
        featurize([gone], MfccConfig(), cache=FeatureCache(tmp_path / "cache"))
    assert ctx.value.code == "IO"


def test_low_rate_audio_is_resampled_before_preprocessing(tmp_path):
    slow = tone(freq=400.0, ms=1000, rate=16000)
    path = write_pcm_wav(tmp_path / "raw" / "a.wav", slow)
    manifest = Manifest(entries=(labelled_manifest(1, 0).entries[0].model_copy(update={"audio_path": path}),))

    processed, report = preprocess_corpus(manifest, PreprocessConfig(), tmp_path / "pre")
    assert not report.discarded
    assert read_pcm_wav(processed.entries[0].audio_path).rate == 44100


def test_featurize_uses_the_cache(tmp_path):
    manifest = toy_corpus(tmp_path)
    good = [e for e in manifest if e.id.startswith("good")]
    cache = FeatureCache(tmp_path / "cache")

    first = featurize(good, MfccConfig(), cache=cache, workers=2)
    second = featurize(good, MfccConfig(), cache=cache, workers=2)

    assert list(first) == ["good1", "good2"]
    assert (cache.hits, cache.misses) == (2, 2)
    for rec_id in first:
        np.testing.assert_array_equal(first[rec_id].rows, second[rec_id].rows)


def test_featurize_with_preprocessing_skips_failures(tmp_path):
    feats = featurize(list(toy_corpus(tmp_path)), MfccConfig(), preprocess_cfg=PreprocessConfig())
    assert list(feats) == ["good1", "good2"]


def test_five_fold_needs_folds(tmp_path):
    run = RunConfig(manifest=tmp_path / "m.csv", feature_dir=tmp_path / "f")
    with pytest.raises(FoldAssignmentError) as ctx:
        run_five_fold(run, manifest=labelled_manifest(6, 6))
    assert ctx.value.code == "MISSING_FOLDS"


def test_scoring_needs_trained_models(tmp_path):
    run = RunConfig(manifest=tmp_path / "m.csv", model_dir=tmp_path / "models")
    with pytest.raises(ModelError) as ctx:
        run_test_scoring(run, manifest=labelled_manifest(6, 6))
    assert ctx.value.code == "MISSING_MODEL"


def test_run_fusion_writes_and_evaluates(tmp_path):
    labels = {"a": 1, "b": 0, "c": 1, "d": 0}
    write_scorefile(ScoreFile(scores={"a": 0.9, "b": 0.2, "c": 0.4, "d": 0.5}), tmp_path / "lr_val.txt")
    write_scorefile(ScoreFile(scores={"a": 0.6, "b": 0.1, "c": 0.8, "d": 0.3}), tmp_path / "rf_val.txt")

    scores, report = run_fusion(
        [tmp_path / "lr_val.txt", tmp_path / "rf_val.txt"], labels=labels, out_path=tmp_path / "fused.txt"
    )
    saved = read_scorefile(tmp_path / "fused.txt")
    assert saved.ids == scores.ids
    np.testing.assert_allclose(saved.values_for(saved.ids), scores.values_for(scores.ids), atol=1e-9)
    assert report.auc == pytest.approx(1.0)

    unlabelled, none = run_fusion([tmp_path / "lr_val.txt", tmp_path / "rf_val.txt"], weights=[1.0, 0.0])
    assert none is None
    assert unlabelled.scores["d"] == pytest.approx((0.5 - 0.2) / (0.9 - 0.2))


# End-to-end runs over one synthetic corpus shared by the module.

CORPUS_SPEC = SynthSpec(n_recordings=200, positive_fraction=0.1, duration_range_s=(1.0, 1.5), seed=7)
FAST_LR = TrainConfig(epochs=3, seed=7)
SMALL_RF = TrainConfig(n_trees=50, seed=7)


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    raw = generate_synthetic_corpus(CORPUS_SPEC, root / "raw")
    processed, _ = preprocess_corpus(raw, PreprocessConfig(), root / "pre", seed=7, workers=4)
    return root, processed


def make_run(root, name, kind, train):
    return RunConfig(
        manifest=root / "pre" / "manifest.csv",
        feature_dir=root / "features",
        model_dir=root / name / "models",
        output_dir=root / name / "output",
        model_kind=kind,
        train=train,
        workers=4,
    )


@pytest.mark.slow
def test_random_forest_learns_the_synthetic_corpus(corpus):
    root, manifest = corpus
    run = make_run(root, "rf", ModelKind.RF, SMALL_RF)
    result = run_five_fold(run, manifest)

    assert set(result.fold_reports) == {1, 2, 3, 4, 5}
    assert result.summary.mean >= 0.85
    assert result.scores.ids == [e.id for e in manifest.dev]
    saved = read_scorefile(run.scores_path("val"))
    assert saved.ids == result.scores.ids
    np.testing.assert_allclose(saved.values_for(saved.ids), result.scores.values_for(saved.ids), atol=1e-9)

    test_scores = run_test_scoring(run, manifest)
    assert test_scores.ids == [e.id for e in manifest.test]
    assert evaluate(test_scores, manifest.labels()).auc >= 0.75


@pytest.mark.slow
def test_shuffled_labels_score_near_chance(corpus):
    root, manifest = corpus
    rng = np.random.default_rng(99)
    dev = manifest.dev
    labels = [e.label for e in dev]
    shuffled = [labels[i] for i in rng.permutation(len(labels))]
    entries = [e.model_copy(update={"label": y, "fold": None}) for e, y in zip(dev, shuffled)]
    permuted = assign_folds(Manifest(entries=tuple(entries)), k=5, seed=7)

    result = run_five_fold(make_run(root, "shuffled", ModelKind.RF, SMALL_RF), permuted)
    assert abs(result.summary.mean - 0.5) <= 0.15


@pytest.mark.slow
def test_same_seed_same_scores(corpus):
    root, manifest = corpus
    first = run_five_fold(make_run(root, "lr_a", ModelKind.LR, FAST_LR), manifest)
    second = run_five_fold(make_run(root, "lr_b", ModelKind.LR, FAST_LR), manifest)

    assert first.scores == second.scores
    assert first.summary == second.summary


@pytest.mark.slow
def test_fusing_two_systems(corpus):
    root, manifest = corpus
    lr = make_run(root, "fuse_lr", ModelKind.LR, FAST_LR)
    rf = make_run(root, "fuse_rf", ModelKind.RF, SMALL_RF)
    run_five_fold(lr, manifest)
    run_five_fold(rf, manifest)

    scores, report = run_fusion(
        [lr.scores_path("val"), rf.scores_path("val")], labels=manifest.labels()
    )
    assert scores.ids == [e.id for e in manifest.dev]
    assert report.n_pos + report.n_neg == len(manifest.dev)
    assert 0.0 <= min(scores.scores.values()) and max(scores.scores.values()) <= 1.0


def full_run(root):
    """synth -> preprocess -> featurize -> train -> score -> eval under ``root``."""
    spec = SynthSpec(n_recordings=60, positive_fraction=0.3, duration_range_s=(1.0, 1.5), seed=11)
    raw = generate_synthetic_corpus(spec, root / "raw")
    processed, _ = preprocess_corpus(raw, PreprocessConfig(), root / "pre", seed=11, workers=4)
    run = make_run(root, "run", ModelKind.LR, TrainConfig(epochs=3, seed=11))
    featurize(processed.entries, run.features, cache=FeatureCache(run.feature_dir), workers=4)
    run_five_fold(run, processed)
    run_test_scoring(run, processed)
    val_report = evaluate(read_scorefile(run.scores_path("val")), processed.labels())
    test_report = evaluate(read_scorefile(run.scores_path("test")), processed.labels())
    return run, val_report.model_dump_json(), test_report.model_dump_json()


@pytest.mark.slow
def test_whole_pipeline_is_byte_reproducible(tmp_path):
    first, first_val, first_test = full_run(tmp_path / "a")
    second, second_val, second_test = full_run(tmp_path / "b")

    for split in ("val", "test"):
        assert first.scores_path(split).read_bytes() == second.scores_path(split).read_bytes()
    assert first_val == second_val
    assert first_test == second_test
