import json

import pytest

from app.config import config
from app.corpus.manifest import Manifest, load_manifest, write_manifest
from app.eval.scorefile import ScoreFile, write_scorefile
from app.schema import Gender, Label
from helpers import make_meta, tone, write_toy_corpus
from main import EXIT_ERROR, EXIT_OK, main


@pytest.fixture(autouse=True)
def restore_config():
    yield
    config.reload()


@pytest.fixture
def labelled(tmp_path):
    manifest = Manifest(
        entries=(
            make_meta("a", Label.COVID, gender=Gender.MALE),
            make_meta("b", Label.NON_COVID, gender=Gender.MALE),
            make_meta("c", Label.COVID, gender=Gender.FEMALE),
            make_meta("d", Label.NON_COVID, gender=Gender.FEMALE),
        )
    )
    write_manifest(manifest, tmp_path / "manifest.csv")
    write_scorefile(ScoreFile(scores={"a": 0.8, "b": 0.4, "c": 0.35, "d": 0.1}), tmp_path / "s1.txt")
    write_scorefile(ScoreFile(scores={"a": 0.7, "b": 0.2, "c": 0.9, "d": 0.3}), tmp_path / "s2.txt")
    return tmp_path


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured


def test_eval_prints_metrics(labelled, capsys):
    code, out = run_cli(
        capsys, "eval", "--scores", str(labelled / "s1.txt"), "--manifest", str(labelled / "manifest.csv"),
        "--roc", str(labelled / "roc.csv"),
    )
    assert code == EXIT_OK
    report = json.loads(out.out)
    assert report["auc"] == pytest.approx(0.75)
    assert report["spec_at_80sens"] == 0.5
    assert (labelled / "roc.csv").read_text().startswith("threshold,sensitivity,specificity\n")


def test_eval_by_gender(labelled, capsys):
    code, out = run_cli(
        capsys, "eval", "--scores", str(labelled / "s1.txt"), "--manifest", str(labelled / "manifest.csv"),
        "--by", "gender",
    )
    assert code == EXIT_OK
    groups = json.loads(out.out)
    assert sorted(groups) == ["female", "male"]
    assert groups["male"]["auc"] == pytest.approx(1.0)


def test_fuse_with_labels(labelled, capsys):
    code, out = run_cli(
        capsys, "fuse", str(labelled / "s1.txt"), str(labelled / "s2.txt"),
        "--manifest", str(labelled / "manifest.csv"), "--out", str(labelled / "fused.txt"),
    )
    assert code == EXIT_OK
    payload = json.loads(out.out)
    assert payload["recordings"] == 4
    assert 0.0 <= payload["metrics"]["auc"] <= 1.0
    assert (labelled / "fused.txt").exists()


def test_errors_go_to_stderr_with_their_code(labelled, capsys):
    code, out = run_cli(
        capsys, "eval", "--scores", str(labelled / "s1.txt"), "--manifest", str(labelled / "missing.csv")
    )
    assert code == EXIT_ERROR
    assert out.out == ""
    assert json.loads(out.err.strip().splitlines()[-1])["error"] == "IO"


def test_fusion_id_mismatch(labelled, capsys):
    write_scorefile(ScoreFile(scores={"a": 0.5, "z": 0.1}), labelled / "other.txt")
    code, out = run_cli(capsys, "fuse", str(labelled / "s1.txt"), str(labelled / "other.txt"))
    assert code == EXIT_ERROR
    assert json.loads(out.err.strip().splitlines()[-1])["error"] == "ID_MISMATCH"


def test_unknown_model_kind_is_a_usage_error(capsys):
    with pytest.raises(SystemExit):
        main(["train", "--model", "svm"])


def test_synth_command(tmp_path, capsys):
    code, out = run_cli(
        capsys, "--workers", "1", "synth", "--out", str(tmp_path), "--n", "20",
        "--positive-fraction", "0.5", "--seed", "3",
    )
    assert code == EXIT_OK
    payload = json.loads(out.out)
    assert (payload["recordings"], payload["covid"], payload["seed"]) == (20, 10, 3)
    assert (tmp_path / "manifest.csv").exists()


def test_synth_takes_the_fold_count_from_training(tmp_path, capsys):
    cfg = tmp_path / "config.toml"
    cfg.write_text("[train]\nk_folds = 3\n")
    code, out = run_cli(
        capsys, "--config", str(cfg), "synth", "--out", str(tmp_path / "c"), "--n", "30",
        "--positive-fraction", "0.5",
    )
    assert code == EXIT_OK, out.err
    assert load_manifest(tmp_path / "c" / "manifest.csv").k_folds == 3


def test_preprocess_reports_missing_audio_as_discarded(tmp_path, capsys):
    present = write_toy_corpus(tmp_path / "raw", [("a", Label.COVID, tone(ms=1000))])
    missing = make_meta("b", Label.NON_COVID, path=tmp_path / "raw" / "audio" / "b.wav")
    write_manifest(Manifest(entries=(*present, missing)), tmp_path / "manifest.csv")

    code, out = run_cli(
        capsys, "--workers", "1", "preprocess", "--manifest", str(tmp_path / "manifest.csv"),
        "--out", str(tmp_path / "pre"),
    )
    assert code == EXIT_OK, out.err
    payload = json.loads(out.out)
    assert payload["kept"] == 1
    assert [(d["id"], d["code"]) for d in payload["discarded"]] == [("b", "IO")]


@pytest.mark.slow
def test_full_run_from_the_command_line(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    cfg = tmp_path / "config.toml"
    cfg.write_text(
        "[synth]\nn_recordings = 60\npositive_fraction = 0.3\nduration_range_s = [1.0, 1.5]\n\n"
        "[train]\nn_trees = 10\n\n[runtime]\nworkers = 2\n"
    )
    base = ["--config", str(cfg)]

    for argv in (["synth"], ["preprocess"], ["featurize"], ["train", "--model", "rf"], ["score", "--model", "rf"]):
        code, out = run_cli(capsys, *base, *argv)
        assert code == EXIT_OK, out.err
        if argv[0] == "train":
            trained = json.loads(out.out)

    assert set(trained["fold_reports"]) == {"1", "2", "3", "4", "5"}
    assert [trained["fold_reports"][str(f)]["auc"] for f in range(1, 6)] == trained["fold_aucs"]

    train_out = tmp_path / "workspace" / "output" / "rf_val_scores.txt"
    code, out = run_cli(capsys, *base, "eval", "--scores", str(train_out))
    assert code == EXIT_OK
    assert json.loads(out.out)["auc"] >= 0.8
    assert (tmp_path / "workspace" / "models" / "rf" / "fold5.npz").exists()
    assert (tmp_path / "workspace" / "output" / "rf_test_scores.txt").exists()
