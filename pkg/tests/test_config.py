import tempfile
import unittest
from pathlib import Path

import pytest
from pydantic import ValidationError

from app.config import AppConfig, Config, TrainSettings, config
from app.models.base import TrainConfig
from app.pipeline.runner import RunConfig
from app.schema import ModelKind


class TestConfig(unittest.TestCase):
    def tearDown(self):
        config.reload()

    def test_singleton(self):
        self.assertIs(Config(), config)

    def test_example_file_loads(self):
        example = Path(__file__).resolve().parent.parent / "config" / "config.example.toml"
        settings = config.reload(example)

        self.assertEqual(config.source, example)
        self.assertEqual(settings.train.k_folds, 5)
        self.assertEqual(settings.features.hop, 441)
        self.assertEqual(settings.server.tickets_per_team, 25)

    def test_reload_from_path(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "custom.toml"
            path.write_text('[train]\nmodel_kind = "rf"\nn_trees = 7\n\n[runtime]\nworkers = 2\n')
            config.reload(path)

        self.assertEqual(config.train.model_kind, ModelKind.RF)
        self.assertEqual(config.train.n_trees, 7)
        self.assertEqual(config.runtime.workers, 2)
        # untouched sections keep their defaults
        self.assertEqual(config.features.n_mels, 40)


def test_invalid_values_are_rejected():
    with pytest.raises(ValidationError):
        AppConfig(train={"k_folds": 1})
    with pytest.raises(ValidationError):
        AppConfig(server={"tickets_per_team": 0})


def test_train_config_drops_run_level_fields():
    settings = TrainSettings(model_kind="lr", epochs=3, seed=11)
    cfg = settings.train_config()
    assert type(cfg) is TrainConfig
    assert (cfg.epochs, cfg.seed) == (3, 11)
    assert "model_kind" not in cfg.model_dump()


def test_cli_overrides_win_over_settings(tmp_path):
    settings = AppConfig(train={"model_kind": "mlp", "seed": 7})
    run = RunConfig.from_settings(
        settings, manifest=tmp_path / "m.csv", model_kind="rf", seed=42, workers=None
    )

    assert run.model_kind == ModelKind.RF
    assert run.seed == 42
    assert run.manifest == tmp_path / "m.csv"
    assert run.workers == settings.runtime.workers
    assert run.fold_model_path(3) == settings.paths.model_dir / "rf" / "fold3.npz"
    assert run.scores_path("val") == settings.paths.output_dir / "rf_val_scores.txt"
