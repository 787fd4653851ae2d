import threading
import tomllib
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, Field

from app.audio.preprocess import PreprocessConfig
from app.corpus.synth import SynthSpec
from app.features.mfcc import MfccConfig
from app.models.base import TrainConfig
from app.schema import ModelKind


def get_project_root() -> Path:
    """Get the project root directory"""
    return Path(__file__).resolve().parent.parent


PROJECT_ROOT = get_project_root()


class PathSettings(BaseModel):
    """Artifact locations; relative paths resolve against the working directory."""

    manifest: Path = Field(Path("workspace/corpus/manifest.csv"), description="Corpus manifest CSV")
    preprocessed_dir: Path = Field(
        Path("workspace/preprocessed"), description="Preprocessed WAVs and their manifest"
    )
    feature_dir: Path = Field(Path("workspace/features"), description="Feature cache directory")
    model_dir: Path = Field(Path("workspace/models"), description="Trained fold models")
    output_dir: Path = Field(Path("workspace/output"), description="Score files and reports")


class TrainSettings(TrainConfig):
    model_kind: ModelKind = Field(ModelKind.MLP, description="Classifier trained by default")
    k_folds: int = Field(5, gt=1, description="Validation folds")

    def train_config(self) -> TrainConfig:
        return TrainConfig(**self.model_dump(include=set(TrainConfig.model_fields)))


class ServerSettings(BaseModel):
    host: str = Field("127.0.0.1", description="Leaderboard bind address")
    port: int = Field(8000, description="Leaderboard port")
    journal: Path = Field(Path("workspace/leaderboard/journal.jsonl"), description="Append-only journal")
    truth: Optional[Path] = Field(None, description="Ground-truth manifest; defaults to paths.manifest")
    tickets_per_team: int = Field(25, gt=0, description="Evaluation tickets per team")
    baseline_auc: Optional[float] = Field(
        None, ge=0.0, le=1.0, description="Rows beating this AUC are flagged above_baseline"
    )


class RuntimeSettings(BaseModel):
    workers: int = Field(4, gt=0, description="Threads for per-recording feature extraction")
    log_level: str = Field("INFO", description="Console log level")


class AppConfig(BaseModel):
    paths: PathSettings = Field(default_factory=PathSettings)
    synth: SynthSpec = Field(default_factory=SynthSpec)
    preprocess: PreprocessConfig = Field(default_factory=PreprocessConfig)
    features: MfccConfig = Field(default_factory=MfccConfig)
    train: TrainSettings = Field(default_factory=TrainSettings)
    server: ServerSettings = Field(default_factory=ServerSettings)
    runtime: RuntimeSettings = Field(default_factory=RuntimeSettings)


class Config:
    _instance = None
    _lock = threading.Lock()
    _initialized = False

    def __new__(cls):
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self):
        if not self._initialized:
            with self._lock:
                if not self._initialized:
                    self._config = None
                    self._path = None
                    self._load_initial_config()
                    self._initialized = True

    @staticmethod
    def _get_config_path() -> Optional[Path]:
        root = PROJECT_ROOT
        config_path = root / "config" / "config.toml"
        if config_path.exists():
            return config_path
        example_path = root / "config" / "config.example.toml"
        if example_path.exists():
            return example_path
        return None

    @staticmethod
    def _load_config(path: Optional[Path]) -> dict:
        if path is None:
            return {}
        with path.open("rb") as f:
            return tomllib.load(f)

    def _load_initial_config(self, path: Optional[Path] = None):
        self._path = path or self._get_config_path()
        self._config = AppConfig(**self._load_config(self._path))

    def reload(self, path: Optional[Path] = None) -> AppConfig:
        """Re-read settings, from ``path`` when given."""
        with self._lock:
            self._load_initial_config(Path(path) if path is not None else None)
        return self._config

    @property
    def settings(self) -> AppConfig:
        return self._config

    @property
    def source(self) -> Optional[Path]:
        """File the settings were read from, None when running on defaults"""
        return self._path

    @property
    def paths(self) -> PathSettings:
        return self._config.paths

    @property
    def synth(self) -> SynthSpec:
        return self._config.synth

    @property
    def preprocess(self) -> PreprocessConfig:
        return self._config.preprocess

    @property
    def features(self) -> MfccConfig:
        return self._config.features

    @property
    def train(self) -> TrainSettings:
        return self._config.train

    @property
    def server(self) -> ServerSettings:
        return self._config.server

    @property
    def runtime(self) -> RuntimeSettings:
        return self._config.runtime

config = Config()
