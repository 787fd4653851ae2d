"""End-to-end pipeline: preprocessing, features, five-fold training, scoring, fusion."""

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.audio.preprocess import PreprocessConfig, preprocess
from app.audio.wav import Waveform, read_pcm_wav, resample, write_pcm_wav
from app.config import AppConfig
from app.corpus.folds import assign_folds
from app.corpus.manifest import Manifest, RecordingMeta, load_manifest, write_manifest
from app.eval.roc import FoldSummary, MetricsReport, evaluate, summarize_folds
from app.eval.scorefile import ScoreFile, read_scorefile, write_scorefile
from app.exceptions import DicovaError, FoldAssignmentError, ManifestError, ModelError
from app.features.cache import FeatureCache
from app.features.mfcc import FeatureMatrix, MfccConfig, extract_features
from app.fusion.calibrate import TeamScoreMatrix, fuse_mean, fuse_weighted
from app.logger import logger
from app.models import FrameClassifier, FrameDataset, TrainConfig, train_model
from app.models.inference import ensemble_score, score_recording
from app.models.io import load_model, save_model
from app.models.rf import RfModel
from app.schema import TARGET_RATE, ModelKind
from app.utils.files_utils import PathLike, atomic_write_text


T = TypeVar("T")
R = TypeVar("R")

PROCESSED_MANIFEST = "manifest.csv"
REPORT_FILE = "preprocess_report.json"


class RunConfig(BaseModel):
    """Everything one pipeline run reads: paths, model kind, seed and stage configs."""

    model_config = ConfigDict(frozen=True)

    manifest: Path
    preprocessed_dir: Path = Path("workspace/preprocessed")
    feature_dir: Path = Path("workspace/features")
    model_dir: Path = Path("workspace/models")
    output_dir: Path = Path("workspace/output")
    model_kind: ModelKind = ModelKind.MLP
    k_folds: int = Field(5, gt=1)
    preprocess: PreprocessConfig = Field(default_factory=PreprocessConfig)
    features: MfccConfig = Field(default_factory=MfccConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    workers: int = Field(4, gt=0)
    apply_preprocessing: bool = Field(
        False, description="Preprocess audio in memory before feature extraction"
    )

    @classmethod
    def from_settings(cls, settings: AppConfig, **overrides) -> "RunConfig":
        """Settings from the config file, with non-None ``overrides`` taking precedence.

        ``seed`` is routed into the training config.
        """
        overrides = {k: v for k, v in overrides.items() if v is not None}
        train = settings.train.train_config()
        if "seed" in overrides:
            train = train.model_copy(update={"seed": int(overrides.pop("seed"))})
        values = dict(
            manifest=settings.paths.preprocessed_dir / PROCESSED_MANIFEST,
            preprocessed_dir=settings.paths.preprocessed_dir,
            feature_dir=settings.paths.feature_dir,
            model_dir=settings.paths.model_dir,
            output_dir=settings.paths.output_dir,
            model_kind=settings.train.model_kind,
            k_folds=settings.train.k_folds,
            preprocess=settings.preprocess,
            features=settings.features,
            train=train,
            workers=settings.runtime.workers,
        )
        values.update(overrides)
        return cls(**values)

    @property
    def seed(self) -> int:
        return self.train.seed

    def fold_model_path(self, fold: int) -> Path:
        return self.model_dir / self.model_kind.value / f"fold{fold}.npz"

    def scores_path(self, split: str) -> Path:
        return self.output_dir / f"{self.model_kind.value}_{split}_scores.txt"


class KeptRecording(BaseModel):
    id: str
    raw_ms: float
    kept_ms: float


class DiscardedRecording(BaseModel):
    id: str
    code: str
    message: str


class PreprocessReport(BaseModel):
    kept: List[KeptRecording] = Field(default_factory=list)
    discarded: List[DiscardedRecording] = Field(default_factory=list)


class FiveFoldResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    fold_reports: Dict[int, MetricsReport]
    summary: FoldSummary
    scores: ScoreFile


def _fan_out(fn: Callable[[T], R], items: Sequence[T], workers: int) -> List[R]:
    """Map ``fn`` over ``items`` on a thread pool; results keep input order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def load_waveform(meta: RecordingMeta) -> Waveform:
    """Read a recording and bring it to the analysis rate."""
    w = read_pcm_wav(meta.audio_path)
    return resample(w, TARGET_RATE) if w.rate != TARGET_RATE else w


def _with_valid_folds(entries: Sequence[RecordingMeta], source: Manifest, seed: int) -> Manifest:
    try:
        return Manifest(entries=tuple(entries), k_folds=source.k_folds)
    except ManifestError:
        logger.warning("Fold coverage broken by discarded recordings; reassigning folds")
    cleared = Manifest(
        entries=tuple(e.model_copy(update={"fold": None}) for e in entries), k_folds=source.k_folds
    )
    try:
        return assign_folds(cleared, k=source.k_folds, seed=seed)
    except FoldAssignmentError as e:
        logger.warning(f"Preprocessed manifest left without folds: {e.message}")
        return cleared


def preprocess_corpus(
    manifest: Manifest,
    cfg: PreprocessConfig,
    out_dir: PathLike,
    seed: int = 7,
    workers: int = 1,
) -> Tuple[Manifest, PreprocessReport]:
    """Preprocess every recording into ``out_dir/audio`` and write its manifest and report.

    Recordings that fail preprocessing are discarded and listed in the report.
    """
    out_dir = Path(out_dir)

    def run_one(meta: RecordingMeta):
        try:
            raw = load_waveform(meta)
            kept = preprocess(raw, cfg)
        except DicovaError as e:
            return meta, None, DiscardedRecording(id=meta.id, code=e.code, message=e.message)
        path = write_pcm_wav(out_dir / "audio" / f"{meta.id}.wav", kept)
        record = KeptRecording(id=meta.id, raw_ms=raw.duration_ms, kept_ms=kept.duration_ms)
        return meta.model_copy(update={"audio_path": path}), record, None

    report = PreprocessReport()
    entries: List[RecordingMeta] = []
    for meta, kept, discarded in _fan_out(run_one, list(manifest.entries), workers):
        if discarded is not None:
            logger.warning(f"Discarded {discarded.id}: {discarded.code} ({discarded.message})")
            report.discarded.append(discarded)
        else:
            entries.append(meta)
            report.kept.append(kept)

    processed = _with_valid_folds(entries, manifest, seed)
    write_manifest(processed, out_dir / PROCESSED_MANIFEST)
    atomic_write_text(out_dir / REPORT_FILE, report.model_dump_json(indent=2))
    logger.info(
        f"Preprocessed {len(report.kept)} recordings, discarded {len(report.discarded)} -> {out_dir}"
    )
    return processed, report


def featurize(
    entries: Sequence[RecordingMeta],
    features: MfccConfig,
    cache: Optional[FeatureCache] = None,
    preprocess_cfg: Optional[PreprocessConfig] = None,
    workers: int = 1,
) -> Dict[str, FeatureMatrix]:
    """Feature matrices per recording id, in entry order.

    With ``preprocess_cfg`` the audio is preprocessed in memory first and
    recordings that fail it are left out.
    """
    configs = (features,) if preprocess_cfg is None else (preprocess_cfg, features)

    def compute(meta: RecordingMeta) -> FeatureMatrix:
        w = load_waveform(meta)
        if preprocess_cfg is not None:
            w = preprocess(w, preprocess_cfg)
        return extract_features(w, features, recording_id=meta.id)

    def run_one(meta: RecordingMeta) -> Optional[FeatureMatrix]:
        try:
            if cache is None:
                return compute(meta)
            return cache.get_or_compute(meta.audio_path, lambda: compute(meta), meta.id, *configs)
        except DicovaError as e:
            if preprocess_cfg is None:
                raise
            logger.warning(f"Skipping {meta.id}: {e.code} ({e.message})")
            return None

    results = _fan_out(run_one, list(entries), workers)
    out = {meta.id: fm for meta, fm in zip(entries, results) if fm is not None}
    if cache is not None:
        logger.debug(f"Feature cache: {cache.hits} hits, {cache.misses} misses")
    return out


def build_dataset(entries: Sequence[RecordingMeta], feats: Mapping[str, FeatureMatrix]) -> FrameDataset:
    return FrameDataset.from_recordings(
        [(e.id, feats[e.id].rows, e.target) for e in entries if e.id in feats]
    )


def _log_importances(model: FrameClassifier, top: int = 5) -> None:
    if not isinstance(model, RfModel):
        return
    imp = model.feature_importances()
    order = np.argsort(imp)[::-1][:top]
    ranked = ", ".join(f"c{j}={imp[j]:.3f}" for j in order)
    logger.info(f"Top random forest features: {ranked}")


def _features_for(run: RunConfig, entries: Sequence[RecordingMeta]) -> Dict[str, FeatureMatrix]:
    return featurize(
        entries,
        run.features,
        cache=FeatureCache(run.feature_dir),
        preprocess_cfg=run.preprocess if run.apply_preprocessing else None,
        workers=run.workers,
    )


def run_five_fold(run: RunConfig, manifest: Optional[Manifest] = None) -> FiveFoldResult:
    """Train one model per held-out fold and evaluate it on that fold.

    Fold models are saved under ``model_dir/<kind>/fold<f>.npz`` and the
    pooled validation scores to ``output_dir/<kind>_val_scores.txt``.
    """
    manifest = manifest if manifest is not None else _load(run)
    dev = manifest.dev
    if not dev or any(e.fold is None for e in dev):
        raise FoldAssignmentError(
            "five-fold training needs a fold for every dev recording", code="MISSING_FOLDS"
        )
    feats = _features_for(run, dev)
    labels = manifest.labels()

    reports: Dict[int, MetricsReport] = {}
    pooled: Dict[str, float] = {}
    for fold in range(1, manifest.k_folds + 1):
        train_entries = [e for e in dev if e.fold != fold]
        val_entries = [e for e in dev if e.fold == fold and e.id in feats]
        model = train_model(run.model_kind, build_dataset(train_entries, feats), run.train)
        save_model(model, run.fold_model_path(fold), run.train)
        _log_importances(model)

        fold_scores = {e.id: score_recording(model, feats[e.id].rows) for e in val_entries}
        reports[fold] = evaluate(ScoreFile(scores=fold_scores), labels)
        pooled.update(fold_scores)
        logger.info(f"{run.model_kind.value} fold {fold}: AUC {reports[fold].auc:.4f}")

    summary = summarize_folds([reports[f].auc for f in sorted(reports)])
    scores = ScoreFile(scores={e.id: pooled[e.id] for e in dev if e.id in pooled})
    write_scorefile(scores, run.scores_path("val"))
    logger.info(
        f"{run.model_kind.value} five-fold AUC {summary.mean:.4f} +- {summary.std_err:.4f}"
    )
    return FiveFoldResult(fold_reports=reports, summary=summary, scores=scores)


def load_fold_models(run: RunConfig, k_folds: int) -> List[FrameClassifier]:
    models = []
    for fold in range(1, k_folds + 1):
        path = run.fold_model_path(fold)
        if not path.exists():
            raise ModelError(f"fold model {path} not found; run train first", code="MISSING_MODEL")
        models.append(load_model(path))
    return models


def run_test_scoring(run: RunConfig, manifest: Optional[Manifest] = None) -> ScoreFile:
    """Fold-ensemble score for every test recording, written to ``output_dir/<kind>_test_scores.txt``."""
    manifest = manifest if manifest is not None else _load(run)
    test = manifest.test
    models = load_fold_models(run, manifest.k_folds)
    feats = _features_for(run, test) if test else {}
    scores = ScoreFile(
        scores={e.id: ensemble_score(models, feats[e.id].rows) for e in test if e.id in feats}
    )
    write_scorefile(scores, run.scores_path("test"))
    logger.info(f"Scored {len(scores)} test recordings with {len(models)} {run.model_kind.value} models")
    return scores


def run_fusion(
    scorefile_paths: Sequence[PathLike],
    labels: Optional[Mapping[str, int]] = None,
    weights: Optional[Sequence[float]] = None,
    out_path: Optional[PathLike] = None,
) -> Tuple[ScoreFile, Optional[MetricsReport]]:
    """Calibrate and fuse score files; evaluate the fusion when labels are given."""
    paths = [Path(p) for p in scorefile_paths]
    matrix = TeamScoreMatrix.from_scorefiles(
        [read_scorefile(p) for p in paths], systems=[p.stem for p in paths]
    )
    fused = fuse_mean(matrix) if weights is None else fuse_weighted(matrix, weights)
    scores = fused.to_scorefile()
    if out_path is not None:
        write_scorefile(scores, out_path)
    report = evaluate(scores, labels) if labels is not None else None
    return scores, report


def _load(run: RunConfig) -> Manifest:
    return load_manifest(run.manifest, k_folds=run.k_folds)
