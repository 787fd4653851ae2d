import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

import uvicorn

from app.config import config
from app.corpus.manifest import load_manifest
from app.corpus.synth import generate_synthetic_corpus
from app.eval.roc import evaluate, roc_curve, write_roc_csv
from app.eval.scorefile import read_scorefile
from app.eval.subgroups import SLICERS, subgroup_metrics
from app.exceptions import DicovaError
from app.features.cache import FeatureCache, write_feature_csv
from app.leaderboard.models import GroundTruth
from app.leaderboard.server import create_app
from app.leaderboard.service import LeaderboardService
from app.logger import define_log_level, logger
from app.pipeline.runner import (
    PROCESSED_MANIFEST,
    RunConfig,
    featurize,
    preprocess_corpus,
    run_five_fold,
    run_fusion,
    run_test_scoring,
)
from app.schema import MODEL_KIND_VALUES


EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_ERROR = 2


def _emit(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _processed_manifest(args) -> Path:
    return Path(args.manifest) if args.manifest else config.paths.preprocessed_dir / PROCESSED_MANIFEST


def _run_config(args) -> RunConfig:
    return RunConfig.from_settings(
        config.settings,
        manifest=_processed_manifest(args),
        model_kind=getattr(args, "model", None),
        seed=getattr(args, "seed", None),
        workers=args.workers,
    )


def cmd_synth(args) -> dict:
    updates = {
        k: v
        for k, v in {
            "n_recordings": args.n,
            "positive_fraction": args.positive_fraction,
            "seed": args.seed,
        }.items()
        if v is not None
    }
    updates["k_folds"] = config.train.k_folds
    spec = config.synth.model_validate({**config.synth.model_dump(), **updates})
    out_dir = Path(args.out) if args.out else config.paths.manifest.parent
    manifest = generate_synthetic_corpus(spec, out_dir)
    return {
        "manifest": str(out_dir / "manifest.csv"),
        "recordings": len(manifest),
        "covid": sum(e.target for e in manifest),
        "seed": spec.seed,
    }


def cmd_preprocess(args) -> dict:
    raw = load_manifest(Path(args.manifest) if args.manifest else config.paths.manifest)
    out_dir = Path(args.out) if args.out else config.paths.preprocessed_dir
    seed = args.seed if args.seed is not None else config.train.seed
    processed, report = preprocess_corpus(
        raw, config.preprocess, out_dir, seed=seed, workers=args.workers or config.runtime.workers
    )
    return {
        "manifest": str(out_dir / "manifest.csv"),
        "kept": len(processed),
        "discarded": [d.model_dump() for d in report.discarded],
    }


def cmd_featurize(args) -> dict:
    run = _run_config(args)
    manifest = load_manifest(run.manifest)
    cache = FeatureCache(run.feature_dir)
    feats = featurize(manifest.entries, run.features, cache=cache, workers=run.workers)
    if args.csv:
        for fm in feats.values():
            write_feature_csv(fm, args.csv)
    return {
        "recordings": len(feats),
        "frames": sum(fm.n_frames for fm in feats.values()),
        "cache_hits": cache.hits,
        "cache_misses": cache.misses,
    }


def cmd_train(args) -> dict:
    run = _run_config(args)
    result = run_five_fold(run)
    return {
        "model": run.model_kind.value,
        "seed": run.seed,
        "fold_aucs": list(result.summary.fold_aucs),
        "fold_reports": {str(fold): report.model_dump() for fold, report in result.fold_reports.items()},
        "mean_auc": result.summary.mean,
        "std_err": result.summary.std_err,
        "val_scores": str(run.scores_path("val")),
    }


def cmd_score(args) -> dict:
    run = _run_config(args)
    scores = run_test_scoring(run)
    return {"model": run.model_kind.value, "recordings": len(scores), "scores": str(run.scores_path("test"))}


def cmd_eval(args) -> dict:
    manifest = load_manifest(_processed_manifest(args))
    scores = read_scorefile(args.scores)
    labels = manifest.labels()
    if args.roc:
        write_roc_csv(roc_curve(scores, labels), args.roc)
    if args.by:
        groups = subgroup_metrics(scores, labels, manifest, SLICERS[args.by])
        return {name: report.model_dump() for name, report in groups.items()}
    return evaluate(scores, labels).model_dump()


def cmd_fuse(args) -> dict:
    weights = [float(w) for w in args.weights.split(",")] if args.weights else None
    labels = load_manifest(args.manifest).labels() if args.manifest else None
    out = Path(args.out) if args.out else config.paths.output_dir / "fused_scores.txt"
    scores, report = run_fusion(args.scorefiles, labels=labels, weights=weights, out_path=out)
    payload = {"out": str(out), "recordings": len(scores)}
    if report is not None:
        payload["metrics"] = report.model_dump()
    return payload


def cmd_serve(args) -> dict:
    server = config.server
    truth_path = args.truth or server.truth or config.paths.manifest
    truth = GroundTruth.from_manifest(load_manifest(truth_path))
    service = LeaderboardService.recover(
        args.journal or server.journal,
        truth,
        tickets_per_team=server.tickets_per_team,
        baseline_auc=server.baseline_auc,
    )
    logger.info(f"Serving leaderboard on {args.host or server.host}:{args.port or server.port}")
    uvicorn.run(create_app(service), host=args.host or server.host, port=args.port or server.port)
    return {"stopped": True}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dicova", description="Acoustic COVID-19 screening benchmark toolkit"
    )
    parser.add_argument("--config", type=str, help="Path to a TOML config file")
    parser.add_argument("--log-level", type=str, help="Console log level (default from config)")
    parser.add_argument("--workers", type=int, help="Threads for per-recording work")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="Generate the synthetic two-class corpus")
    p.add_argument("--out", type=str, help="Output directory")
    p.add_argument("--n", type=int, help="Number of recordings")
    p.add_argument("--positive-fraction", type=float, help="Share of covid recordings")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="Normalise, trim and filter silence from every recording")
    p.add_argument("--manifest", type=str, help="Raw manifest (default paths.manifest)")
    p.add_argument("--out", type=str, help="Output directory (default paths.preprocessed_dir)")
    p.add_argument("--seed", type=int, help="Seed for fold reassignment when needed")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("featurize", help="Extract and cache MFCC features")
    p.add_argument("--manifest", type=str, help="Preprocessed manifest")
    p.add_argument("--csv", type=str, help="Also export one CSV per recording into this directory")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="Five-fold training and validation")
    p.add_argument("--model", choices=MODEL_KIND_VALUES, help="Classifier kind")
    p.add_argument("--manifest", type=str, help="Preprocessed manifest")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="Fold-ensemble scores for the test split")
    p.add_argument("--model", choices=MODEL_KIND_VALUES, help="Classifier kind")
    p.add_argument("--manifest", type=str, help="Preprocessed manifest")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="Evaluate a score file against manifest labels")
    p.add_argument("--scores", type=str, required=True, help="Score file to evaluate")
    p.add_argument("--manifest", type=str, help="Manifest holding the labels")
    p.add_argument("--by", choices=("gender", "age"), help="Report per subgroup")
    p.add_argument("--roc", type=str, help="Write the ROC sweep as CSV to this path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("fuse", help="Min-max calibrate and fuse score files")
    p.add_argument("scorefiles", nargs="+", help="Score files with identical id sets")
    p.add_argument("--weights", type=str, help="Comma-separated fusion weights")
    p.add_argument("--manifest", type=str, help="Manifest with labels, to evaluate the fusion")
    p.add_argument("--out", type=str, help="Fused score file path")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("serve", help="Run the leaderboard service")
    p.add_argument("--journal", type=str, help="Journal path")
    p.add_argument("--truth", type=str, help="Ground-truth manifest")
    p.add_argument("--host", type=str)
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.config:
        config.reload(args.config)
    define_log_level(print_level=args.log_level or config.runtime.log_level, name=args.command)
    logger.debug(f"Settings from {config.source or 'built-in defaults'}")
    try:
        _emit(args.func(args))
    except DicovaError as e:
        logger.error(f"{args.command} failed: {e.code}: {e.message}")
        print(json.dumps(e.to_dict()), file=sys.stderr)
        return EXIT_ERROR
    except KeyboardInterrupt:
        logger.warning("Operation interrupted.")
        return EXIT_UNEXPECTED
    except Exception as e:
        logger.exception(f"{args.command} failed unexpectedly: {e}")
        return EXIT_UNEXPECTED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
