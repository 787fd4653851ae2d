from app.pipeline.runner import (
    FiveFoldResult,
    PreprocessReport,
    RunConfig,
    featurize,
    preprocess_corpus,
    run_five_fold,
    run_fusion,
    run_test_scoring,
)
