from app.eval.roc import (
    THRESHOLDS,
    FoldSummary,
    MetricsReport,
    RocCurve,
    auc,
    auc_pairwise,
    evaluate,
    roc_curve,
    sensitivity_at_specificity,
    specificity_at_sensitivity,
    summarize_folds,
    write_roc_csv,
)
from app.eval.scorefile import ScoreFile, format_scorefile, parse_scorefile, read_scorefile, write_scorefile
from app.eval.subgroups import SLICERS, by_age, by_gender, subgroup_metrics
