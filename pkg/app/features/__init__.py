from app.features.cache import FeatureCache, read_feature_csv, write_feature_csv
from app.features.mfcc import (
    FeatureMatrix,
    MfccConfig,
    append_deltas,
    extract_features,
    frame_signal,
    mfcc,
)


__all__ = [
    "FeatureCache",
    "FeatureMatrix",
    "MfccConfig",
    "append_deltas",
    "extract_features",
    "frame_signal",
    "mfcc",
    "read_feature_csv",
    "write_feature_csv",
]
