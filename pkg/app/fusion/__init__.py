from app.fusion.calibrate import (
    FusedScores,
    TeamScoreMatrix,
    calibrate_matrix,
    calibrate_minmax,
    fuse_mean,
    fuse_weighted,
)
