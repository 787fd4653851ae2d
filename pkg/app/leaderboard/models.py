from datetime import datetime
from typing import Dict, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from app.corpus.manifest import Manifest
from app.eval.roc import MetricsReport
from app.schema import Track


TOKEN_HEADER = "X-Team-Token"


class Team(BaseModel):
    """Server-side team state; only the token's SHA-256 digest is kept."""

    team_id: str
    token_sha256: str
    tickets_remaining: int = Field(ge=0)
    registered_at: datetime
    next_sequence_no: int = 1


class TeamRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    type: Literal["team"] = "team"
    seq: int
    team_id: str
    token_sha256: str
    registered_at: datetime


class SubmissionRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    type: Literal["submission"] = "submission"
    seq: int
    team_id: str
    sequence_no: int = Field(ge=1)
    received_at: datetime
    track: Track
    metrics: MetricsReport


JournalRecord = Union[TeamRecord, SubmissionRecord]


class GroundTruth(BaseModel):
    """Labels per track; held by the service and never sent to clients."""

    model_config = ConfigDict(frozen=True)

    tracks: Dict[Track, Dict[str, int]]

    @classmethod
    def from_manifest(cls, manifest: Manifest) -> "GroundTruth":
        """dev recordings form the val track, test recordings the test track."""
        return cls(
            tracks={
                Track.VAL: {e.id: e.target for e in manifest.dev},
                Track.TEST: {e.id: e.target for e in manifest.test},
            }
        )


# HTTP payloads


class TeamRegistration(BaseModel):
    name: str = Field(min_length=1, max_length=64, pattern=r"^[A-Za-z0-9_.-]+$")


class TeamCreated(BaseModel):
    team_id: str
    token: str
    tickets_remaining: int


class SubmissionResult(BaseModel):
    auc: float
    spec_at_80sens: float
    sens_at_95spec: float
    tickets_remaining: int
    sequence_no: int


class LeaderboardRow(BaseModel):
    rank: int
    team_id: str
    best_auc: float
    best_spec_at_80sens: float
    achieved_at: datetime
    submissions: int
    above_baseline: Optional[bool] = None


class ErrorBody(BaseModel):
    code: str
    detail: str
