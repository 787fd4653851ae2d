"""Ticketed leaderboard: registration, scored submissions and ranked boards.

All state changes go through ``_apply``, both live and during journal
replay, so a recovered service holds exactly the state that was journaled.
"""

import hashlib
import secrets
import threading
from datetime import datetime, timezone
from typing import Callable, Dict, List, Optional, Union

from app.eval.roc import evaluate
from app.eval.scorefile import ScoreFile, parse_scorefile
from app.exceptions import CorruptJournalError, EvalError, LeaderboardError
from app.leaderboard.journal import Journal, JournalFormatError
from app.leaderboard.models import (
    GroundTruth,
    JournalRecord,
    LeaderboardRow,
    SubmissionRecord,
    SubmissionResult,
    Team,
    TeamCreated,
    TeamRecord,
)
from app.schema import Track
from app.utils.files_utils import PathLike
from app.utils.logger import get_logger


logger = get_logger("leaderboard.service")

DEFAULT_TICKETS = 25
MAX_LISTED_IDS = 5


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


def token_digest(token: str) -> str:
    return hashlib.sha256(token.encode("utf-8")).hexdigest()


def parse_track(track: Union[str, Track]) -> Track:
    try:
        return Track(track)
    except ValueError:
        raise LeaderboardError(f"unknown track {track!r}", code="UNKNOWN_TRACK")


class LeaderboardService:
    def __init__(
        self,
        truth: GroundTruth,
        journal: Optional[Journal] = None,
        tickets_per_team: int = DEFAULT_TICKETS,
        baseline_auc: Optional[float] = None,
        clock: Callable[[], datetime] = _utcnow,
    ):
        self.truth = truth
        self.journal = journal
        self.tickets_per_team = tickets_per_team
        self.baseline_auc = baseline_auc
        self.clock = clock
        self._lock = threading.Lock()
        self._teams: Dict[str, Team] = {}
        self._by_digest: Dict[str, str] = {}
        self._submissions: List[SubmissionRecord] = []
        self._seq = 0

    # state transitions

    def _apply(self, record: JournalRecord) -> None:
        if record.seq != self._seq + 1:
            raise ValueError(f"record seq {record.seq} does not follow {self._seq}")
        if isinstance(record, TeamRecord):
            if record.team_id in self._teams:
                raise ValueError(f"team {record.team_id} registered twice")
            self._teams[record.team_id] = Team(
                team_id=record.team_id,
                token_sha256=record.token_sha256,
                tickets_remaining=self.tickets_per_team,
                registered_at=record.registered_at,
            )
            self._by_digest[record.token_sha256] = record.team_id
        else:
            team = self._teams.get(record.team_id)
            if team is None:
                raise ValueError(f"submission by unregistered team {record.team_id}")
            if team.tickets_remaining <= 0:
                raise ValueError(f"submission by {record.team_id} beyond its ticket allowance")
            if record.sequence_no != team.next_sequence_no:
                raise ValueError(
                    f"sequence_no {record.sequence_no} for {record.team_id}, expected {team.next_sequence_no}"
                )
            team.tickets_remaining -= 1
            team.next_sequence_no += 1
            self._submissions.append(record)
        self._seq = record.seq

    def _commit(self, record: JournalRecord) -> None:
        """Journal first, then apply; caller holds the lock."""
        if self.journal is not None:
            self.journal.append(record)
        self._apply(record)

    # operations

    def register_team(self, name: str) -> TeamCreated:
        token = secrets.token_urlsafe(32)
        with self._lock:
            if name in self._teams:
                raise LeaderboardError(f"team name {name!r} is already registered", code="DUPLICATE_NAME")
            record = TeamRecord(
                seq=self._seq + 1,
                team_id=name,
                token_sha256=token_digest(token),
                registered_at=self.clock(),
            )
            self._commit(record)
            tickets = self._teams[name].tickets_remaining
        logger.info("team_registered", team_id=name)
        return TeamCreated(team_id=name, token=token, tickets_remaining=tickets)

    def _authenticate(self, token: Optional[str]) -> str:
        team_id = self._by_digest.get(token_digest(token)) if token else None
        if team_id is None:
            raise LeaderboardError("missing or invalid team token", code="AUTH")
        return team_id

    def _check_ids(self, track: Track, scores: ScoreFile) -> Dict[str, int]:
        labels = self.truth.tracks.get(track, {})
        expected, given = set(labels), set(scores.ids)
        if expected != given:
            missing = sorted(expected - given)
            extra = sorted(given - expected)
            raise LeaderboardError(
                f"score file ids do not match the {track.value} track: "
                f"{len(missing)} missing {missing[:MAX_LISTED_IDS]}, "
                f"{len(extra)} extra {extra[:MAX_LISTED_IDS]}",
                code="ID_MISMATCH",
            )
        return labels

    def submit(
        self, token: Optional[str], track: Union[str, Track], scorefile: Union[bytes, str, ScoreFile]
    ) -> SubmissionResult:
        """Evaluate a submission and charge one ticket; rejected submissions cost nothing."""
        track = parse_track(track)
        team_id = self._authenticate(token)
        try:
            if isinstance(scorefile, bytes):
                scorefile = scorefile.decode("utf-8")
            scores = parse_scorefile(scorefile) if isinstance(scorefile, str) else scorefile
        except UnicodeDecodeError:
            raise LeaderboardError("score file must be UTF-8 text", code="MALFORMED") from None
        except EvalError as e:
            raise LeaderboardError(e.message, code="MALFORMED") from e
        labels = self._check_ids(track, scores)
        if self._teams[team_id].tickets_remaining <= 0:
            raise LeaderboardError(f"team {team_id} has no tickets left", code="QUOTA")
        try:
            metrics = evaluate(scores, labels)
        except EvalError as e:
            raise LeaderboardError(e.message, code="MALFORMED") from e

        with self._lock:
            team = self._teams[team_id]
            if team.tickets_remaining <= 0:
                raise LeaderboardError(f"team {team_id} has no tickets left", code="QUOTA")
            record = SubmissionRecord(
                seq=self._seq + 1,
                team_id=team_id,
                sequence_no=team.next_sequence_no,
                received_at=self.clock(),
                track=track,
                metrics=metrics,
            )
            self._commit(record)
            remaining = team.tickets_remaining

        logger.info(
            "submission_scored",
            team_id=team_id,
            track=track.value,
            sequence_no=record.sequence_no,
            auc=metrics.auc,
            tickets_remaining=remaining,
        )
        return SubmissionResult(
            auc=metrics.auc,
            spec_at_80sens=metrics.spec_at_80sens,
            sens_at_95spec=metrics.sens_at_95spec,
            tickets_remaining=remaining,
            sequence_no=record.sequence_no,
        )

    def tickets_remaining(self, team_id: str) -> int:
        with self._lock:
            return self._teams[team_id].tickets_remaining

    def submissions(self, team_id: Optional[str] = None) -> List[SubmissionRecord]:
        with self._lock:
            records = list(self._submissions)
        return [r for r in records if team_id is None or r.team_id == team_id]

    def rankings(self, track: Union[str, Track]) -> List[LeaderboardRow]:
        """Best AUC per team, descending; ties go to the team that reached it first."""
        track = parse_track(track)
        best: Dict[str, SubmissionRecord] = {}
        counts: Dict[str, int] = {}
        for record in self.submissions():
            if record.track != track:
                continue
            counts[record.team_id] = counts.get(record.team_id, 0) + 1
            current = best.get(record.team_id)
            if current is None or record.metrics.auc > current.metrics.auc:
                best[record.team_id] = record

        ordered = sorted(best.values(), key=lambda r: (-r.metrics.auc, r.received_at, r.seq))
        return [
            LeaderboardRow(
                rank=rank,
                team_id=r.team_id,
                best_auc=r.metrics.auc,
                best_spec_at_80sens=r.metrics.spec_at_80sens,
                achieved_at=r.received_at,
                submissions=counts[r.team_id],
                above_baseline=None if self.baseline_auc is None else r.metrics.auc > self.baseline_auc,
            )
            for rank, r in enumerate(ordered, start=1)
        ]

    @property
    def teams(self) -> List[str]:
        with self._lock:
            return list(self._teams)

    # recovery

    @classmethod
    def recover(cls, journal_path: PathLike, truth: GroundTruth, **kwargs) -> "LeaderboardService":
        """Rebuild the service by replaying its journal; new records append to the same file.

        Raises:
            CorruptJournalError: at the first unreadable or inconsistent record;
                ``state`` holds the service rebuilt from the records before it.
        """
        journal = Journal(journal_path)
        service = cls(truth, journal=journal, **kwargs)
        line = 0
        try:
            for line, record in journal.records():
                service._apply(record)
        except JournalFormatError as e:
            logger.error("journal_corrupt", line=e.line, reason=e.reason)
            raise CorruptJournalError(e.reason, line=e.line, state=service) from e
        except ValueError as e:
            logger.error("journal_corrupt", line=line, reason=str(e))
            raise CorruptJournalError(str(e), line=line, state=service) from e
        logger.info("journal_replayed", teams=len(service._teams), submissions=len(service._submissions))
        return service


def recover(journal_path: PathLike, truth: GroundTruth, **kwargs) -> LeaderboardService:
    return LeaderboardService.recover(journal_path, truth, **kwargs)

