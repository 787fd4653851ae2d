from app.leaderboard.journal import Journal
from app.leaderboard.models import (
    GroundTruth,
    LeaderboardRow,
    SubmissionRecord,
    SubmissionResult,
    Team,
    TeamCreated,
    TeamRecord,
)
from app.leaderboard.service import LeaderboardService, recover
