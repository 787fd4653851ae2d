from typing import List, Optional

from fastapi import FastAPI, Header, Request
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from app.exceptions import LeaderboardError
from app.leaderboard.models import (
    TOKEN_HEADER,
    ErrorBody,
    LeaderboardRow,
    SubmissionResult,
    TeamCreated,
    TeamRegistration,
)
from app.leaderboard.service import LeaderboardService
from app.utils.logger import get_logger


logger = get_logger("leaderboard.http")

HTTP_STATUS = {
    "AUTH": 401,
    "QUOTA": 429,
    "ID_MISMATCH": 422,
    "MALFORMED": 400,
    "DUPLICATE_NAME": 409,
    "UNKNOWN_TRACK": 404,
}
ERROR_RESPONSES = {status: {"model": ErrorBody} for status in sorted(set(HTTP_STATUS.values()))}


def create_app(service: LeaderboardService) -> FastAPI:
    """HTTP front end over one ``LeaderboardService``; ground truth never leaves the service."""
    app = FastAPI(title="Cough screening leaderboard")
    app.state.service = service

    @app.exception_handler(LeaderboardError)
    async def leaderboard_error(request: Request, exc: LeaderboardError):
        logger.warning("request_rejected", path=request.url.path, code=exc.code, detail=exc.message)
        return JSONResponse(
            status_code=HTTP_STATUS.get(exc.code, 400),
            content=ErrorBody(code=exc.code, detail=exc.message).model_dump(),
        )

    @app.post("/teams", response_model=TeamCreated, status_code=201, responses=ERROR_RESPONSES)
    async def register_team(req: TeamRegistration):
        return await run_in_threadpool(service.register_team, req.name)

    @app.post("/tracks/{track}/submissions", response_model=SubmissionResult, responses=ERROR_RESPONSES)
    async def submit(
        track: str,
        request: Request,
        x_team_token: Optional[str] = Header(default=None, alias=TOKEN_HEADER),
    ):
        raw = await request.body()
        return await run_in_threadpool(service.submit, x_team_token, track, raw)

    @app.get("/tracks/{track}/leaderboard", response_model=List[LeaderboardRow], responses=ERROR_RESPONSES)
    async def leaderboard(track: str):
        return await run_in_threadpool(service.rankings, track)

    return app
