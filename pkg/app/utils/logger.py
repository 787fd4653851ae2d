"""Structured events for the leaderboard service and its HTTP front end.

``DICOVA_LOG_FORMAT=json`` switches the console renderer to one JSON object
per line; ``DICOVA_LOG_LEVEL`` filters below the given level.
"""

import logging
import os

import structlog


LOG_FORMAT = os.getenv("DICOVA_LOG_FORMAT", "console").lower()
LOG_LEVEL = os.getenv("DICOVA_LOG_LEVEL", "INFO").upper()

renderer = structlog.processors.JSONRenderer() if LOG_FORMAT == "json" else structlog.dev.ConsoleRenderer()

structlog.configure(
    processors=[
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.processors.TimeStamper(fmt="iso", utc=True),
        structlog.processors.CallsiteParameterAdder(
            {
                structlog.processors.CallsiteParameter.MODULE,
                structlog.processors.CallsiteParameter.FUNC_NAME,
            }
        ),
        structlog.processors.dict_tracebacks,
        renderer,
    ],
    wrapper_class=structlog.make_filtering_bound_logger(getattr(logging, LOG_LEVEL, logging.INFO)),
    cache_logger_on_first_use=True,
)


def get_logger(component: str):
    """A logger whose events all carry ``component``."""
    return structlog.get_logger().bind(component=component)


logger = get_logger("leaderboard")
