"""Append-only JSON-lines journal of leaderboard records."""

import os
from pathlib import Path
from typing import Annotated, Iterator, Tuple

from pydantic import Field, TypeAdapter, ValidationError

from app.leaderboard.models import JournalRecord
from app.utils.files_utils import PathLike


_RECORD = TypeAdapter(Annotated[JournalRecord, Field(discriminator="type")])


class JournalFormatError(Exception):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class Journal:
    """One record per LF-terminated line; every append is flushed and fsync'd.

    Callers serialise appends.
    """

    def __init__(self, path: PathLike):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.touch(exist_ok=True)

    def append(self, record: JournalRecord) -> None:
        line = record.model_dump_json() + "\n"
        with open(self.path, "a", encoding="utf-8", newline="\n") as f:
            f.write(line)
            f.flush()
            os.fsync(f.fileno())

    def records(self) -> Iterator[Tuple[int, JournalRecord]]:
        """Yield (line number, record); raise JournalFormatError at the first bad line."""
        with open(self.path, "r", encoding="utf-8", newline="") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.endswith("\n"):
                    raise JournalFormatError(lineno, "truncated record (no line terminator)")
                try:
                    yield lineno, _RECORD.validate_json(line)
                except ValidationError as e:
                    raise JournalFormatError(lineno, f"invalid record: {e.errors()[0]['msg']}") from e
