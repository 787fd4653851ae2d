from typing import Any, Optional


class DicovaError(Exception):
    """Base exception for all toolkit errors.

    Every subclass carries a stable machine-readable ``code`` that the CLI and
    the leaderboard service surface verbatim.
    """

    code: str = "ERROR"

    def __init__(self, message: str, code: Optional[str] = None):
        super().__init__(message)
        self.message = message
        if code is not None:
            self.code = code

    def to_dict(self) -> dict:
        return {"error": self.code, "message": self.message}


class ManifestError(DicovaError):
    """Raised when a manifest cannot be parsed or violates its invariants."""

    code = "PARSE"

    def __init__(self, message: str, code: Optional[str] = None, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message, code)
        self.line = line


class FoldAssignmentError(DicovaError):
    code = "INSUFFICIENT_POSITIVES"


class SynthSpecError(DicovaError):
    code = "INVALID_SPEC"


class AudioFormatError(DicovaError):
    """Raised for audio files the reader does not support."""

    code = "UNSUPPORTED_ENCODING"


class PreprocessError(DicovaError):
    code = "TOO_SHORT"


class FeatureError(DicovaError):
    code = "TOO_SHORT"


class ModelError(DicovaError):
    code = "SINGLE_CLASS"


class EvalError(DicovaError):
    code = "MALFORMED"


class FusionError(DicovaError):
    code = "DEGENERATE_COLUMN"


class LeaderboardError(DicovaError):
    """Errors returned to leaderboard clients."""

    code = "MALFORMED"


class CorruptJournalError(DicovaError):
    """Raised when journal replay hits a record it cannot apply.

    ``state`` holds whatever was recovered from the records before ``line``.
    """

    code = "CORRUPT_JOURNAL"

    def __init__(self, message: str, line: int, state: Any = None):
        super().__init__(f"journal line {line}: {message}")
        self.line = line
        self.state = state
