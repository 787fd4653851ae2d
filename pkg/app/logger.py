import sys
from datetime import datetime
from pathlib import Path
from typing import Optional

from loguru import logger as _logger


LOG_DIR = Path(__file__).resolve().parent.parent / "logs"

# every record carries the CLI command that produced it
CONSOLE_FORMAT = (
    "<green>{time:HH:mm:ss.SSS}</green> | <level>{level: <8}</level> | "
    "<magenta>{extra[stage]}</magenta> | <cyan>{name}</cyan>:<cyan>{line}</cyan> - {message}"
)
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {extra[stage]} | {name}:{function}:{line} - {message}"


def define_log_level(
    print_level: str = "INFO",
    logfile_level: str = "DEBUG",
    name: Optional[str] = None,
    log_dir: Optional[Path] = None,
):
    """Reset the sinks: stderr at ``print_level`` and a per-run file at ``logfile_level``.

    ``name`` is the pipeline stage (``synth``, ``train``, ...); it prefixes the
    log file and tags every record.
    """
    stamp = datetime.now().strftime("%Y%m%d%H%M%S")
    log_name = f"{name}_{stamp}" if name else stamp

    _logger.remove()
    _logger.configure(extra={"stage": name or "-"})
    _logger.add(sys.stderr, level=print_level, format=CONSOLE_FORMAT)
    _logger.add((log_dir or LOG_DIR) / f"{log_name}.log", level=logfile_level, format=FILE_FORMAT)
    return _logger


logger = define_log_level()
