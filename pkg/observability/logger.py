import logging
import os
import sys
from typing import Optional, TextIO

import structlog

LOG_LEVEL_ENV = "RINGTHERM_LOG_LEVEL"

_log_stream: Optional[TextIO] = None


def configure_logger(level: Optional[str] = None, json_logs: bool = True, log_file: Optional[str] = None):
    """
    Configure structured logging with structlog.
    JSON lines for machine parsing, console rendering for interactive runs.
    Logs always go to stderr or a file; stdout is reserved for command output.
    """
    global _log_stream

    level_name = (level or os.getenv(LOG_LEVEL_ENV, "INFO")).upper()
    numeric_level = getattr(logging, level_name, None)
    if not isinstance(numeric_level, int):
        numeric_level = logging.INFO

    if _log_stream is not None and _log_stream not in (sys.stderr, sys.stdout):
        _log_stream.close()
    _log_stream = open(log_file, "a") if log_file else sys.stderr

    processors = [
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        structlog.processors.JSONRenderer() if json_logs else structlog.dev.ConsoleRenderer(colors=False),
    ]

    structlog.configure(
        processors=processors,
        logger_factory=structlog.PrintLoggerFactory(file=_log_stream),
        wrapper_class=structlog.make_filtering_bound_logger(numeric_level),
        cache_logger_on_first_use=False,
    )

    # Bridge std logging for libraries
    logging.basicConfig(format="%(message)s", stream=_log_stream, level=numeric_level, force=True)


def log_event(event_name: str, **kwargs):
    """Log a high-level command event."""
    logger = structlog.get_logger()
    logger.info(event_name, **kwargs)
