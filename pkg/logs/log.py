"""
Logging configuration shared by every module
"""
import logging
import sys

from config import settings


def _build_logger() -> logging.Logger:
    """Create the application logger once, writing to stderr"""
    log = logging.getLogger(settings.APP_NAME)
    if not log.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(settings.LOG_FORMAT))
        log.addHandler(handler)
    log.setLevel(settings.LOG_LEVEL.upper())
    return log


logger = _build_logger()
