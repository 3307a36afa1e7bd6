"""
Logging for the hierarchy engine

Every module takes its logger from `setup_logger(__name__)`. Records go to
stderr (stdout belongs to command output) and to a rotating file.
"""
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

from config import settings

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'
LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')

_engine_loggers = set()


class ColoredFormatter(logging.Formatter):
    """Level names in ANSI colours, only when the stream is a terminal"""

    COLORS = {
        'DEBUG': '\033[36m',
        'INFO': '\033[32m',
        'WARNING': '\033[33m',
        'ERROR': '\033[31m',
        'CRITICAL': '\033[35m',
    }
    RESET = '\033[0m'

    def __init__(self, *args, use_color: bool = True, **kwargs):
        super().__init__(*args, **kwargs)
        self.use_color = use_color

    def format(self, record):
        if not self.use_color:
            return super().format(record)
        original = record.levelname
        record.levelname = f"{self.COLORS.get(original, self.RESET)}{original}{self.RESET}"
        try:
            return super().format(record)
        finally:
            record.levelname = original


def setup_logger(
    name: str,
    level: Optional[str] = None,
    log_file: Optional[str] = None
) -> logging.Logger:
    """
    Logger with a stderr handler and, unless `log_file` resolves to "", a rotating file

    Args:
        name: Logger name, normally the module's __name__
        level: One of LEVELS; defaults to settings.log_level
        log_file: Log file path; defaults to settings.log_file

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)
    logger.setLevel((level or settings.log_level).upper())
    _engine_loggers.add(name)

    if logger.handlers:
        return logger

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(
        ColoredFormatter(LOG_FORMAT, datefmt=DATE_FORMAT, use_color=sys.stderr.isatty())
    )
    logger.addHandler(console_handler)

    path = settings.log_file if log_file is None else log_file
    if path:
        try:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            file_handler = RotatingFileHandler(
                path,
                maxBytes=settings.log_max_bytes,
                backupCount=settings.log_backup_count,
                encoding='utf-8'
            )
            file_handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
            logger.addHandler(file_handler)
        except OSError as e:
            print(f"Warning: log file {path} unavailable: {e}", file=sys.stderr)

    return logger


def set_global_level(level: str) -> None:
    """Apply `level` to every logger made by setup_logger"""
    level = level.upper()
    if level not in LEVELS:
        raise ValueError(f"unknown log level {level}")
    for name in _engine_loggers:
        logging.getLogger(name).setLevel(level)
