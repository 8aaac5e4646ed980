import logging
from typing import Optional

from config.runtime import GRIDTOP_LOG_LEVEL

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Top-level packages whose loggers share the console handler
PACKAGE_LOGGERS = ("grid", "simulation", "identification", "commands", "utils", "gridtop")


def setup_logger(name: str = "gridtop", level: Optional[str] = None) -> logging.Logger:
    """
    Attach a console handler to a package logger, once.

    Args:
        name: Logger name, usually a top-level package.
        level: Level name; defaults to GRIDTOP_LOG_LEVEL.

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)
    if not logger.handlers:
        handler = logging.StreamHandler()
        formatter = logging.Formatter(LOG_FORMAT)
        handler.setFormatter(formatter)
        logger.addHandler(handler)
    logger.setLevel((level or GRIDTOP_LOG_LEVEL).upper())
    return logger


def setup_package_loggers(level: Optional[str] = None) -> None:
    for name in PACKAGE_LOGGERS:
        setup_logger(name, level)
