import logging
import os
from datetime import datetime
from typing import Optional

from src.config import LOG_DIRECTORY, LOG_LEVEL


def setup_logger(name: Optional[str] = None, log_to_console: bool = True, log_level: Optional[str] = None) -> logging.Logger:
    """
    Sets up and returns a configured logger.

    This function creates a logger with a file handler that writes to a daily log file
    under LOG_DIRECTORY. Optionally, it can also add a console handler (stderr, so that
    report payloads printed on stdout stay clean). Handlers are only added once per
    logger name to avoid duplicates.

    Args:
        name (str, optional): Name of the logger. If None, the root logger is used. Defaults to None.
        log_to_console (bool, optional): Whether to also log to the console. Defaults to True.
        log_level (str, optional): Logging level (e.g., 'DEBUG', 'INFO', 'WARNING').
                                   Defaults to the ZETA_LAB_LOG_LEVEL setting.

    Returns:
        logging.Logger: Configured logger instance.
    """
    os.makedirs(LOG_DIRECTORY, exist_ok=True)

    log_filename = os.path.join(
        LOG_DIRECTORY,
        f"zeta_lab_{datetime.now().strftime('%Y-%m-%d')}.log"
    )

    logger = logging.getLogger(name)

    if not logger.handlers:
        logger.setLevel(getattr(logging, (log_level or LOG_LEVEL).upper(), logging.INFO))
        logger.propagate = False

        formatter = logging.Formatter('%(asctime)s - %(levelname)s - %(message)s')

        file_handler = logging.FileHandler(log_filename, mode='a')
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

        if log_to_console:
            console_handler = logging.StreamHandler()
            console_handler.setFormatter(formatter)
            logger.addHandler(console_handler)

    return logger


def set_level(log_level: str) -> None:
    """
    Change the level of every logger created by setup_logger.

    Args:
        log_level (str): Logging level name, e.g. 'DEBUG'.
    """
    level = getattr(logging, log_level.upper(), logging.INFO)
    for logger in logging.Logger.manager.loggerDict.values():
        if isinstance(logger, logging.Logger) and logger.handlers:
            logger.setLevel(level)
