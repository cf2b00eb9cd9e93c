"""
Logger utility for the clumsy coupon collector toolkit
Provides consistent logging across the library, the harness and the CLI
"""
import logging
import os
import sys
from datetime import datetime
from logging.handlers import RotatingFileHandler

import config

ROOT_LOGGER_NAME = 'clumsy_collector'
_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def _file_handler(log_dir):
    """Rotating file handler in log_dir, or None if the directory is unusable"""
    try:
        os.makedirs(log_dir, exist_ok=True)
        date_part = datetime.now().strftime("%Y%m%d")
        log_file = os.path.join(log_dir, f'{ROOT_LOGGER_NAME}_{date_part}.log')
        handler = RotatingFileHandler(
            log_file,
            maxBytes=10485760,  # 10MB
            backupCount=5,
            delay=True  # Only open file when first record is emitted
        )
        handler.setLevel(logging.DEBUG)
        handler.setFormatter(logging.Formatter(_FORMAT))
        return handler
    except OSError as file_err:
        print(f"Warning: Failed to set up file logger: {str(file_err)}", file=sys.stderr)
        return None


def configure_logger(name=None, level=None, log_dir=None):
    """Configure logger with standard formatting and outputs"""
    logger_name = name or ROOT_LOGGER_NAME
    logger = logging.getLogger(logger_name)

    # Only the root of the namespace owns handlers; children propagate to it
    if logger_name != ROOT_LOGGER_NAME:
        return logger

    level_name = (level or config.LOG_LEVEL).upper()
    logger.setLevel(getattr(logging, level_name, logging.INFO))

    if not logger.handlers:
        # stderr keeps stdout free for data written by the CLI
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(logging.Formatter(_FORMAT))
        logger.addHandler(console_handler)

        target_dir = log_dir or config.LOG_DIR
        if target_dir:
            handler = _file_handler(target_dir)
            if handler is not None:
                logger.addHandler(handler)
        logger.propagate = False

    return logger


def set_level(level):
    """Change the level of the package root logger, e.g. from a CLI flag"""
    logger = configure_logger(ROOT_LOGGER_NAME)
    logger.setLevel(getattr(logging, str(level).upper(), logging.INFO))
    return logger


# Main application logger
app_logger = configure_logger(ROOT_LOGGER_NAME)


def get_module_logger(module_name):
    """Get logger for specific module"""
    return configure_logger(f'{ROOT_LOGGER_NAME}.{module_name}')


def log_exception(logger, e, context=None):
    """Log exception with detailed information and return a one-line summary"""
    context_info = f" while {context}" if context else ""
    message = f"Exception{context_info}: {type(e).__name__}: {str(e)}"
    logger.error(message, exc_info=True)
    return message
