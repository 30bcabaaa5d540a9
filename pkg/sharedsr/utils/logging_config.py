"""
Logging configuration for sharedsr
Provides structured logging with console, rotating file and JSON output
"""

import functools
import json
import logging
import logging.handlers
import os
import sys
import time
from collections.abc import Callable
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, TypeVar

UTC = timezone.utc  # datetime.UTC alias (3.11+)

F = TypeVar("F", bound=Callable[..., Any])

RESERVED_ATTRIBUTES = {
    "name", "msg", "args", "created", "filename", "funcName", "levelname",
    "levelno", "lineno", "module", "exc_info", "exc_text", "stack_info",
    "pathname", "processName", "process", "threadName", "thread",
    "msecs", "relativeCreated", "taskName", "getMessage",
}


class JSONFormatter(logging.Formatter):
    """JSON formatter carrying ``extra=`` fields"""

    def format(self, record: logging.LogRecord) -> str:
        log_obj = {
            "timestamp": datetime.now(UTC).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        if record.exc_info:
            log_obj["exception"] = self.formatException(record.exc_info)

        for key, value in record.__dict__.items():
            if key not in RESERVED_ATTRIBUTES and key not in log_obj:
                log_obj[key] = value

        return json.dumps(log_obj, default=str)


class ColoredFormatter(logging.Formatter):
    """Colored formatter for console output"""

    COLORS = {
        "DEBUG": "\033[36m",  # Cyan
        "INFO": "\033[32m",  # Green
        "WARNING": "\033[33m",  # Yellow
        "ERROR": "\033[31m",  # Red
        "CRITICAL": "\033[35m",  # Magenta
    }
    RESET = "\033[0m"

    def format(self, record: logging.LogRecord) -> str:
        record = logging.makeLogRecord(record.__dict__)
        log_color = self.COLORS.get(record.levelname, self.RESET)
        record.levelname = f"{log_color}{record.levelname}{self.RESET}"
        return super().format(record)


def setup_logging(
    app_name: str = "sharedsr",
    log_level: str | None = None,
    log_file: str | None = None,
    enable_console: bool = True,
    enable_json: bool = False,
    colored: bool = False,
) -> logging.Logger:
    """
    Setup package logging with console and optional file handlers

    Args:
        app_name: Name of the package logger
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Path to log file; no file logging when empty
        enable_console: Enable console logging (stderr, keeps stdout for reports)
        enable_json: Use JSON format for logs
        colored: Color console level names

    Returns:
        Configured logger instance
    """
    log_level = (log_level or os.getenv("SHAREDSR_LOG_LEVEL", "INFO")).upper()
    log_file = log_file if log_file is not None else os.getenv("SHAREDSR_LOG_FILE", "")
    level = getattr(logging, log_level)

    logger = logging.getLogger(app_name)
    logger.setLevel(level)
    logger.handlers = []
    logger.propagate = False

    plain_format = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    if enable_console:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(level)
        if enable_json:
            console_handler.setFormatter(JSONFormatter())
        elif colored:
            console_handler.setFormatter(ColoredFormatter(plain_format))
        else:
            console_handler.setFormatter(logging.Formatter(plain_format))
        logger.addHandler(console_handler)

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        # Rotating file handler (10MB max, keep 5 backups)
        file_handler = logging.handlers.RotatingFileHandler(
            log_file, maxBytes=10 * 1024 * 1024, backupCount=5
        )
        file_handler.setLevel(level)
        if enable_json:
            file_handler.setFormatter(JSONFormatter())
        else:
            file_handler.setFormatter(
                logging.Formatter(
                    "%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s"
                )
            )
        logger.addHandler(file_handler)

        error_file = str(log_path.with_name(log_path.stem + "_error" + log_path.suffix))
        error_handler = logging.handlers.RotatingFileHandler(
            error_file, maxBytes=10 * 1024 * 1024, backupCount=5
        )
        error_handler.setLevel(logging.ERROR)
        error_handler.setFormatter(
            logging.Formatter(
                "%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s"
            )
        )
        logger.addHandler(error_handler)

    return logger


def log_performance(logger: logging.Logger) -> Callable[[F], F]:
    """
    Decorator to log function duration and outcome

    Args:
        logger: Logger instance to use
    """

    def decorator(func: F) -> F:
        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            start_time = time.perf_counter()
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                logger.error(
                    f"{func.__name__} failed",
                    extra={
                        "operation": func.__name__,
                        "duration_seconds": time.perf_counter() - start_time,
                        "status": "error",
                        "error": str(e),
                    },
                )
                raise
            logger.info(
                f"{func.__name__} completed",
                extra={
                    "operation": func.__name__,
                    "duration_seconds": time.perf_counter() - start_time,
                    "status": "success",
                },
            )
            return result

        return wrapper  # type: ignore[return-value]

    return decorator
