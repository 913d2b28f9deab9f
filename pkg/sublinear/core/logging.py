import logging
import sys
from typing import Optional

import structlog
from sublinear.core.config import settings

def setup_logging(level: Optional[str] = None, json_logs: Optional[bool] = None) -> None:
    """
    Set up structured logging using structlog.

    Estimator runs are chatty only at phase boundaries, so the same configuration
    serves the CLI, the parallel bench workers and the test-suite.
    """
    timestamper = structlog.processors.TimeStamper(fmt="iso")

    shared_processors = [
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.stdlib.PositionalArgumentsFormatter(),
        timestamper,
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        structlog.processors.UnicodeDecoder(),
    ]

    if json_logs is None:
        json_logs = settings.ENVIRONMENT == "production" or not settings.DEBUG

    if json_logs:
        processors = shared_processors + [
            structlog.processors.dict_tracebacks,
            structlog.processors.JSONRenderer(),
        ]
    else:
        processors = shared_processors + [
            structlog.dev.ConsoleRenderer(),
        ]

    if level is not None:
        log_level = getattr(logging, level.upper(), logging.INFO)
    elif settings.DEBUG:
        log_level = logging.DEBUG
    else:
        log_level = getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO)

    structlog.configure(
        processors=processors,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    root_logger = logging.getLogger()
    if not root_logger.hasHandlers():
        # stdout carries the JSON reports of the CLI
        handler: logging.Handler
        if settings.LOG_FILE:
            handler = logging.FileHandler(settings.LOG_FILE)
        else:
            handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(message)s"))
        root_logger.addHandler(handler)

    root_logger.setLevel(log_level)

    logging.getLogger("asyncio").setLevel(logging.WARNING)

    logger = structlog.get_logger("sublinear.setup_logging")
    logger.debug(
        "Logging configured",
        environment=settings.ENVIRONMENT,
        log_level=logging.getLevelName(log_level),
        json_logs=json_logs,
    )
