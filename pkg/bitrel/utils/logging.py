import logging
import sys
from typing import Optional, Tuple, Union

import structlog

from bitrel.core.config import settings

_active: Tuple[Union[str, int], bool] = (settings.log_level, settings.debug)


def active_options() -> Tuple[Union[str, int], bool]:
    """(level, debug) of the last configure_logging call, for worker initializers."""
    return _active


def configure_logging(level: Optional[Union[str, int]] = None, debug: Optional[bool] = None):
    global _active
    level = level or settings.log_level
    debug = settings.debug if debug is None else debug
    _active = (level, debug)

    shared_processors = [
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
    ]
    # Console renderer for interactive debugging, JSON lines otherwise
    renderer = structlog.dev.ConsoleRenderer(colors=True) if debug else structlog.processors.JSONRenderer()

    # stdout carries command output; logs go to stderr
    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=level, force=True)

    structlog.configure(
        processors=shared_processors + [renderer],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )
