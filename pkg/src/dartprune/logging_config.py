"""
structlog setup for dartprune

Log lines go to stderr so that stdout only ever carries the JSON report.
Event names are snake_case with keyword context, e.g.
``logger.info("tokens_pruned", n=576, retained=64)``.
"""
import logging
import sys
from typing import Any, Dict, List, Optional

import numpy as np
import structlog

LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def _plain_numbers(_logger, _method: str, event_dict: Dict[str, Any]) -> Dict[str, Any]:
    """numpy scalars and small arrays become plain Python values"""
    for key, value in event_dict.items():
        if isinstance(value, np.generic):
            event_dict[key] = value.item()
        elif isinstance(value, np.ndarray):
            event_dict[key] = value.tolist() if value.size <= 32 else f"<array shape={value.shape}>"
    return event_dict


def _processors(json_logs: bool) -> List[Any]:
    chain: List[Any] = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.processors.TimeStamper(fmt="iso", utc=True),
        _plain_numbers,
        structlog.processors.format_exc_info,
    ]
    chain.append(structlog.processors.JSONRenderer() if json_logs else structlog.dev.ConsoleRenderer(colors=False))
    return chain


def configure_logging(log_level: str = "WARNING", json_logs: bool = False):
    """
    Route stdlib logging to stderr and install the structlog chain

    Safe to call more than once; the last call wins.

    Args:
        log_level: one of DEBUG, INFO, WARNING, ERROR, CRITICAL
        json_logs: one JSON object per line instead of console output
    """
    level = log_level.upper()
    if level not in LEVELS:
        raise ValueError(f"unknown log level {log_level!r}")

    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=getattr(logging, level), force=True)
    structlog.configure(
        processors=_processors(json_logs),
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )


def get_logger(name: Optional[str] = None):
    return structlog.get_logger(name)


def bind_context(**kwargs):
    """
    Attach keys to every following log line, e.g. ``bind_context(command="prune")``
    """
    structlog.contextvars.bind_contextvars(**kwargs)


def unbind_context(*keys):
    structlog.contextvars.unbind_contextvars(*keys)


def clear_context():
    structlog.contextvars.clear_contextvars()
