from __future__ import annotations

import logging
import sys

LOG_FORMAT = "%(asctime)s | %(levelname)s | %(processName)s | %(name)s | %(message)s"

# Chatty at DEBUG, never useful for a run log.
_QUIET = ("matplotlib", "urllib3", "opentelemetry.sdk")


def _level(level: str | int) -> int:
    if isinstance(level, int):
        return level
    resolved = logging.getLevelName(level.upper())
    return resolved if isinstance(resolved, int) else logging.INFO


def configure_logging(level: str | int = logging.INFO) -> None:
    """Log to stdout; numpy/scipy warnings are routed through ``py.warnings``.

    Sweep workers call this again in their own process, so it must stay idempotent.
    """
    resolved = _level(level)
    logging.basicConfig(level=resolved, format=LOG_FORMAT, stream=sys.stdout)
    logging.getLogger().setLevel(resolved)
    logging.captureWarnings(True)
    for name in _QUIET:
        logging.getLogger(name).setLevel(max(resolved, logging.WARNING))


__all__ = ["LOG_FORMAT", "configure_logging"]
