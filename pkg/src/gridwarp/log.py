"""Logging setup for the command-line front end."""

import logging
import os
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

LOGGER_NAME = "gridwarp"


def configure_logging(verbose: bool = False, console: Optional[Console] = None) -> None:
    """Attach a rich handler to the package logger.

    The level comes from ``GRIDWARP_LOG_LEVEL`` unless ``verbose`` forces DEBUG.
    Calling this twice replaces the previous handler.
    """
    level_name = "DEBUG" if verbose else os.environ.get("GRIDWARP_LOG_LEVEL", "WARNING")
    level = logging.getLevelName(level_name.upper())
    if not isinstance(level, int):
        level = logging.WARNING

    logger = logging.getLogger(LOGGER_NAME)
    for handler in list(logger.handlers):
        if isinstance(handler, RichHandler):
            logger.removeHandler(handler)

    handler = RichHandler(
        console=console or Console(stderr=True),
        show_path=False,
        rich_tracebacks=True,
    )
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
    logger.setLevel(level)
