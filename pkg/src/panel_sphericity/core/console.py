"""
Console and logger setup shared by the CLI and the Monte-Carlo harness.

Human-facing progress goes to stderr through rich; stdout is reserved for
key=value result lines.
"""

from __future__ import annotations

import logging
from functools import lru_cache

from rich.console import Console
from rich.logging import RichHandler

from panel_sphericity.config import load_config

err_console = Console(stderr=True)


@lru_cache()
def _configure_root() -> logging.Logger:
    root = logging.getLogger("panel_sphericity")
    handler = RichHandler(console=err_console, show_path=False, markup=False)
    handler.setFormatter(logging.Formatter("%(message)s"))
    root.addHandler(handler)
    root.setLevel(load_config().LOG_LEVEL.upper())
    root.propagate = False
    return root


def get_logger(name: str) -> logging.Logger:
    """Return a package logger; messages follow the `[Tag] message` convention."""
    _configure_root()
    return logging.getLogger(name)


def set_level(level: str) -> None:
    _configure_root().setLevel(level.upper())
