"""
Console logging for the lab, colourised with colorlog.
"""

import logging

import colorlog

from .config import settings

_FORMAT = "%(log_color)s%(asctime)s %(levelname)-8s%(reset)s %(name)s: %(message)s"
_configured = False


def _configure_root():
    global _configured
    if _configured:
        return
    handler = colorlog.StreamHandler()
    handler.setFormatter(colorlog.ColoredFormatter(_FORMAT, datefmt="%H:%M:%S"))
    root = logging.getLogger("dclab")
    root.addHandler(handler)
    root.setLevel(settings.log_level.upper())
    root.propagate = False
    _configured = True


def get_logger(name: str) -> logging.Logger:
    """Return a logger under the ``dclab`` namespace."""
    _configure_root()
    short = name.split(".", 1)[1] if name.startswith("src.") else name
    return logging.getLogger(f"dclab.{short}")


def set_level(level: str):
    """Override the console level (used by the CLI ``--verbose`` flag)."""
    _configure_root()
    logging.getLogger("dclab").setLevel(level.upper())
