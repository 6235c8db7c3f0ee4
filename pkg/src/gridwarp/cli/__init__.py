"""CLI module for gridwarp."""

from .main import main

__all__ = ["main"]
