"""Command-line runner for mala-lab experiments."""

from .cli import main, run

__all__ = ["main", "run"]
