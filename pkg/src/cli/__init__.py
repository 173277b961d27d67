"""Command-line interface."""

from src.cli.commands import run, build_parser, UsageError, EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_TRAINING

__all__ = ['run', 'build_parser', 'UsageError', 'EXIT_OK', 'EXIT_USAGE', 'EXIT_DATA', 'EXIT_TRAINING']
