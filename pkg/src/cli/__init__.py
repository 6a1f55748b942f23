"""
Command-line interface.
"""

from .runner import COMMANDS, RunConfig, UsageError, build_parser, config_from_args, main, run

__all__ = [
    'COMMANDS',
    'RunConfig',
    'UsageError',
    'build_parser',
    'config_from_args',
    'main',
    'run',
]
