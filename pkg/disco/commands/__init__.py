"""Command-line commands, one module per subcommand."""

import importlib
import inspect
import logging
import os
from typing import Callable, Dict

from .command_factory import EXIT_FAILURE, EXIT_INVALID, EXIT_OK, command

logger = logging.getLogger(__name__)

SKIPPED = ('__init__.py', 'command_factory.py', 'common.py')


def discover_commands() -> Dict[str, Callable]:
    """Find every ``cmd_*`` function in the modules of this package."""
    commands = {}
    directory = os.path.dirname(__file__)
    files = [f for f in os.listdir(directory) if f.endswith('.py') and f not in SKIPPED]
    for file in sorted(files):
        module = importlib.import_module(f'{__name__}.{file[:-3]}')
        for name, obj in inspect.getmembers(module, inspect.isfunction):
            if name.startswith('cmd_') and obj.__module__ == module.__name__:
                commands[getattr(obj, 'command_name', name[len('cmd_'):])] = obj
    logger.debug(f"Discovered commands: {sorted(commands)}")
    return commands


__all__ = ['EXIT_FAILURE', 'EXIT_INVALID', 'EXIT_OK', 'command', 'discover_commands']
