"""Factory for creating command functions with proper error handling and logging."""
import functools
import logging

from ..errors import DiscoError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2


def command(func):
    """Decorator turning ``func(config, system) -> summary`` into a CLI command.

    The wrapped command validates the keys it needs, runs, writes the
    manifest and returns a process exit code: 0 on success, 2 for invalid
    input or a failed computation of ours, 1 for anything unexpected.
    """
    name = func.__name__[len('cmd_'):] if func.__name__.startswith('cmd_') else func.__name__

    @functools.wraps(func)
    def wrapper(config, system):
        try:
            logger.debug(f"Executing {func.__name__} in {system.out_dir}")
            config.require(name)
            summary = func(config, system)
            logger.debug(f"Result from {func.__name__}: {summary}")
            system.write_manifest(config.to_dict(), config.seed, {'summary': summary} if summary else None)
            return EXIT_OK
        except DiscoError as e:
            logger.error(f"{name} failed: {type(e).__name__}: {e}")
            return EXIT_INVALID
        except Exception as e:
            logger.error(f"Error in {func.__name__}: {type(e).__name__}: {e}")
            return EXIT_FAILURE

    wrapper.command_name = name
    return wrapper
