"""Main entry point for pydisco."""

import argparse
import logging
import sys
from typing import List, Optional

from func_timeout import FunctionTimedOut, func_timeout

from .commands import EXIT_FAILURE, EXIT_INVALID, discover_commands
from .config import load_config
from .errors import DiscoError
from .system import System
from .tasks import TaskManager

logger = logging.getLogger(__name__)


def setup_logging(verbosity: int):
    """Configure logging based on verbosity."""
    if verbosity <= 0:
        log_level = logging.WARNING
    else:
        log_level = logging.DEBUG if verbosity > 1 else logging.INFO

    # Clear existing handlers
    root = logging.getLogger()
    for handler in root.handlers[:]:
        root.removeHandler(handler)

    logging.basicConfig(
        format='%(levelname)s - %(name)s - %(message)s',
        level=log_level,
        force=True
    )


def build_parser(commands) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='pydisco - private split inference laboratory')
    parser.add_argument('command', choices=sorted(commands),
                        help='Experiment to run')
    parser.add_argument('-c', '--config',
                        help='Key-value configuration file')
    parser.add_argument('-s', '--seed', type=int,
                        help='Override the configured seed')
    parser.add_argument('-o', '--out',
                        help='Override the output directory')
    parser.add_argument('-v', '--verbosity', type=int, default=1,
                        help='Verbosity level (0-3)')
    parser.add_argument('-t', '--timeout', type=int,
                        help='Global run timeout in seconds')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Command line entry point; returns the process exit code."""
    commands = discover_commands()
    args = build_parser(commands).parse_args(argv)
    setup_logging(args.verbosity)

    try:
        config = load_config(args.config, {'seed': args.seed, 'out_dir': args.out})
    except DiscoError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_INVALID

    system = System(config.out_dir, args.command, TaskManager(config.workers))
    run = commands[args.command]
    logger.info(f"Running {args.command} (seed {config.seed}) into {config.out_dir}")
    if args.timeout:
        try:
            code = func_timeout(args.timeout, run, args=(config, system))
        except FunctionTimedOut:
            logger.error(f"{args.command} timed out after {args.timeout}s")
            code = EXIT_FAILURE
    else:
        code = run(config, system)
    if system.task_manager.total_stats['tasks_executed']:
        system.task_manager.print_stats()
    return code


if __name__ == '__main__':
    sys.exit(main())
