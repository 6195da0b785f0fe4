"""
Command dispatch and exit-code mapping.

0 success, 2 invalid flags or values, 3 I/O, malformed matrix files or
instance data that breaks the model (non-unit atoms, inconsistent shapes),
4 aborted run: rank-deficient update or collapsed atom (the partial CSV is
still written).
"""

from typing import Optional, Sequence
import logging
import sys

from altmindict.commands.experiment_commands import EXIT_ABORTED, cmd_compare, cmd_run, cmd_sweep
from altmindict.commands.instance_commands import cmd_check, cmd_gen
from altmindict.commands.parser import parse_args
from altmindict.exceptions import (
    AltMinError,
    ConfigurationError,
    MatrixFormatError,
    RankDeficientError,
    ValidationError,
    ZeroColumnError,
)
from altmindict.main import create_app

logger = logging.getLogger(__name__)

EXIT_INVALID = 2
EXIT_IO = 3

HANDLERS = {
    'gen': cmd_gen,
    'run': cmd_run,
    'compare': cmd_compare,
    'sweep': cmd_sweep,
    'check': cmd_check,
}


def main(argv: Optional[Sequence[str]] = None, config_name: Optional[str] = None) -> int:
    """Parse argv, configure logging and run one command; returns the exit code."""
    try:
        opts = parse_args(argv)
    except SystemExit as e:
        # argparse already printed usage
        return int(e.code) if isinstance(e.code, int) else EXIT_INVALID
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO

    log_level = 'DEBUG' if opts.verbose else 'ERROR' if opts.quiet else None
    try:
        app_config = create_app(config_name, log_level=log_level)
    except ConfigurationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID

    try:
        return HANDLERS[opts.command](opts, app_config)
    except ValidationError as e:
        logger.error(f"Invalid value: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (MatrixFormatError, OSError) as e:
        logger.error(f"I/O failure: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (RankDeficientError, ZeroColumnError) as e:
        logger.error(f"Aborted: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ABORTED
    except AltMinError as e:
        logger.error(f"Inconsistent instance: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
