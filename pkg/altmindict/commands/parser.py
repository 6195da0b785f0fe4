"""
Argument parsing for the altmindict command line.

Every option defaults to "unset" so values can be layered:
built-in defaults < --config file < explicit flags.
"""

from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence
import argparse
import logging

from dotenv import dotenv_values

from altmindict.exceptions import ValidationError
from altmindict.utils.formatting import parse_bool

logger = logging.getLogger(__name__)

COMMANDS = ('gen', 'run', 'compare', 'sweep', 'check')


def int_list(value: str) -> List[int]:
    try:
        return [int(item) for item in value.split(',') if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{value}'") from e


def float_list(value: str) -> List[float]:
    try:
        return [float(item) for item in value.split(',') if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{value}'") from e


def _flag(value: Any) -> bool:
    parsed = parse_bool(value)
    if parsed is None:
        raise ValueError(f"expected true/false, got '{value}'")
    return parsed


# dest -> (converter for config-file strings, default)
OPTIONS: Dict[str, tuple] = {
    'seed': (int, 0),
    'out': (str, None),
    'threads': (int, None),
    'verbose': (_flag, False),
    'quiet': (_flag, False),
    'd': (int, 100),
    'r': (int, 200),
    'n': (int, 8000),
    's': (int, 3),
    'law': (str, 'uniform_pm_1_2'),
    'M': (float, None),
    'custom_low': (float, None),
    'mu1': (float, 1.0),
    'instance': (str, None),
    'solver': (str, 'grades'),
    'iters': (int, None),
    'perturb': (float, 0.5),
    'threshold': (str, 'off'),
    'stop_tol': (float, 0.0),
    'no_debias': (_flag, False),
    'svg': (_flag, False),
    'n_values': (int_list, None),
    'r_values': (int_list, [64, 128]),
    'n_over_r': (float_list, [float(v) for v in range(1, 11)]),
    'trials': (int, 10),
    'success_tol': (float, None),
    'd_ratio': (float, 0.5),
    'sweep_d': (int, None),
    'concentration_delta': (float, 0.2),
    'cap': (int, None),
    'samples': (int, None),
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group('global options')
    group.add_argument('--seed', type=int, help='Root seed (default 0)')
    group.add_argument('--out', help='Output directory (default: ALTMIN_DATA_DIR)')
    group.add_argument('--threads', type=int, help='Worker threads for compare/sweep')
    group.add_argument('--config', help='key=value file of option defaults')
    group.add_argument('--verbose', action='store_true', default=argparse.SUPPRESS, help='Debug logging')
    group.add_argument('--quiet', action='store_true', default=argparse.SUPPRESS, help='Errors only')


def _add_model(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group('model')
    group.add_argument('--d', type=int, help='Ambient dimension (default 100)')
    group.add_argument('--r', type=int, help='Number of atoms (default 200)')
    group.add_argument('--n', type=int, help='Number of samples (default 8000)')
    group.add_argument('--s', type=int, help='Sparsity (default 3)')
    group.add_argument('--law', choices=['rademacher', 'uniform_pm_1_2', 'custom'],
                       help='Nonzero law (default uniform_pm_1_2)')
    group.add_argument('--M', type=float, help='Bound on |nonzero|')
    group.add_argument('--custom-low', dest='custom_low', type=float, help='Lower magnitude of the custom law')
    group.add_argument('--mu1', type=float, help='Spectral constant for the theory schedule (default 1)')


def _add_instance(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--instance', help='Instance directory written by gen (overrides model flags)')


def _add_algorithm(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group('algorithm')
    group.add_argument('--solver', choices=['grades', 'l1', 'l1_constrained'], help='Sparse solver (default grades)')
    group.add_argument('--iters', type=int, help='Iterations T (default 25)')
    group.add_argument('--perturb', type=float, help='Initialization noise scale sigma (default 0.5)')
    group.add_argument('--threshold',
                       help='off | theory | fixed=EPS | geometric=EPS0:RATIO | adaptive=EPS0 (default off)')
    group.add_argument('--stop-tol', dest='stop_tol', type=float, help='Early exit below this error (default 0)')
    group.add_argument('--no-debias', dest='no_debias', action='store_true', default=argparse.SUPPRESS,
                       help='Skip least squares on the final GraDeS support')
    group.add_argument('--svg', action='store_true', default=argparse.SUPPRESS, help='Also write an SVG chart')


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    _add_common(common)

    parser = argparse.ArgumentParser(
        prog='altmindict',
        description='Alternating minimization for dictionary learning',
        parents=[common],
        argument_default=argparse.SUPPRESS,
    )
    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')
    subparsers.required = True

    def sub(name: str, help_text: str) -> argparse.ArgumentParser:
        return subparsers.add_parser(name, help=help_text, parents=[common],
                                     argument_default=argparse.SUPPRESS)

    gen = sub('gen', 'Generate an instance (Astar, Xstar, Y, manifest)')
    _add_model(gen)

    run = sub('run', 'Run AltMinDict and write the per-iteration trace')
    _add_model(run)
    _add_instance(run)
    _add_algorithm(run)

    compare = sub('compare', 'Initial versus final error for several n')
    _add_model(compare)
    _add_instance(compare)
    _add_algorithm(compare)
    compare.add_argument('--n-values', dest='n_values', type=int_list, help='Comma-separated sample sizes')

    sweep = sub('sweep', 'Success probability over an (r, n/r) grid')
    _add_algorithm(sweep)
    sweep.add_argument('--r-values', dest='r_values', type=int_list, help='Comma-separated r (default 64,128)')
    sweep.add_argument('--n-over-r', dest='n_over_r', type=float_list, help='Comma-separated n/r (default 1..10)')
    sweep.add_argument('--trials', type=int, help='Trials per cell (default 10)')
    sweep.add_argument('--success-tol', dest='success_tol', type=float, help='Success threshold (default 1e-6)')
    sweep.add_argument('--s', type=int, help='Sparsity (default 3)')
    sweep.add_argument('--d', dest='sweep_d', type=int, help='Fixed dimension (default round(d_ratio*r))')
    sweep.add_argument('--d-ratio', dest='d_ratio', type=float, help='d/r when --d is not given (default 0.5)')
    sweep.add_argument('--law', choices=['rademacher', 'uniform_pm_1_2', 'custom'], help='Nonzero law')
    sweep.add_argument('--M', type=float, help='Bound on |nonzero|')

    check = sub('check', 'Diagnostics report for an instance')
    _add_model(check)
    _add_instance(check)
    check.add_argument('--concentration-delta', dest='concentration_delta', type=float,
                       help='Band half-width for the support concentration check (default 0.2)')
    check.add_argument('--cap', type=int, help='Exhaustive RIP enumeration cap')
    check.add_argument('--samples', type=int, help='Sampled RIP supports beyond the cap')

    return parser


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Read a flat key=value options file.

    Keys use flag names with dashes or underscores; values are converted
    with the same types as the flags.

    Raises:
        FileNotFoundError: if the file does not exist
        ValidationError: for unknown keys or unconvertible values
    """
    if not Path(path).is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    values = {}
    for raw_key, raw_value in dotenv_values(path).items():
        key = raw_key.strip().lstrip('-').replace('-', '_')
        if key not in OPTIONS:
            raise ValidationError(raw_key, f"unknown option in {path}")
        if raw_value is None:
            continue
        converter: Callable = OPTIONS[key][0]
        try:
            values[key] = converter(raw_value)
        except (ValueError, argparse.ArgumentTypeError) as e:
            raise ValidationError(key, str(e)) from e
    logger.debug(f"Loaded {len(values)} options from {path}")
    return values


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """
    Parse argv and layer defaults, --config values and explicit flags.

    Invalid flags exit with code 2 (argparse); bad config files raise
    ValidationError.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    explicit = vars(args)

    merged = {key: default for key, (_, default) in OPTIONS.items()}
    if explicit.get('config'):
        merged.update(load_config_file(explicit['config']))
    merged.update({key: value for key, value in explicit.items() if key != 'config'})
    merged['config'] = explicit.get('config')
    return argparse.Namespace(**merged)
