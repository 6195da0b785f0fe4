"""
Handlers for the experiment commands: run, compare and sweep.
"""

from argparse import Namespace
from dataclasses import replace
from pathlib import Path
from typing import Type
import logging

from altmindict.commands.instance_commands import EXIT_OK, load_or_generate, model_from_opts, output_dir
from altmindict.exceptions import ValidationError
from altmindict.repositories.matrix_repository import MANIFEST_FILE, MatrixRepository
from altmindict.repositories.report_repository import ReportRepository
from altmindict.services.dict_update import ABORTED_RUNS, AltMinConfig, altmin_dict
from altmindict.services.experiment_service import SweepConfig, compare, sweep
from altmindict.services.model_core import AccuracySchedule, ModelConfig
from altmindict.services.sparse_recovery import SolverConfig
from altmindict.services.synth_gen import PerturbConfig, perturb_dictionary
from altmindict.utils.formatting import format_error
from altmindict.utils.plotting import plot_compare, plot_error_trace, plot_sweep
from config import Config

logger = logging.getLogger(__name__)

EXIT_ABORTED = 4

TRACE_FILE = 'trace.csv'
COMPARE_FILE = 'compare.csv'
SWEEP_FILE = 'sweep.csv'
SWEEP_MANIFEST_FILE = 'sweep_manifest.txt'


def parse_schedule(text: str, s: int, d: int, mu1: float) -> AccuracySchedule:
    """
    Parse a --threshold value.

    off | theory | fixed=EPS | geometric=EPS0:RATIO | adaptive=EPS0
    """
    mode, _, argument = text.strip().partition('=')
    try:
        if mode == 'off' and not argument:
            return AccuracySchedule.off()
        if mode == 'theory' and not argument:
            return AccuracySchedule.theory(s, d, mu1)
        if mode == 'fixed':
            return AccuracySchedule.fixed(float(argument))
        if mode == 'adaptive':
            return AccuracySchedule.adaptive(float(argument))
        if mode == 'geometric':
            eps0, _, ratio = argument.partition(':')
            return AccuracySchedule.geometric(float(eps0), float(ratio))
    except ValueError as e:
        raise ValidationError('threshold', f"cannot parse '{text}': {e}") from e
    raise ValidationError('threshold', f"expected off, theory, fixed=V, geometric=E:R or adaptive=E, got '{text}'")


def altmin_from_opts(opts: Namespace, model: ModelConfig, app_config: Type[Config]) -> AltMinConfig:
    solver = SolverConfig(
        kind=opts.solver,
        s=model.s,
        max_iters=app_config.GRADES_MAX_ITERS,
        fista_max_iters=app_config.FISTA_MAX_ITERS,
        debias=not opts.no_debias,
    )
    return AltMinConfig(
        T=opts.iters if opts.iters is not None else app_config.DEFAULT_ITERS,
        solver=solver,
        schedule=parse_schedule(opts.threshold, model.s, model.d, model.mu1),
        stop_tol=opts.stop_tol,
        rank_tol=app_config.RANK_TOL,
    )


def cmd_run(opts: Namespace, app_config: Type[Config]) -> int:
    """
    Run AltMinDict from a perturbed A* and write trace.csv.

    An aborted run (rank-deficient update or collapsed atom) still writes
    the partial trace and exits 4.
    """
    Astar, Xstar, Y = load_or_generate(opts)
    model = Y.meta
    altmin = altmin_from_opts(opts, model, app_config)
    A0 = perturb_dictionary(Astar, PerturbConfig(sigma_scale=opts.perturb, seed=opts.seed))
    out = output_dir(opts, app_config)

    exit_code = EXIT_OK
    try:
        report = altmin_dict(Y, A0, altmin, oracle=(Astar, Xstar))
    except ABORTED_RUNS as e:
        logger.error(f"Run aborted after {e.report.iterations} iterations: {e}")
        report = e.report
        exit_code = EXIT_ABORTED

    trace = report.to_frame()
    ReportRepository.save_table(out / TRACE_FILE, trace)
    if opts.svg:
        plot_error_trace(trace, out / 'trace.svg', initial_error=report.initial_error)
    print(f"initial_error={format_error(report.initial_error)} final_error={format_error(report.final_error)} "
          f"iterations={report.iterations}")
    return exit_code


def cmd_compare(opts: Namespace, app_config: Type[Config]) -> int:
    """Write compare.csv (n, init_error, final_error, aborted); exit 4 if any run aborted."""
    if opts.instance:
        model = MatrixRepository.model_from_manifest(
            MatrixRepository.load_manifest(Path(opts.instance) / MANIFEST_FILE))
    else:
        model = model_from_opts(opts)
    n_values = opts.n_values or [model.n]
    altmin = altmin_from_opts(opts, model, app_config)
    threads = opts.threads or app_config.THREADS

    table = compare(model, n_values, PerturbConfig(sigma_scale=opts.perturb, seed=model.seed),
                    altmin, threads=threads)
    out = output_dir(opts, app_config)
    ReportRepository.save_table(out / COMPARE_FILE, table)
    if opts.svg:
        plot_compare(table, out / 'compare.svg')

    for row in table.itertuples(index=False):
        print(f"n={row.n} init_error={format_error(row.init_error)} final_error={format_error(row.final_error)}")
    if table['aborted'].any():
        logger.error(f"{int(table['aborted'].sum())} of {len(table)} runs aborted")
        return EXIT_ABORTED
    return EXIT_OK


def cmd_sweep(opts: Namespace, app_config: Type[Config]) -> int:
    """Write sweep.csv and its metadata manifest; failed trials count as unsuccessful."""
    cfg = SweepConfig(
        r_values=opts.r_values,
        n_over_r=opts.n_over_r,
        trials=opts.trials,
        success_tol=opts.success_tol if opts.success_tol is not None else app_config.SUCCESS_TOL,
        iters=opts.iters if opts.iters is not None else app_config.DEFAULT_ITERS,
        s=opts.s,
        d=opts.sweep_d,
        d_ratio=opts.d_ratio,
        nonzero_law=opts.law,
        M=opts.M,
        sigma_scale=opts.perturb,
        root_seed=opts.seed,
    )
    # Schedule and solver are built for the smallest r
    reference = cfg.trial_model(min(cfg.r_values), max(cfg.n_over_r), 0)
    altmin = replace(altmin_from_opts(opts, reference, app_config), T=cfg.iters)
    threads = opts.threads or app_config.THREADS

    result = sweep(cfg, altmin, threads=threads)
    out = output_dir(opts, app_config)
    ReportRepository.save_table(out / SWEEP_FILE, result.table)
    ReportRepository.save_report(out / SWEEP_MANIFEST_FILE, result.metadata)
    if opts.svg:
        plot_sweep(result.table, out / 'sweep.svg')

    for row in result.table.itertuples(index=False):
        print(f"r={row.r} n/r={row.n_over_r:g} successes={row.successes}/{row.trials} prob={row.prob:.2f}")
    return EXIT_OK
