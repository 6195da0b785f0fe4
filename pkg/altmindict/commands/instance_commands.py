"""
Handlers for the instance commands: gen and check.
"""

from argparse import Namespace
from pathlib import Path
from typing import Tuple, Type
import logging

from altmindict.repositories.matrix_repository import MatrixRepository
from altmindict.repositories.report_repository import ReportRepository
from altmindict.services.diagnostics import run_diagnostics
from altmindict.services.model_core import CoefficientMatrix, Dictionary, ModelConfig, SampleSet
from altmindict.services.synth_gen import gen_samples, second_moment
from config import Config

logger = logging.getLogger(__name__)

EXIT_OK = 0
CHECK_REPORT_FILE = 'check.txt'


def output_dir(opts: Namespace, app_config: Type[Config]) -> Path:
    return Path(opts.out if opts.out else app_config.APP_DATA_DIR)


def model_from_opts(opts: Namespace) -> ModelConfig:
    """ModelConfig from the model flags; raises ValidationError naming the bad field."""
    return ModelConfig(
        d=opts.d,
        r=opts.r,
        n=opts.n,
        s=opts.s,
        nonzero_law=opts.law,
        M=opts.M,
        mu1=opts.mu1,
        seed=opts.seed,
        custom_low=opts.custom_low,
    )


def load_or_generate(opts: Namespace) -> Tuple[Dictionary, CoefficientMatrix, SampleSet]:
    """(A*, X*, Y) from --instance when given, else generated from the model flags."""
    if opts.instance:
        return MatrixRepository.load_instance(opts.instance)
    return gen_samples(model_from_opts(opts))


def cmd_gen(opts: Namespace, app_config: Type[Config]) -> int:
    """Write Astar, Xstar, Y and the manifest to --out."""
    model = model_from_opts(opts)
    Astar, Xstar, Y = gen_samples(model)
    directory = MatrixRepository.save_instance(output_dir(opts, app_config), Astar, Xstar, Y,
                                               model.as_manifest())
    print(f"Instance written to {directory} (d={model.d}, r={model.r}, n={model.n}, s={model.s})")
    return EXIT_OK


def cmd_check(opts: Namespace, app_config: Type[Config]) -> int:
    """Print the diagnostics report and save it as check.txt; always exits 0."""
    Astar, Xstar, Y = load_or_generate(opts)
    model = Y.meta
    report = run_diagnostics(
        Astar,
        Xstar,
        model.s,
        cap=opts.cap if opts.cap is not None else app_config.RIP_ENUMERATION_CAP,
        samples=opts.samples if opts.samples is not None else app_config.RIP_SAMPLED_SUPPORTS,
        second_moment=second_moment(model),
        concentration_delta=opts.concentration_delta,
        seed=opts.seed,
    )
    path = ReportRepository.save_report(output_dir(opts, app_config) / CHECK_REPORT_FILE, report)
    print(path.read_text(), end='')
    return EXIT_OK
