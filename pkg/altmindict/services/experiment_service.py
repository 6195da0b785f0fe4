"""
Experiment harness: single trials, init-vs-final comparisons and
success-probability sweeps over (r, n/r).

Trials are isolated (own seeds, own buffers) and may run on a thread pool;
tables are assembled in a fixed (r, n/r, trial) order, so output does not
depend on the thread count.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
import pandas as pd

from altmindict.exceptions import AltMinError
from altmindict.services.dict_update import ABORTED_RUNS, AltMinConfig, TrialReport, altmin_dict
from altmindict.services.model_core import ModelConfig, NonzeroLaw
from altmindict.services.synth_gen import PerturbConfig, gen_samples, perturb_dictionary
from altmindict.utils.batch_processing import run_batch
from altmindict.utils.seeding import derive_seed
from altmindict.validation import (
    raise_if_invalid,
    validate_integer,
    validate_non_empty,
    validate_number,
    validate_probability,
    validate_seed,
)

logger = logging.getLogger(__name__)

DEFAULT_SUCCESS_TOL = 1e-6
DEFAULT_SIGMA = 0.5
# Anything a trial raises is recorded as a failed trial; a batch never aborts
TRIAL_FAILURES = (Exception,)

COMPARE_COLUMNS = ['n', 'init_error', 'final_error', 'aborted']
SWEEP_COLUMNS = ['r', 'n_over_r', 'trials', 'successes', 'prob']


@dataclass(frozen=True)
class TrialResult:
    """One seeded trial of a compare or sweep cell."""
    seed: int
    n: int
    initial_error: float
    final_error: float
    iterations: int
    aborted: bool = False
    error: Optional[str] = None

    def succeeded(self, tol: float) -> bool:
        return not self.aborted and self.final_error < tol

    @classmethod
    def failed(cls, seed: int, n: int, error: str) -> 'TrialResult':
        return cls(seed=seed, n=n, initial_error=float('nan'), final_error=float('nan'),
                   iterations=0, aborted=True, error=error)


def run_trial(model: ModelConfig, perturb: PerturbConfig, altmin: AltMinConfig) -> TrialReport:
    """
    Generate an instance, perturb A* into A0 and run AltMinDict against the oracle.

    Aborted runs propagate with their partial report attached.
    """
    Astar, Xstar, Y = gen_samples(model)
    A0 = perturb_dictionary(Astar, perturb)
    return altmin_dict(Y, A0, altmin, oracle=(Astar, Xstar))


def _trial_outcome(model: ModelConfig, perturb: PerturbConfig, altmin: AltMinConfig) -> TrialResult:
    try:
        report = run_trial(model, perturb, altmin)
    except ABORTED_RUNS as e:
        return TrialResult(seed=model.seed, n=model.n, initial_error=e.report.initial_error,
                           final_error=e.report.final_error, iterations=e.report.iterations,
                           aborted=True, error=str(e))
    except AltMinError as e:
        logger.warning(f"Trial seed={model.seed} n={model.n} failed: {e}")
        return TrialResult.failed(model.seed, model.n, str(e))
    return TrialResult(seed=model.seed, n=model.n, initial_error=report.initial_error,
                       final_error=report.final_error, iterations=report.iterations)


def _fill_failures(summary, make_result) -> None:
    """Put a failed TrialResult into every slot whose task raised."""
    for failure in summary.failures:
        summary.results[failure['index']] = make_result(failure['index'], failure['error'])


def compare(model: ModelConfig, n_values: Sequence[int], perturb: PerturbConfig,
            altmin: AltMinConfig, threads: int = 1) -> pd.DataFrame:
    """
    Initial (perturbed) versus final error for each sample size n.

    All rows share the model seed, hence the same A* and A0; only X* grows.
    Aborted runs keep their last error; any run that raises is kept with
    aborted=1.
    """
    raise_if_invalid(validate_non_empty(list(n_values), "n"))
    for n in n_values:
        raise_if_invalid(validate_integer(n, "n", min_value=1))

    configs = [replace(model, n=int(n)) for n in n_values]
    summary = run_batch(lambda cfg: _trial_outcome(cfg, perturb, altmin), configs, threads=threads,
                        catch=TRIAL_FAILURES)
    _fill_failures(summary, lambda index, error: TrialResult.failed(configs[index].seed, configs[index].n, error))

    rows = [{
        'n': result.n,
        'init_error': result.initial_error,
        'final_error': result.final_error,
        'aborted': int(result.aborted),
    } for result in summary.results]
    frame = pd.DataFrame(rows, columns=COMPARE_COLUMNS)
    logger.info(f"Compare over {len(frame)} sample sizes finished")
    return frame


@dataclass(frozen=True)
class SweepConfig:
    """
    Grid of (r, n/r) cells with `trials` seeded trials each.

    d defaults to round(d_ratio·r); the trial seed is
    derive_seed(root_seed, r, n_over_r, trial).
    """
    r_values: Tuple[int, ...] = (64, 128)
    n_over_r: Tuple[float, ...] = tuple(float(v) for v in range(1, 11))
    trials: int = 10
    success_tol: float = DEFAULT_SUCCESS_TOL
    iters: int = 25
    s: int = 3
    d: Optional[int] = None
    d_ratio: float = 0.5
    nonzero_law: str = NonzeroLaw.UNIFORM_PM_1_2.value
    M: Optional[float] = None
    sigma_scale: float = DEFAULT_SIGMA
    root_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'r_values', tuple(int(r) for r in self.r_values))
        object.__setattr__(self, 'n_over_r', tuple(float(v) for v in self.n_over_r))
        raise_if_invalid(
            validate_non_empty(self.r_values, "r_values"),
            validate_non_empty(self.n_over_r, "n_over_r"),
            validate_integer(self.trials, "trials", min_value=1),
            validate_number(self.success_tol, "success_tol", min_value=0.0, exclusive_min=True),
            validate_integer(self.iters, "iters", min_value=1),
            validate_integer(self.s, "s", min_value=1),
            validate_number(self.d_ratio, "d_ratio", min_value=0.0, max_value=1.0, exclusive_min=True),
            validate_number(self.sigma_scale, "sigma_scale", min_value=0.0),
            validate_seed(self.root_seed, "root_seed"),
        )
        for value in self.n_over_r:
            raise_if_invalid(validate_number(value, "n_over_r", min_value=0.0, exclusive_min=True))
        if self.d is not None:
            raise_if_invalid(validate_integer(self.d, "d", min_value=1))

    def dimension(self, r: int) -> int:
        return self.d if self.d is not None else max(1, int(round(self.d_ratio * r)))

    def trial_model(self, r: int, n_over_r: float, trial: int) -> ModelConfig:
        return ModelConfig(
            d=self.dimension(r),
            r=r,
            n=max(1, int(math.ceil(n_over_r * r))),
            s=self.s,
            nonzero_law=self.nonzero_law,
            M=self.M,
            seed=derive_seed(self.root_seed, r, n_over_r, trial),
        )

    def metadata(self) -> Dict[str, object]:
        """Manifest written beside the sweep CSV."""
        return {
            'r_values': ','.join(str(r) for r in self.r_values),
            'n_over_r': ','.join(f"{v:g}" for v in self.n_over_r),
            'trials': self.trials,
            'success_tol': self.success_tol,
            'iters': self.iters,
            's': self.s,
            'd_rule': f"d={self.d}" if self.d is not None else f"d=round({self.d_ratio:g}*r)",
            'nonzero_law': self.nonzero_law,
            'sigma_scale': self.sigma_scale,
            'root_seed': self.root_seed,
            'seed_rule': 'derive_seed(root_seed, r, n_over_r, trial)',
            # d and s per r-curve are desk-scale choices, not published settings
            'desk_scale_substitutes': 'true',
        }


@dataclass
class SweepResult:
    table: pd.DataFrame
    trials: List[TrialResult] = field(default_factory=list)
    metadata: Dict[str, object] = field(default_factory=dict)


def sweep(cfg: SweepConfig, altmin: AltMinConfig, threads: int = 1) -> SweepResult:
    """
    Empirical success probability per (r, n/r) cell.

    Success means final error < success_tol after cfg.iters iterations.
    Failed trials (aborted runs, invalid cell sizes, any exception raised by
    a trial) count as unsuccessful; the sweep itself never aborts.
    """
    altmin = replace(altmin, T=cfg.iters)
    tasks = []
    for r in cfg.r_values:
        for ratio in cfg.n_over_r:
            for trial in range(cfg.trials):
                tasks.append((r, ratio, trial))

    def _run(task):
        r, ratio, trial = task
        try:
            model = cfg.trial_model(r, ratio, trial)
        except AltMinError as e:
            logger.warning(f"Cell r={r} n/r={ratio:g} skipped: {e}")
            return TrialResult.failed(derive_seed(cfg.root_seed, r, ratio, trial), 0, str(e))
        perturb = PerturbConfig(sigma_scale=cfg.sigma_scale, seed=model.seed)
        return _trial_outcome(model, perturb, altmin)

    logger.info(f"Sweep: {len(cfg.r_values)} r values x {len(cfg.n_over_r)} ratios x {cfg.trials} trials")
    summary = run_batch(_run, tasks, threads=threads, catch=TRIAL_FAILURES)
    _fill_failures(summary, lambda index, error: TrialResult.failed(derive_seed(cfg.root_seed, *tasks[index]), 0, error))

    rows = []
    for cell_start in range(0, len(tasks), cfg.trials):
        r, ratio, _ = tasks[cell_start]
        cell = summary.results[cell_start:cell_start + cfg.trials]
        successes = sum(result.succeeded(cfg.success_tol) for result in cell)
        rows.append({
            'r': r,
            'n_over_r': ratio,
            'trials': cfg.trials,
            'successes': successes,
            'prob': successes / cfg.trials,
        })
        logger.debug(f"Cell r={r} n/r={ratio:g}: {successes}/{cfg.trials}")

    return SweepResult(
        table=pd.DataFrame(rows, columns=SWEEP_COLUMNS),
        trials=list(summary.results),
        metadata=cfg.metadata(),
    )


def transition_point(table: pd.DataFrame, r: int, level: float = 0.5) -> float:
    """First n/r at which the success probability for r reaches level (nan if never)."""
    raise_if_invalid(validate_probability(level, "level"))
    rows = table[(table['r'] == r) & (table['prob'] >= level)].sort_values('n_over_r')
    if rows.empty:
        return float('nan')
    return float(rows['n_over_r'].iloc[0])


def count_inversions(table: pd.DataFrame, r: int, slack: float = 0.0) -> int:
    """Number of consecutive n/r steps where the probability drops by more than slack."""
    probs = table[table['r'] == r].sort_values('n_over_r')['prob'].to_numpy()
    return int(np.sum(np.diff(probs) < -slack))
