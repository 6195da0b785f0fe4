"""
Dictionary update and the AltMinDict driver.

One round: sparse recovery of every sample → threshold → least-squares
dictionary estimate Y X† → column normalization. The driver records a
per-iteration trace; against an oracle (A*, X*) it also measures the
recovery error and support containment.

Pure Python + numpy/scipy - no file access.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple
import logging
import time

import numpy as np
import pandas as pd
from scipy import linalg

from altmindict.exceptions import RankDeficientError, ShapeMismatchError, ZeroColumnError
from altmindict.services.model_core import (
    AccuracySchedule,
    CoefficientMatrix,
    Dictionary,
    SampleSet,
    ScheduleMode,
    align_signs,
    error_metric,
    normalize_columns,
)
from altmindict.services.sparse_recovery import (
    SolverConfig,
    SolverKind,
    recover_all,
    threshold_level,
)
from altmindict.validation import raise_if_invalid, validate_integer, validate_number

logger = logging.getLogger(__name__)

DEFAULT_RANK_TOL = 1e-10
# Eigenvalue cutoff (relative to the largest) of the fallback pseudo-inverse
PINV_CUTOFF = 1e-12
DEFAULT_ITERATIONS = 25

TRACE_COLUMNS = ['t', 'eps', 'dict_error', 'max_dx_inf', 'supp_ok', 'seconds']


def least_squares_update(Y, X, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """
    Estimate A = Y X† = Y Xᵀ (X Xᵀ)⁻¹ (not yet normalized).

    Solves the s.p.d. system (X Xᵀ) Aᵀ = X Yᵀ by Cholesky; falls back to an
    eigendecomposition pseudo-inverse if the factorization fails.

    Raises:
        RankDeficientError: if σ_min(X Xᵀ) <= rank_tol·σ_max(X Xᵀ)
    """
    Ymat = Y.Y if isinstance(Y, SampleSet) else np.asarray(Y, dtype=np.float64)
    Xmat = X.entries if isinstance(X, CoefficientMatrix) else np.asarray(X, dtype=np.float64)
    if Ymat.shape[1] != Xmat.shape[1]:
        raise ShapeMismatchError((Ymat.shape[0], Xmat.shape[1]), Ymat.shape)

    gram = Xmat @ Xmat.T
    cross = Xmat @ Ymat.T
    eigenvalues = linalg.eigvalsh(gram)
    sigma_min, sigma_max = float(eigenvalues[0]), float(eigenvalues[-1])
    if sigma_max <= 0.0 or sigma_min <= rank_tol * sigma_max:
        logger.warning(f"Coefficient Gram is rank deficient: sigma_min={sigma_min:.3e}, sigma_max={sigma_max:.3e}")
        raise RankDeficientError(sigma_min, sigma_max)

    try:
        factor = linalg.cho_factor(gram, lower=True, check_finite=False)
        At = linalg.cho_solve(factor, cross, check_finite=False)
    except linalg.LinAlgError:
        logger.warning("Cholesky failed on X Xᵀ; falling back to eigen pseudo-inverse")
        w, V = linalg.eigh(gram)
        keep = w > PINV_CUTOFF * w[-1]
        At = V[:, keep] @ ((V[:, keep].T @ cross) / w[keep][:, None])
    return At.T


def accuracy_at(schedule: AccuracySchedule, t: int) -> float:
    """
    eps_t of the schedule.

    theory / geometric: eps0·ratio^t; fixed: eps0; off: 0. Adaptive returns
    eps0 here; the driver substitutes the measured residual median for t ≥ 1.
    """
    raise_if_invalid(validate_integer(t, "t", min_value=0))
    if schedule.mode in (ScheduleMode.THEORY.value, ScheduleMode.GEOMETRIC.value):
        return schedule.eps0 * schedule.ratio ** t
    if schedule.mode == ScheduleMode.OFF.value:
        return 0.0
    return schedule.eps0


@dataclass(frozen=True)
class AltMinConfig:
    """Driver settings for T rounds of alternating minimization."""
    T: int = DEFAULT_ITERATIONS
    solver: SolverConfig = field(default_factory=SolverConfig)
    schedule: AccuracySchedule = field(default_factory=AccuracySchedule.off)
    stop_tol: float = 0.0
    record_trace: bool = True
    rank_tol: float = DEFAULT_RANK_TOL

    def __post_init__(self):
        raise_if_invalid(
            validate_integer(self.T, "iters", min_value=1),
            validate_number(self.stop_tol, "stop_tol", min_value=0.0),
            validate_number(self.rank_tol, "rank_tol", min_value=0.0),
        )


@dataclass(frozen=True)
class IterationRecord:
    t: int
    eps: float
    dict_error: float
    max_dx_inf: float
    supp_ok: bool
    seconds: float
    unconverged: int = 0


@dataclass
class TrialReport:
    """Trace of one AltMinDict run."""
    records: List[IterationRecord] = field(default_factory=list)
    final_dictionary: Optional[Dictionary] = None
    final_coefficients: Optional[CoefficientMatrix] = None
    initial_error: float = float('nan')
    aborted: bool = False
    abort_reason: Optional[str] = None
    # Kept even when record_trace is off
    executed: int = 0
    last_error: float = float('nan')

    @property
    def iterations(self) -> int:
        return self.executed

    @property
    def final_error(self) -> float:
        return self.last_error if self.executed else self.initial_error

    def errors(self) -> np.ndarray:
        return np.array([rec.dict_error for rec in self.records])

    def to_frame(self) -> pd.DataFrame:
        """The CSV table t,eps,dict_error,max_dx_inf,supp_ok,seconds."""
        rows = [{
            't': rec.t,
            'eps': rec.eps,
            'dict_error': rec.dict_error,
            'max_dx_inf': rec.max_dx_inf,
            'supp_ok': int(rec.supp_ok),
            'seconds': rec.seconds,
        } for rec in self.records]
        return pd.DataFrame(rows, columns=TRACE_COLUMNS)


class AltMinDict:
    """
    Alternating minimization for dictionary learning.

    The algorithm never looks at the oracle; it is only used to measure
    errors and, with stop_tol > 0, to exit early.
    """

    def __init__(self, cfg: AltMinConfig):
        self.cfg = cfg
        if cfg.schedule.mode == ScheduleMode.THEORY.value and not cfg.schedule.is_contractive:
            logger.warning(
                f"Theory accuracy schedule is not contractive at this scale "
                f"(ratio={cfg.schedule.ratio:.3g} >= 1); thresholds grow with t")

    def _threshold(self, eps: float) -> float:
        # GraDeS already enforces s-sparsity; thresholds only apply when a
        # schedule is active
        if self.cfg.schedule.mode == ScheduleMode.OFF.value:
            return 0.0
        return threshold_level(self.cfg.solver.s, eps)

    @staticmethod
    def _abort(report: TrialReport, t: int, A: Dictionary, X: CoefficientMatrix, cause: Exception) -> None:
        logger.error(f"AltMinDict aborted at t={t}: {cause}")
        report.aborted = True
        report.abort_reason = str(cause)
        report.final_dictionary = A
        report.final_coefficients = X

    def run(self, Y: SampleSet, A0: Dictionary,
            oracle: Optional[Tuple[Dictionary, CoefficientMatrix]] = None) -> TrialReport:
        cfg = self.cfg
        if A0.d != Y.d:
            raise ShapeMismatchError((Y.d, A0.r), A0.shape)
        if oracle is not None and oracle[0].shape != A0.shape:
            raise ShapeMismatchError(A0.shape, oracle[0].shape)

        report = TrialReport()
        A = A0
        if oracle is not None:
            report.initial_error = error_metric(A0, oracle[0])
            logger.info(f"Initial dictionary error {report.initial_error:.3e}")

        previous_median = None
        for t in range(cfg.T):
            started = time.perf_counter()
            eps = accuracy_at(cfg.schedule, t)
            if cfg.schedule.mode == ScheduleMode.ADAPTIVE.value and previous_median is not None:
                eps = previous_median
            solver = cfg.solver
            if solver.kind == SolverKind.L1_CONSTRAINED.value:
                solver = solver.with_eps(eps)

            batch = recover_all(A, Y, solver, rho=self._threshold(eps))
            previous_median = float(np.median(batch.residuals))
            X = batch.coefficients
            try:
                A = normalize_columns(least_squares_update(Y, X, rank_tol=cfg.rank_tol))
            except RankDeficientError as e:
                self._abort(report, t, A, X, e)
                raise RankDeficientRun(report, e) from e
            except ZeroColumnError as e:
                self._abort(report, t, A, X, e)
                raise ZeroColumnRun(report, e) from e
            seconds = time.perf_counter() - started

            dict_error, max_dx, supp_ok = float('nan'), float('nan'), True
            if oracle is not None:
                Astar, Xstar = oracle
                dict_error = error_metric(A, Astar)
                signs = align_signs(A, Astar)
                max_dx = float(np.max(np.abs(X.entries * signs[:, None] - Xstar.entries), initial=0.0))
                supp_ok = bool(np.all(X.support_contained_in(Xstar)))

            if cfg.record_trace:
                report.records.append(IterationRecord(
                    t=t, eps=eps, dict_error=dict_error, max_dx_inf=max_dx,
                    supp_ok=supp_ok, seconds=seconds, unconverged=batch.unconverged))
            report.executed = t + 1
            report.last_error = dict_error
            logger.debug(f"t={t} eps={eps:.3e} error={dict_error:.3e} max_dx={max_dx:.3e} "
                         f"supp_ok={supp_ok} unconverged={batch.unconverged} ({seconds:.2f}s)")

            report.final_dictionary = A
            report.final_coefficients = X
            if oracle is not None and cfg.stop_tol > 0 and dict_error < cfg.stop_tol:
                logger.info(f"Early exit at t={t}: error {dict_error:.3e} < stop_tol {cfg.stop_tol:.1e}")
                break

        logger.info(f"AltMinDict finished {report.iterations} iterations, final error {report.final_error:.3e}")
        return report


class RankDeficientRun(RankDeficientError):
    """RankDeficientError carrying the partial trace of the aborted run."""
    def __init__(self, report: TrialReport, cause: RankDeficientError):
        self.report = report
        super().__init__(cause.sigma_min, cause.sigma_max)


class ZeroColumnRun(ZeroColumnError):
    """ZeroColumnError (an atom collapsed to zero) carrying the partial trace."""
    def __init__(self, report: TrialReport, cause: ZeroColumnError):
        self.report = report
        super().__init__(cause.index, cause.norm)


# Aborts that still carry a TrialReport
ABORTED_RUNS = (RankDeficientRun, ZeroColumnRun)


def altmin_dict(Y: SampleSet, A0: Dictionary, cfg: AltMinConfig,
                oracle: Optional[Tuple[Dictionary, CoefficientMatrix]] = None) -> TrialReport:
    """Run T rounds of AltMinDict from A0; see AltMinDict.run."""
    return AltMinDict(cfg).run(Y, A0, oracle=oracle)
