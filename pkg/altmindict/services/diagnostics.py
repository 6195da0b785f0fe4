"""
Empirical checks of the model assumptions and supporting lemmas.

Coherence, restricted isometry constants, spectral norms, the coefficient
covariance, row-support concentration, the support-constrained spectral
bound and the Schur-complement block inverse.

Statistical checks report counts and flags; they never raise on a tail event.
"""

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from math import comb, sqrt
from typing import Dict, List, Optional, Union
import logging

import numpy as np
from scipy import linalg

from altmindict.exceptions import (
    NoConvergenceError,
    ShapeMismatchError,
    SingularBlockError,
    SupportViolationError,
)
from altmindict.services.model_core import CoefficientMatrix, Dictionary
from altmindict.utils.seeding import START_VECTOR_STREAM, SUPPORT_SAMPLE_STREAM, make_rng
from altmindict.validation import raise_if_invalid, validate_integer, validate_number

logger = logging.getLogger(__name__)

DEFAULT_ENUMERATION_CAP = 100_000
DEFAULT_SAMPLED_SUPPORTS = 10_000
# Supports up to this size use a dense symmetric eigen-solve
DIRECT_EIGEN_MAX = 16
POWER_MAX_ITERS = 100_000
# Supports evaluated per batched eigen-solve
SUPPORT_CHUNK = 4096


class RipMode(str, Enum):
    EXHAUSTIVE = 'exhaustive'
    SAMPLED = 'sampled'


@dataclass(frozen=True)
class RipEstimate:
    """δ_k over the checked supports; sampled estimates are lower bounds."""
    delta: float
    mode: str
    supports_checked: int
    k: int

    @property
    def label(self) -> str:
        if self.mode == RipMode.SAMPLED.value:
            return f"sampled({self.supports_checked}) lower-bound estimate"
        return RipMode.EXHAUSTIVE.value


@dataclass
class ConcentrationReport:
    """Row-support counts and energies against the (1±δ)·s·n/r band."""
    expected: float
    band_low: float
    band_high: float
    count_violations: List[int] = field(default_factory=list)
    energy_violations: List[int] = field(default_factory=list)

    @property
    def violations(self) -> int:
        return len(set(self.count_violations) | set(self.energy_violations))

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _matrix(A) -> np.ndarray:
    if isinstance(A, Dictionary):
        return A.entries
    if isinstance(A, CoefficientMatrix):
        return A.entries
    return np.asarray(A, dtype=np.float64)


def coherence(A: Dictionary) -> float:
    """max over i≠j of |⟨A_i, A_j⟩|; μ₀ = coherence·√d."""
    M = _matrix(A)
    if M.shape[1] < 2:
        return 0.0
    gram = np.abs(M.T @ M)
    np.fill_diagonal(gram, 0.0)
    return float(gram.max())


def spectral_norm(W, tol: float = 1e-10, seed: int = 0) -> float:
    """
    Largest singular value by power iteration on WᵀW.

    Starts from a seeded Gaussian vector and stops when the Rayleigh
    quotient changes by at most tol (relative).

    Raises:
        NoConvergenceError: after 10⁵ iterations
    """
    W = _matrix(W)
    if not np.all(np.isfinite(W)):
        raise ValueError("spectral_norm requires finite entries")
    if W.size == 0 or not np.any(W):
        return 0.0

    v = make_rng(seed, START_VECTOR_STREAM).standard_normal(W.shape[1])
    v /= np.linalg.norm(v)
    estimate = 0.0
    for it in range(1, POWER_MAX_ITERS + 1):
        w = W @ v
        quotient = float(w @ w)
        u = W.T @ w
        norm_u = np.linalg.norm(u)
        if norm_u == 0.0:
            # Start vector in the null space; restart from a fresh direction
            v = make_rng(seed + it, START_VECTOR_STREAM).standard_normal(W.shape[1])
            v /= np.linalg.norm(v)
            continue
        v = u / norm_u
        if abs(quotient - estimate) <= tol * quotient:
            return sqrt(quotient)
        estimate = quotient
    raise NoConvergenceError(POWER_MAX_ITERS, "spectral_norm power iteration")


def _support_deviations(M: np.ndarray, supports: np.ndarray) -> np.ndarray:
    """‖A_Sᵀ A_S − I‖₂ for a batch of supports (rows of `supports`)."""
    k = supports.shape[1]
    AS = np.transpose(M[:, supports], (1, 0, 2))
    gram = np.transpose(AS, (0, 2, 1)) @ AS - np.eye(k)
    if k <= DIRECT_EIGEN_MAX:
        eigenvalues = np.linalg.eigvalsh(gram)
        return np.maximum(np.abs(eigenvalues[:, 0]), np.abs(eigenvalues[:, -1]))
    return np.array([spectral_norm(g) for g in gram])


def rip_constant(A: Dictionary, k: int, cap: int = DEFAULT_ENUMERATION_CAP,
                 samples: int = DEFAULT_SAMPLED_SUPPORTS, seed: int = 0) -> RipEstimate:
    """
    δ_k = max over |S| = k of ‖A_Sᵀ A_S − I‖₂.

    Exhaustive when C(r, k) <= cap; otherwise `samples` uniformly drawn
    supports give a lower-bound estimate.
    """
    M = _matrix(A)
    d, r = M.shape
    raise_if_invalid(
        validate_integer(k, "k", min_value=1, max_value=min(d, r)),
        validate_integer(cap, "cap", min_value=0),
        validate_integer(samples, "samples", min_value=1),
    )

    total = comb(r, k)
    delta = 0.0
    if total <= cap:
        supports_iter = combinations(range(r), k)
        checked = 0
        while True:
            chunk = np.array([s for _, s in zip(range(SUPPORT_CHUNK), supports_iter)], dtype=int)
            if chunk.size == 0:
                break
            delta = max(delta, float(_support_deviations(M, chunk).max()))
            checked += len(chunk)
        logger.debug(f"RIP δ_{k} exhaustive over {checked} supports: {delta:.4f}")
        return RipEstimate(delta=delta, mode=RipMode.EXHAUSTIVE.value, supports_checked=checked, k=k)

    rng = make_rng(seed, SUPPORT_SAMPLE_STREAM)
    supports = np.argsort(rng.random((samples, r)), axis=1)[:, :k]
    for start in range(0, samples, SUPPORT_CHUNK):
        delta = max(delta, float(_support_deviations(M, supports[start:start + SUPPORT_CHUNK]).max()))
    logger.warning(f"C({r},{k})={total} exceeds cap {cap}; δ_{k}={delta:.4f} is a sampled lower bound")
    return RipEstimate(delta=delta, mode=RipMode.SAMPLED.value, supports_checked=samples, k=k)


def rip_coherence_bound(A: Dictionary, s: int) -> float:
    """The deterministic bound δ_2s < 2·μ₀·s/√d = 2·s·coherence."""
    return 2.0 * s * coherence(A)


def rip_threshold_flags(delta: float) -> Dict[str, bool]:
    """δ against the strict 0.1 bound and the non-strict 0.2 bound, side by side."""
    return {
        'delta_below_0_1': bool(delta < 0.1),
        'delta_below_0_2': bool(delta <= 0.2),
    }


def covariance_oracle(r: int, s: int, mu: float = 0.0) -> np.ndarray:
    """Σ = (s/r − s(s−1)μ²/(r(r−1)))·I + (s(s−1)μ²/(r(r−1)))·11ᵀ."""
    raise_if_invalid(
        validate_integer(r, "r", min_value=1),
        validate_integer(s, "s", min_value=1, max_value=r),
        validate_number(mu * mu, "mu^2", max_value=1.0),
    )
    off = s * (s - 1) * mu * mu / (r * (r - 1)) if r > 1 else 0.0
    return (s / r - off) * np.eye(r) + off * np.ones((r, r))


def empirical_covariance(X: CoefficientMatrix) -> np.ndarray:
    """(1/n)·X Xᵀ."""
    M = _matrix(X)
    return (M @ M.T) / M.shape[1]


def support_concentration_check(X: CoefficientMatrix, s: int, delta: float,
                                second_moment: float = 1.0) -> ConcentrationReport:
    """
    Check each row p against (1−δ)·s·n/r ≤ count_p ≤ (1+δ)·s·n/r and the
    energy Σ_i (X_pi)² against the same band scaled by E[x²].
    """
    raise_if_invalid(
        validate_integer(s, "s", min_value=1),
        validate_number(delta, "delta", min_value=0.0),
        validate_number(second_moment, "second_moment", min_value=0.0, exclusive_min=True),
    )
    M = _matrix(X)
    mask = X.support_mask if isinstance(X, CoefficientMatrix) else M != 0.0
    r, n = M.shape
    expected = s * n / r
    low, high = (1.0 - delta) * expected, (1.0 + delta) * expected
    counts = mask.sum(axis=1)
    energy = np.sum(M * M, axis=1) / second_moment

    report = ConcentrationReport(
        expected=expected,
        band_low=low,
        band_high=high,
        count_violations=[int(p) for p in np.flatnonzero((counts < low) | (counts > high))],
        energy_violations=[int(p) for p in np.flatnonzero((energy < low) | (energy > high))],
    )
    if report.violations:
        logger.info(f"Support concentration: {report.violations} of {r} rows outside "
                    f"[{low:.1f}, {high:.1f}]")
    return report


def support_spectral_check(W, reference: CoefficientMatrix, s: int, n: int, r: int) -> bool:
    """
    ‖W‖₂ ≤ 2·‖W‖∞·s·√(n/r) for W supported inside the reference support.

    Raises:
        SupportViolationError: if W has a nonzero outside reference's support
    """
    W = _matrix(W)
    if W.shape != reference.entries.shape:
        raise ShapeMismatchError(reference.entries.shape, W.shape)
    outside = np.argwhere((W != 0.0) & ~reference.support_mask)
    if outside.size:
        row, col = outside[0]
        raise SupportViolationError(int(row), int(col))
    bound = 2.0 * float(np.max(np.abs(W), initial=0.0)) * s * sqrt(n / r)
    return spectral_norm(W) <= bound


def schur_block_inverse(A, B, C, D) -> np.ndarray:
    """
    Inverse of [[A, B], [C, D]] through the Schur complement of A.

    Returns [[A⁻¹ + A⁻¹B M C A⁻¹, −A⁻¹B M], [−M C A⁻¹, M]], M = (D − C A⁻¹ B)⁻¹.

    Raises:
        SingularBlockError: if A or the Schur complement is singular
    """
    A, B, C, D = (np.atleast_2d(np.asarray(x, dtype=np.float64)) for x in (A, B, C, D))
    if A.shape[0] != A.shape[1] or D.shape[0] != D.shape[1]:
        raise ShapeMismatchError((A.shape[0], A.shape[0]), A.shape)
    if B.shape != (A.shape[0], D.shape[0]) or C.shape != (D.shape[0], A.shape[0]):
        raise ShapeMismatchError((A.shape[0], D.shape[0]), B.shape)

    A_inv = _checked_inverse(A, 'A')
    M = _checked_inverse(D - C @ A_inv @ B, 'D - C A^-1 B')
    A_inv_B = A_inv @ B
    C_A_inv = C @ A_inv
    return np.block([
        [A_inv + A_inv_B @ M @ C_A_inv, -A_inv_B @ M],
        [-M @ C_A_inv, M],
    ])


def _checked_inverse(block: np.ndarray, name: str) -> np.ndarray:
    if block.size and np.linalg.cond(block) > 1.0 / np.finfo(float).eps:
        raise SingularBlockError(name)
    try:
        return linalg.inv(block)
    except linalg.LinAlgError as e:
        raise SingularBlockError(name) from e


REPORT_KEYS = [
    'coherence', 'mu0', 'delta_2s', 'mode', 'supports_checked',
    'rip_coherence_bound', 'delta_below_0_1', 'delta_below_0_2',
    'spectral_norm', 'mu1_effective', 'covariance_max_err',
    'concentration_violations',
]


def run_diagnostics(A: Dictionary, X: Optional[CoefficientMatrix], s: int,
                    cap: int = DEFAULT_ENUMERATION_CAP,
                    samples: int = DEFAULT_SAMPLED_SUPPORTS,
                    second_moment: float = 1.0,
                    concentration_delta: float = 0.2,
                    seed: int = 0) -> Dict[str, Union[float, int, str, bool]]:
    """Build the key=value diagnostics report (keys in REPORT_KEYS order)."""
    d, r = A.shape
    k = min(2 * s, d, r)
    mu = coherence(A)
    rip = rip_constant(A, k, cap=cap, samples=samples, seed=seed)
    norm = spectral_norm(A)

    report: Dict[str, Union[float, int, str, bool]] = {
        'coherence': mu,
        'mu0': mu * sqrt(d),
        'delta_2s': rip.delta,
        'mode': rip.mode,
        'supports_checked': rip.supports_checked,
        'rip_coherence_bound': rip_coherence_bound(A, s),
        **rip_threshold_flags(rip.delta),
        'spectral_norm': norm,
        'mu1_effective': norm * sqrt(d / r),
        'covariance_max_err': float('nan'),
        'concentration_violations': -1,
    }
    if X is not None:
        sigma = covariance_oracle(r, s, 0.0) * second_moment
        report['covariance_max_err'] = float(np.max(np.abs(empirical_covariance(X) - sigma)))
        report['concentration_violations'] = support_concentration_check(
            X, s, concentration_delta, second_moment=second_moment).violations
    return {key: report[key] for key in REPORT_KEYS}
