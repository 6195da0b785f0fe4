"""
Core matrix-valued domain types and sign-invariant distances.

Pure numpy - no I/O. All types are immutable once constructed: their
arrays are private copies flagged read-only, so they can be shared across
threads without locking.
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple
import logging
import math

import numpy as np

from altmindict.exceptions import NotUnitError, ShapeMismatchError, ZeroColumnError
from altmindict.validation import (
    raise_if_invalid,
    validate_choice,
    validate_integer,
    validate_number,
    validate_seed,
    validate_sparsity,
)

logger = logging.getLogger(__name__)

# Columns with norm at or below this cannot be normalized
ZERO_COLUMN_TOL = 1e-14
# Tolerance for "unit" inputs to the vector distances
UNIT_TOL = 1e-9
# Tolerance for the Dictionary unit-column invariant
DICTIONARY_UNIT_TOL = 1e-12


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


def normalize_columns(A: np.ndarray) -> 'Dictionary':
    """
    Divide every column of A by its Euclidean norm.

    Raises:
        ZeroColumnError: if some column norm is <= 1e-14
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ShapeMismatchError(('d', 'r'), A.shape)
    norms = np.linalg.norm(A, axis=0)
    small = np.flatnonzero(norms <= ZERO_COLUMN_TOL)
    if small.size:
        index = int(small[0])
        logger.warning(f"Cannot normalize column {index} (norm {norms[index]:.3e})")
        raise ZeroColumnError(index, float(norms[index]))
    return Dictionary(A / norms)


@dataclass(frozen=True)
class Dictionary:
    """A d×r matrix whose columns (atoms) have unit Euclidean norm."""
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] < 1 or entries.shape[1] < 1:
            raise ShapeMismatchError(('d', 'r'), entries.shape)
        if not np.all(np.isfinite(entries)):
            raise ValueError("dictionary entries must be finite")
        norms = np.linalg.norm(entries, axis=0)
        bad = np.flatnonzero(np.abs(norms - 1.0) > DICTIONARY_UNIT_TOL)
        if bad.size:
            raise NotUnitError(float(norms[bad[0]]))
        object.__setattr__(self, 'entries', _frozen(entries))

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @property
    def r(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.entries.shape

    def column(self, p: int) -> np.ndarray:
        return self.entries[:, p]


@dataclass(frozen=True)
class CoefficientMatrix:
    """
    An r×n coefficient matrix together with its per-column supports.

    The support mask defaults to the nonzero pattern. A wider mask may be
    given (e.g. the generating support) but every nonzero must lie inside it.
    """
    entries: np.ndarray
    support_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.float64)
        if entries.ndim != 2:
            raise ShapeMismatchError(('r', 'n'), entries.shape)
        if not np.all(np.isfinite(entries)):
            raise ValueError("coefficient entries must be finite")
        if self.support_mask is None:
            mask = entries != 0.0
        else:
            mask = np.asarray(self.support_mask, dtype=bool)
            if mask.shape != entries.shape:
                raise ShapeMismatchError(entries.shape, mask.shape)
            outside = np.argwhere((entries != 0.0) & ~mask)
            if outside.size:
                row, col = outside[0]
                raise ValueError(f"nonzero entry ({row}, {col}) lies outside the support mask")
        mask = np.array(mask, dtype=bool, copy=True)
        mask.flags.writeable = False
        object.__setattr__(self, 'entries', _frozen(entries))
        object.__setattr__(self, 'support_mask', mask)

    @property
    def r(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    @property
    def supports(self) -> List[np.ndarray]:
        """Per-column support index sets (sorted index arrays)."""
        return [np.flatnonzero(self.support_mask[:, i]) for i in range(self.n)]

    def support_sizes(self) -> np.ndarray:
        return self.support_mask.sum(axis=0)

    def support_contained_in(self, other: 'CoefficientMatrix') -> np.ndarray:
        """Per-column flag: nonzeros of self lie inside other's support."""
        if other.entries.shape != self.entries.shape:
            raise ShapeMismatchError(other.entries.shape, self.entries.shape)
        return ~np.any((self.entries != 0.0) & ~other.support_mask, axis=0)


class NonzeroLaw(str, Enum):
    """Distribution of the nonzero coefficient values."""
    RADEMACHER = 'rademacher'
    UNIFORM_PM_1_2 = 'uniform_pm_1_2'
    CUSTOM = 'custom'


@dataclass(frozen=True)
class ModelConfig:
    """Sizes, sparsity and value law of the generative model Y = A* X*."""
    d: int
    r: int
    n: int
    s: int
    nonzero_law: str = NonzeroLaw.UNIFORM_PM_1_2.value
    M: Optional[float] = None
    mu1: float = 1.0
    seed: int = 0
    custom_low: Optional[float] = None

    def __post_init__(self):
        law = self.nonzero_law.value if isinstance(self.nonzero_law, NonzeroLaw) else self.nonzero_law
        object.__setattr__(self, 'nonzero_law', law)
        if self.M is None:
            object.__setattr__(self, 'M', 1.0 if law == NonzeroLaw.RADEMACHER.value else 2.0)
        self.validate()

    def validate(self) -> None:
        """Raise ValidationError naming the first invalid field."""
        raise_if_invalid(
            validate_integer(self.d, "d", min_value=1),
            validate_integer(self.r, "r", min_value=1),
            validate_integer(self.n, "n", min_value=1),
        )
        raise_if_invalid(
            validate_sparsity(self.s, int(self.d), int(self.r)),
            validate_choice(self.nonzero_law, "nonzero_law", [law.value for law in NonzeroLaw]),
            validate_number(self.M, "M", min_value=1.0),
            validate_number(self.mu1, "mu1", min_value=0.0, exclusive_min=True),
            validate_seed(self.seed),
        )
        if self.nonzero_law == NonzeroLaw.CUSTOM.value and self.custom_low is not None:
            raise_if_invalid(validate_number(self.custom_low, "custom_low", min_value=0.0, max_value=self.M))

    @property
    def magnitude_range(self) -> Tuple[float, float]:
        """Range of |nonzero| for the configured law."""
        if self.nonzero_law == NonzeroLaw.RADEMACHER.value:
            return 1.0, 1.0
        if self.nonzero_law == NonzeroLaw.UNIFORM_PM_1_2.value:
            return 1.0, 2.0
        low = self.custom_low if self.custom_low is not None else self.M / 2.0
        return float(low), float(self.M)

    def as_manifest(self) -> dict:
        manifest = {
            'd': self.d, 'r': self.r, 'n': self.n, 's': self.s,
            'seed': self.seed, 'nonzero_law': self.nonzero_law,
            'M': self.M, 'mu1': self.mu1,
        }
        if self.nonzero_law == NonzeroLaw.CUSTOM.value:
            manifest['custom_low'] = self.magnitude_range[0]
        return manifest


@dataclass(frozen=True)
class SampleSet:
    """Observations Y (d×n) and, when generated here, the model config."""
    Y: np.ndarray
    meta: Optional[ModelConfig] = None

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=np.float64)
        if Y.ndim != 2:
            raise ShapeMismatchError(('d', 'n'), Y.shape)
        if not np.all(np.isfinite(Y)):
            raise ValueError("observations must be finite")
        object.__setattr__(self, 'Y', _frozen(Y))

    @property
    def d(self) -> int:
        return self.Y.shape[0]

    @property
    def n(self) -> int:
        return self.Y.shape[1]


class ScheduleMode(str, Enum):
    THEORY = 'theory'
    GEOMETRIC = 'geometric'
    FIXED = 'fixed'
    OFF = 'off'
    # eps_t = median residual of the previous iteration
    ADAPTIVE = 'adaptive'


# Constants of the accuracy recurrence eps_{t+1} = ratio * eps_t
THEORY_EPS0_DENOMINATOR = 2592.0
THEORY_RATIO_CONSTANT = 25050.0


@dataclass(frozen=True)
class AccuracySchedule:
    """The accuracy sequence eps_t and its threshold levels 9·s·eps_t."""
    eps0: float
    ratio: float = 1.0
    mode: str = ScheduleMode.FIXED.value

    def __post_init__(self):
        mode = self.mode.value if isinstance(self.mode, ScheduleMode) else self.mode
        object.__setattr__(self, 'mode', mode)
        raise_if_invalid(validate_choice(mode, "schedule mode", [m.value for m in ScheduleMode]))
        if mode != ScheduleMode.OFF.value:
            raise_if_invalid(
                validate_number(self.eps0, "eps0", min_value=0.0, exclusive_min=True),
                validate_number(self.ratio, "ratio", min_value=0.0, exclusive_min=True),
            )

    @classmethod
    def theory(cls, s: int, d: int, mu1: float) -> 'AccuracySchedule':
        """eps0 = 1/(2592 s²), ratio = 25050·mu1·s³/√d."""
        eps0 = 1.0 / (THEORY_EPS0_DENOMINATOR * s * s)
        ratio = THEORY_RATIO_CONSTANT * mu1 * s ** 3 / math.sqrt(d)
        return cls(eps0=eps0, ratio=ratio, mode=ScheduleMode.THEORY.value)

    @classmethod
    def geometric(cls, eps0: float, ratio: float) -> 'AccuracySchedule':
        return cls(eps0=eps0, ratio=ratio, mode=ScheduleMode.GEOMETRIC.value)

    @classmethod
    def fixed(cls, value: float) -> 'AccuracySchedule':
        return cls(eps0=value, ratio=1.0, mode=ScheduleMode.FIXED.value)

    @classmethod
    def off(cls) -> 'AccuracySchedule':
        return cls(eps0=0.0, ratio=1.0, mode=ScheduleMode.OFF.value)

    @classmethod
    def adaptive(cls, eps0: float) -> 'AccuracySchedule':
        return cls(eps0=eps0, ratio=1.0, mode=ScheduleMode.ADAPTIVE.value)

    @property
    def is_contractive(self) -> bool:
        return self.mode in (ScheduleMode.FIXED.value, ScheduleMode.OFF.value,
                             ScheduleMode.ADAPTIVE.value) or self.ratio < 1.0


def _as_unit(vector, name: str) -> np.ndarray:
    v = np.asarray(vector, dtype=np.float64).ravel()
    norm = float(np.linalg.norm(v))
    if not abs(norm - 1.0) <= UNIT_TOL:
        logger.debug(f"{name} is not a unit vector (norm={norm!r})")
        raise NotUnitError(norm)
    return v / norm


def _chord_to_sine(chord):
    # chord ‖b − z·a‖ = 2·sin(θ/2) for unit a, b, so sin θ = chord·sqrt(1 − chord²/4)
    return np.minimum(1.0, chord * np.sqrt(np.maximum(0.0, 1.0 - 0.25 * chord * chord)))


def dist_vec(u, v) -> float:
    """Sign-invariant distance sqrt(1 − ⟨u,v⟩²) between unit vectors."""
    u = _as_unit(u, 'u')
    v = _as_unit(v, 'v')
    if u.shape != v.shape:
        raise ShapeMismatchError(u.shape, v.shape)
    # Parallel vectors cancel exactly in the sign-aligned difference
    z = 1.0 if np.dot(u, v) >= 0 else -1.0
    return float(_chord_to_sine(np.linalg.norm(v - z * u)))


def min_sign_l2(u, v) -> float:
    """min over z∈{−1,1} of ‖z·u − v‖₂ for unit u, v."""
    u = _as_unit(u, 'u')
    v = _as_unit(v, 'v')
    if u.shape != v.shape:
        raise ShapeMismatchError(u.shape, v.shape)
    return float(min(np.linalg.norm(u - v), np.linalg.norm(u + v)))


def _columnwise_distance(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    signs = np.where(np.sum(A * B, axis=0) >= 0, 1.0, -1.0)
    return _chord_to_sine(np.linalg.norm(B - A * signs, axis=0))


def column_distances(A: Dictionary, B: Dictionary) -> np.ndarray:
    """Per-column dist_vec(A_p, B_p)."""
    if A.shape != B.shape:
        raise ShapeMismatchError(A.shape, B.shape)
    return _columnwise_distance(A.entries, B.entries)


def dist_dict(A: Dictionary, B: Dictionary) -> float:
    """max over columns p of dist_vec(A_p, B_p), identity correspondence."""
    return float(column_distances(A, B).max())


def match_columns(A: Dictionary, Astar: Dictionary) -> Tuple[np.ndarray, np.ndarray]:
    """
    Greedy best-match of A's columns to Astar's columns.

    Repeatedly pairs the (column of A, column of Astar) with the largest
    |⟨A_i, A*_j⟩| among unmatched columns.

    Returns:
        (permutation, signs) such that signs[j] * A[:, permutation[j]] ≈ Astar[:, j]
    """
    if A.shape != Astar.shape:
        raise ShapeMismatchError(Astar.shape, A.shape)
    inner = A.entries.T @ Astar.entries
    magnitude = np.abs(inner)
    r = A.r
    permutation = np.full(r, -1, dtype=int)
    signs = np.ones(r)
    for _ in range(r):
        i, j = np.unravel_index(int(np.argmax(magnitude)), magnitude.shape)
        permutation[j] = i
        signs[j] = 1.0 if inner[i, j] >= 0 else -1.0
        magnitude[i, :] = -1.0
        magnitude[:, j] = -1.0
    return permutation, signs


def error_metric(A, Astar, match: bool = False) -> float:
    """
    Experiment error max_i sqrt(1 − ⟨A_i, A*_i⟩² / (‖A_i‖²‖A*_i‖²)).

    Both inputs are normalized first, so the value equals dist_dict on unit
    columns. With match=True, columns are first paired greedily (random inits).
    """
    A_unit = A if isinstance(A, Dictionary) else normalize_columns(A)
    B_unit = Astar if isinstance(Astar, Dictionary) else normalize_columns(Astar)
    if A_unit.shape != B_unit.shape:
        raise ShapeMismatchError(B_unit.shape, A_unit.shape)
    if match:
        permutation, _ = match_columns(A_unit, B_unit)
        A_unit = Dictionary(A_unit.entries[:, permutation])
    return dist_dict(A_unit, B_unit)


def align_signs(A: Dictionary, Astar: Dictionary) -> np.ndarray:
    """Per-column sign z_p ∈ {−1, 1} maximizing ⟨z_p A_p, A*_p⟩."""
    if A.shape != Astar.shape:
        raise ShapeMismatchError(Astar.shape, A.shape)
    inner = np.sum(A.entries * Astar.entries, axis=0)
    return np.where(inner >= 0, 1.0, -1.0)
