"""
Seeded generation of the synthetic dictionary-learning model.

Gaussian dictionaries with normalized atoms, coefficient columns with
uniformly random s-subset supports and bounded nonzeros, observations
Y = A* X*, and randomly perturbed initial dictionaries.

Every generator is a pure function of (config, seed); see
altmindict.utils.seeding for the stream-splitting rule.
"""

from dataclasses import dataclass
from typing import Optional, Tuple, Union
import logging
import math

import numpy as np

from altmindict.exceptions import ShapeMismatchError
from altmindict.services.model_core import (
    CoefficientMatrix,
    Dictionary,
    ModelConfig,
    NonzeroLaw,
    SampleSet,
    normalize_columns,
)
from altmindict.utils.seeding import (
    COEFFICIENT_STREAM,
    DICTIONARY_STREAM,
    PERTURB_STREAM,
    make_rng,
)
from altmindict.validation import raise_if_invalid, validate_number, validate_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PerturbConfig:
    """A0 = normalize(A* + Z), Z entries i.i.d. N(0, sigma_scale/√d)."""
    sigma_scale: float = 0.5
    seed: int = 0

    def __post_init__(self):
        raise_if_invalid(
            validate_number(self.sigma_scale, "sigma_scale", min_value=0.0),
            validate_seed(self.seed, "perturb seed"),
        )


def second_moment(cfg: ModelConfig) -> float:
    """E[x²] of a nonzero coefficient under cfg's law."""
    low, high = cfg.magnitude_range
    if high == low:
        return low * low
    return (high ** 3 - low ** 3) / (3.0 * (high - low))


def gen_dictionary(cfg: ModelConfig, raw: bool = False) -> Union[Dictionary, np.ndarray]:
    """
    Draw A* with i.i.d. N(0, 1/√d) entries (standard deviation 1/√d).

    Columns are normalized to unit norm. raw=True returns the unnormalized
    Gaussian matrix (diagnostics only).
    """
    rng = make_rng(cfg.seed, DICTIONARY_STREAM)
    entries = rng.normal(0.0, 1.0 / math.sqrt(cfg.d), size=(cfg.d, cfg.r))
    if raw:
        return entries
    return normalize_columns(entries)


def _sample_supports(rng: np.random.Generator, r: int, s: int, n: int) -> np.ndarray:
    # Partial Fisher-Yates shuffle of [0, r) run for every column at once:
    # after step j the first j+1 slots hold a uniform (j+1)-subset.
    slots = np.tile(np.arange(r), (n, 1))
    rows = np.arange(n)
    for j in range(s):
        pick = rng.integers(j, r, size=n)
        chosen = slots[rows, pick]
        slots[rows, pick] = slots[rows, j]
        slots[rows, j] = chosen
    return slots[:, :s]


def _sample_values(rng: np.random.Generator, cfg: ModelConfig, size: Tuple[int, int]) -> np.ndarray:
    signs = rng.integers(0, 2, size=size) * 2.0 - 1.0
    if cfg.nonzero_law == NonzeroLaw.RADEMACHER.value:
        return signs
    low, high = cfg.magnitude_range
    return signs * rng.uniform(low, high, size=size)


def gen_coefficients(cfg: ModelConfig) -> CoefficientMatrix:
    """
    Draw X* (r×n): each column has exactly s nonzeros on a uniform s-subset.

    The uniform_pm_1_2 law has second moment 7/3; no rescaling is applied.
    """
    rng = make_rng(cfg.seed, COEFFICIENT_STREAM)
    supports = _sample_supports(rng, cfg.r, cfg.s, cfg.n)
    values = _sample_values(rng, cfg, (cfg.n, cfg.s))

    entries = np.zeros((cfg.r, cfg.n))
    columns = np.repeat(np.arange(cfg.n), cfg.s)
    entries[supports.ravel(), columns] = values.ravel()
    logger.debug(f"Generated coefficients r={cfg.r}, n={cfg.n}, s={cfg.s}, law={cfg.nonzero_law}")
    return CoefficientMatrix(entries)


def gen_samples(
    cfg: ModelConfig,
    coefficients: Optional[CoefficientMatrix] = None
) -> Tuple[Dictionary, CoefficientMatrix, SampleSet]:
    """
    Generate (A*, X*, Y) with Y = A* X* as a single matrix product.

    Args:
        cfg: Model configuration
        coefficients: Explicit X* to use instead of drawing one (test path)
    """
    Astar = gen_dictionary(cfg)
    Xstar = coefficients if coefficients is not None else gen_coefficients(cfg)
    if Xstar.r != cfg.r:
        raise ShapeMismatchError((cfg.r, Xstar.n), Xstar.entries.shape)
    Y = Astar.entries @ Xstar.entries
    logger.info(f"Generated instance d={cfg.d}, r={cfg.r}, n={Xstar.n}, s={cfg.s}, seed={cfg.seed}")
    return Astar, Xstar, SampleSet(Y, meta=cfg)


def perturb_dictionary(Astar: Dictionary, p: PerturbConfig) -> Dictionary:
    """A0 = normalize_columns(A* + Z), Z i.i.d. N(0, sigma_scale/√d)."""
    if p.sigma_scale == 0:
        return Astar
    rng = make_rng(p.seed, PERTURB_STREAM)
    Z = rng.normal(0.0, p.sigma_scale / math.sqrt(Astar.d), size=Astar.shape)
    return normalize_columns(Astar.entries + Z)


def operating_sample_size(r: int, s: int) -> int:
    """The operating point n = ⌈2.5·s·r·log r⌉ (natural log)."""
    return int(math.ceil(2.5 * s * r * math.log(r)))


def theory_sample_size(r: int, s: int, M: float, delta: float = 0.01, c3: float = 1.0) -> float:
    """Sample-size bound c3·max(r², r·M²·s)·log(2r/δ) (universal constant left explicit)."""
    return c3 * max(r * r, r * M * M * s) * math.log(2.0 * r / delta)
