import math

import numpy as np
import pytest

from altmindict.exceptions import ShapeMismatchError, ValidationError
from altmindict.services.model_core import CoefficientMatrix, ModelConfig, error_metric
from altmindict.services.synth_gen import (
    PerturbConfig,
    gen_coefficients,
    gen_dictionary,
    gen_samples,
    operating_sample_size,
    perturb_dictionary,
    second_moment,
    theory_sample_size,
)


def test_dictionary_has_unit_columns():
    A = gen_dictionary(ModelConfig(d=30, r=50, n=1, s=2, seed=1))
    np.testing.assert_allclose(np.linalg.norm(A.entries, axis=0), 1.0, atol=1e-12)


def test_raw_dictionary_scale():
    raw = gen_dictionary(ModelConfig(d=400, r=300, n=1, s=2, seed=2), raw=True)
    assert np.std(raw) == pytest.approx(1.0 / math.sqrt(400), rel=0.02)


def test_generation_is_deterministic():
    cfg = ModelConfig(d=10, r=20, n=50, s=3, seed=99)
    A1, X1, Y1 = gen_samples(cfg)
    A2, X2, Y2 = gen_samples(cfg)
    np.testing.assert_array_equal(A1.entries, A2.entries)
    np.testing.assert_array_equal(X1.entries, X2.entries)
    np.testing.assert_array_equal(Y1.Y, Y2.Y)


def test_different_seeds_differ():
    A1 = gen_dictionary(ModelConfig(d=10, r=20, n=1, s=2, seed=1))
    A2 = gen_dictionary(ModelConfig(d=10, r=20, n=1, s=2, seed=2))
    assert not np.array_equal(A1.entries, A2.entries)


def test_dictionary_does_not_depend_on_n():
    A1 = gen_dictionary(ModelConfig(d=10, r=20, n=5, s=2, seed=4))
    A2 = gen_dictionary(ModelConfig(d=10, r=20, n=500, s=2, seed=4))
    np.testing.assert_array_equal(A1.entries, A2.entries)


@pytest.mark.parametrize('law, low, high', [
    ('rademacher', 1.0, 1.0),
    ('uniform_pm_1_2', 1.0, 2.0),
])
def test_coefficients_have_exactly_s_bounded_nonzeros(law, low, high):
    X = gen_coefficients(ModelConfig(d=10, r=20, n=400, s=3, nonzero_law=law, seed=5))
    np.testing.assert_array_equal(X.support_sizes(), 3)
    values = np.abs(X.entries[X.support_mask])
    assert values.min() >= low and values.max() <= high


def test_custom_law_respects_bounds():
    cfg = ModelConfig(d=10, r=20, n=300, s=2, nonzero_law='custom', M=3.0, custom_low=0.5, seed=6)
    values = np.abs(gen_coefficients(cfg).entries)
    values = values[values > 0]
    assert values.min() >= 0.5 and values.max() <= 3.0


def test_supports_are_uniform():
    X = gen_coefficients(ModelConfig(d=10, r=10, n=20000, s=3, seed=8))
    counts = X.support_mask.sum(axis=1)
    expected = 20000 * 3 / 10
    assert np.all(np.abs(counts - expected) < 0.05 * expected)


def test_signs_are_balanced():
    X = gen_coefficients(ModelConfig(d=10, r=10, n=20000, s=3, nonzero_law='rademacher', seed=9))
    assert abs(np.mean(X.entries[X.support_mask])) < 0.03


def test_second_moment():
    assert second_moment(ModelConfig(d=4, r=8, n=1, s=1, nonzero_law='rademacher')) == 1.0
    assert second_moment(ModelConfig(d=4, r=8, n=1, s=1)) == pytest.approx(7.0 / 3.0)


def test_samples_are_product():
    Astar, Xstar, Y = gen_samples(ModelConfig(d=6, r=9, n=40, s=2, seed=3))
    np.testing.assert_allclose(Y.Y, Astar.entries @ Xstar.entries, atol=1e-14)
    assert Y.meta.seed == 3


def test_explicit_coefficients_shape_checked():
    with pytest.raises(ShapeMismatchError):
        gen_samples(ModelConfig(d=6, r=9, n=40, s=2), coefficients=CoefficientMatrix(np.zeros((8, 5))))


def test_perturb_zero_returns_truth():
    Astar = gen_dictionary(ModelConfig(d=10, r=20, n=1, s=2, seed=1))
    assert perturb_dictionary(Astar, PerturbConfig(sigma_scale=0.0)) is Astar


def test_perturbation_error_scale():
    cfg = ModelConfig(d=100, r=200, n=1, s=3, seed=11)
    Astar = gen_dictionary(cfg)
    A0 = perturb_dictionary(Astar, PerturbConfig(sigma_scale=0.5, seed=11))
    error = error_metric(A0, Astar)
    assert 0.3 <= error <= 0.8
    np.testing.assert_allclose(np.linalg.norm(A0.entries, axis=0), 1.0, atol=1e-12)


def test_perturb_config_rejects_negative_sigma():
    with pytest.raises(ValidationError):
        PerturbConfig(sigma_scale=-0.1)


def test_sample_size_formulas():
    assert operating_sample_size(200, 3) == math.ceil(2.5 * 3 * 200 * math.log(200))
    assert theory_sample_size(10, 2, 2.0, delta=0.01) == pytest.approx(100 * math.log(2000))
