"""Shared fixtures for the altmindict test suite."""

import logging

import numpy as np
import pytest

from altmindict.main import create_app
from altmindict.services.model_core import Dictionary, ModelConfig, normalize_columns
from altmindict.services.synth_gen import gen_samples


@pytest.fixture(scope='session')
def app_config():
    return create_app('testing', log_level=logging.WARNING)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_unit(rng, d):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_dictionary(rng, d, r) -> Dictionary:
    return normalize_columns(rng.standard_normal((d, r)))


@pytest.fixture
def small_model():
    """A quick instance where AltMinDict converges in a few iterations."""
    return ModelConfig(d=40, r=50, n=500, s=2, seed=7)


@pytest.fixture
def small_instance(small_model):
    return gen_samples(small_model)
