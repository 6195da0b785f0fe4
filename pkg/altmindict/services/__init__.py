"""
Service layer for the numerical logic.

Services are pure functions and value types without file access.
This makes them testable and reusable.
"""

from altmindict.services.dict_update import AltMinConfig, AltMinDict, TrialReport, altmin_dict
from altmindict.services.model_core import (
    AccuracySchedule,
    CoefficientMatrix,
    Dictionary,
    ModelConfig,
    SampleSet,
    error_metric,
)
from altmindict.services.sparse_recovery import SolverConfig, recover_all
from altmindict.services.synth_gen import PerturbConfig, gen_samples, perturb_dictionary

__all__ = [
    'AccuracySchedule',
    'AltMinConfig',
    'AltMinDict',
    'CoefficientMatrix',
    'Dictionary',
    'ModelConfig',
    'PerturbConfig',
    'SampleSet',
    'SolverConfig',
    'TrialReport',
    'altmin_dict',
    'error_metric',
    'gen_samples',
    'perturb_dictionary',
    'recover_all',
]
