import math

import numpy as np
import pandas as pd
import pytest

from altmindict.exceptions import ValidationError
from altmindict.services import experiment_service
from altmindict.services.dict_update import AltMinConfig
from altmindict.services.experiment_service import (
    COMPARE_COLUMNS,
    SWEEP_COLUMNS,
    SweepConfig,
    TrialResult,
    compare,
    count_inversions,
    run_trial,
    sweep,
    transition_point,
)
from altmindict.services.model_core import ModelConfig
from altmindict.services.synth_gen import PerturbConfig
from altmindict.utils.seeding import derive_seed


@pytest.fixture
def quick_altmin():
    return AltMinConfig(T=3)


def test_run_trial_reduces_error(small_model, quick_altmin):
    report = run_trial(small_model, PerturbConfig(sigma_scale=0.2, seed=1), quick_altmin)
    assert report.iterations == 3
    assert report.final_error < report.initial_error


def test_compare_table_shape(small_model, quick_altmin):
    table = compare(small_model, [300, 500], PerturbConfig(sigma_scale=0.2, seed=1), quick_altmin)
    assert list(table.columns) == COMPARE_COLUMNS
    assert table['n'].tolist() == [300, 500]
    # every row starts from the same A0
    assert table['init_error'].iloc[0] == table['init_error'].iloc[1]
    assert (table['aborted'] == 0).all()
    assert (table['final_error'] < table['init_error']).all()


def test_compare_marks_rank_deficient_rows(small_model, quick_altmin):
    table = compare(small_model, [5, 500], PerturbConfig(sigma_scale=0.2, seed=1), quick_altmin)
    assert table['aborted'].tolist() == [1, 0]
    assert table['final_error'].iloc[0] == table['init_error'].iloc[0]


def test_compare_rejects_empty_sizes(small_model, quick_altmin):
    with pytest.raises(ValidationError):
        compare(small_model, [], PerturbConfig(), quick_altmin)


def test_compare_is_thread_count_independent(small_model, quick_altmin):
    perturb = PerturbConfig(sigma_scale=0.2, seed=1)
    n_values = [200, 300, 400, 500]
    serial = compare(small_model, n_values, perturb, quick_altmin, threads=1)
    pooled = compare(small_model, n_values, perturb, quick_altmin, threads=4)
    pd.testing.assert_frame_equal(serial, pooled)


@pytest.fixture
def tiny_sweep():
    return SweepConfig(r_values=(20,), n_over_r=(0.5, 10.0), trials=2, iters=3, s=2, sigma_scale=0.2)


def test_sweep_table(tiny_sweep, quick_altmin):
    result = sweep(tiny_sweep, quick_altmin)
    assert list(result.table.columns) == SWEEP_COLUMNS
    assert result.table['n_over_r'].tolist() == [0.5, 10.0]
    assert (result.table['trials'] == 2).all()
    # n < r: every trial aborts on a rank-deficient update
    assert result.table['prob'].iloc[0] == 0.0
    assert len(result.trials) == 4
    assert all(trial.aborted for trial in result.trials[:2])
    assert result.metadata['desk_scale_substitutes'] == 'true'


def test_sweep_is_thread_count_independent(tiny_sweep, quick_altmin):
    serial = sweep(tiny_sweep, quick_altmin, threads=1)
    pooled = sweep(tiny_sweep, quick_altmin, threads=3)
    pd.testing.assert_frame_equal(serial.table, pooled.table)
    np.testing.assert_array_equal([t.final_error for t in serial.trials],
                                  [t.final_error for t in pooled.trials])


def test_trial_model_sizes_and_seeds():
    cfg = SweepConfig(r_values=(64,), n_over_r=(2.5,), root_seed=9)
    model = cfg.trial_model(64, 2.5, 3)
    assert (model.d, model.r, model.n, model.s) == (32, 64, 160, 3)
    assert model.seed == derive_seed(9, 64, 2.5, 3)
    assert model.seed != cfg.trial_model(64, 2.5, 4).seed


def test_fixed_dimension_overrides_ratio():
    cfg = SweepConfig(d=20)
    assert cfg.dimension(64) == cfg.dimension(128) == 20
    assert cfg.metadata()['d_rule'] == 'd=20'
    assert SweepConfig().metadata()['d_rule'] == 'd=round(0.5*r)'


@pytest.mark.parametrize('kwargs', [
    {'trials': 0},
    {'r_values': ()},
    {'n_over_r': (0.0,)},
    {'d_ratio': 0.0},
    {'success_tol': 0.0},
])
def test_sweep_config_validation(kwargs):
    with pytest.raises(ValidationError):
        SweepConfig(**kwargs)


def test_trial_result_success():
    good = TrialResult(seed=1, n=10, initial_error=0.5, final_error=1e-9, iterations=3)
    assert good.succeeded(1e-6)
    assert not good.succeeded(1e-10)
    aborted = TrialResult(seed=1, n=10, initial_error=0.5, final_error=1e-9, iterations=3, aborted=True)
    assert not aborted.succeeded(1e-6)
    assert not TrialResult(seed=1, n=10, initial_error=0.5, final_error=math.nan, iterations=0).succeeded(1e-6)


@pytest.fixture
def sweep_table():
    return pd.DataFrame({
        'r': [64] * 4 + [128] * 4,
        'n_over_r': [1.0, 2.0, 3.0, 4.0] * 2,
        'trials': [10] * 8,
        'successes': [0, 4, 3, 10, 0, 0, 6, 10],
        'prob': [0.0, 0.4, 0.3, 1.0, 0.0, 0.0, 0.6, 1.0],
    })


def test_transition_point(sweep_table):
    assert transition_point(sweep_table, 64) == 4.0
    assert transition_point(sweep_table, 128) == 3.0
    assert transition_point(sweep_table, 64, level=0.4) == 2.0
    assert math.isnan(transition_point(sweep_table, 256))


def test_count_inversions(sweep_table):
    assert count_inversions(sweep_table, 64) == 1
    assert count_inversions(sweep_table, 64, slack=0.2) == 0
    assert count_inversions(sweep_table, 128) == 0


def test_transition_point_rejects_level_outside_unit_interval(sweep_table):
    with pytest.raises(ValidationError) as info:
        transition_point(sweep_table, 64, level=1.5)
    assert info.value.field == 'level'


def test_sweep_records_crashing_trials_as_failures(tiny_sweep, quick_altmin, monkeypatch):
    def crash(model, perturb, altmin):
        raise ValueError("samples contain NaN")

    monkeypatch.setattr(experiment_service, 'run_trial', crash)
    result = sweep(tiny_sweep, quick_altmin, threads=2)
    assert (result.table['successes'] == 0).all()
    assert len(result.trials) == 4
    assert all(trial.aborted and 'samples contain NaN' in trial.error for trial in result.trials)
    assert result.trials[1].seed == derive_seed(tiny_sweep.root_seed, 20, 0.5, 1)


def test_compare_keeps_going_when_one_run_crashes(small_model, quick_altmin, monkeypatch):
    real_run_trial = experiment_service.run_trial

    def flaky(model, perturb, altmin):
        if model.n == 300:
            raise FloatingPointError("overflow in update")
        return real_run_trial(model, perturb, altmin)

    monkeypatch.setattr(experiment_service, 'run_trial', flaky)
    table = compare(small_model, [300, 500], PerturbConfig(sigma_scale=0.2, seed=1), quick_altmin)
    assert table['n'].tolist() == [300, 500]
    assert table['aborted'].tolist() == [1, 0]
    assert math.isnan(table['final_error'].iloc[0])
    assert table['final_error'].iloc[1] < table['init_error'].iloc[1]
