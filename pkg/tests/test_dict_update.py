import logging

import numpy as np
import pytest

from altmindict.exceptions import RankDeficientError, ShapeMismatchError, ValidationError, ZeroColumnError
from altmindict.services import dict_update
from altmindict.services.dict_update import (
    TRACE_COLUMNS,
    AltMinConfig,
    AltMinDict,
    RankDeficientRun,
    ZeroColumnRun,
    accuracy_at,
    altmin_dict,
    least_squares_update,
)
from altmindict.services.model_core import AccuracySchedule, CoefficientMatrix, ModelConfig, normalize_columns
from altmindict.services.sparse_recovery import SolverConfig
from altmindict.services.synth_gen import PerturbConfig, gen_samples, perturb_dictionary


def test_least_squares_with_oracle_coefficients_returns_truth(small_instance):
    Astar, Xstar, Y = small_instance
    A = normalize_columns(least_squares_update(Y, Xstar))
    np.testing.assert_allclose(A.entries, Astar.entries, atol=1e-10)


def test_least_squares_single_atom_closed_form(rng):
    Y = rng.standard_normal((4, 10))
    x = rng.standard_normal((1, 10))
    A = least_squares_update(Y, x)
    np.testing.assert_allclose(A[:, 0], Y @ x[0] / np.dot(x[0], x[0]), atol=1e-12)


def test_least_squares_is_optimal(rng):
    X = rng.standard_normal((5, 50))
    Y = rng.standard_normal((8, 50))
    A = least_squares_update(Y, X)
    best = np.linalg.norm(Y - A @ X)
    for _ in range(100):
        B = A + 0.1 * rng.standard_normal(A.shape)
        assert best <= np.linalg.norm(Y - B @ X)


def test_least_squares_rank_deficient():
    X = np.zeros((3, 10))
    X[0] = 1.0
    X[1] = np.arange(10)
    with pytest.raises(RankDeficientError) as info:
        least_squares_update(np.ones((2, 10)), X)
    assert info.value.sigma_min <= 1e-10 * info.value.sigma_max


def test_least_squares_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        least_squares_update(np.ones((2, 10)), np.ones((3, 9)))


def test_accuracy_at_examples():
    theory = AccuracySchedule.theory(s=2, d=100, mu1=1.0)
    assert accuracy_at(theory, 0) == pytest.approx(1.0 / 10368.0)
    assert accuracy_at(theory, 2) == pytest.approx(theory.eps0 * theory.ratio ** 2)
    assert accuracy_at(AccuracySchedule.fixed(0.01), 5) == 0.01
    assert accuracy_at(AccuracySchedule.geometric(1.0, 0.5), 3) == 0.125
    assert accuracy_at(AccuracySchedule.off(), 4) == 0.0
    with pytest.raises(ValidationError):
        accuracy_at(theory, -1)


def test_config_names_iters_field():
    with pytest.raises(ValidationError) as info:
        AltMinConfig(T=0)
    assert info.value.field == 'iters'


def test_fixed_point_from_truth(small_instance):
    Astar, Xstar, Y = small_instance
    report = altmin_dict(Y, Astar, AltMinConfig(T=3, solver=SolverConfig(s=2)), oracle=(Astar, Xstar))
    assert report.iterations == 3
    assert report.initial_error == 0.0
    assert all(rec.dict_error <= 1e-10 for rec in report.records)
    assert all(rec.supp_ok for rec in report.records)


def test_converges_from_perturbed_start():
    cfg = ModelConfig(d=30, r=40, n=2000, s=2, seed=21)
    Astar, Xstar, Y = gen_samples(cfg)
    A0 = perturb_dictionary(Astar, PerturbConfig(sigma_scale=0.2, seed=21))
    report = altmin_dict(Y, A0, AltMinConfig(T=25, solver=SolverConfig(s=2)), oracle=(Astar, Xstar))
    assert report.initial_error > 0.05
    assert report.final_error < 1e-6
    np.testing.assert_allclose(np.linalg.norm(report.final_dictionary.entries, axis=0), 1.0, atol=1e-12)


def test_single_iteration_contracts_in_most_seeds():
    improved = 0
    for seed in range(10):
        cfg = ModelConfig(d=50, r=80, n=2500, s=3, seed=100 + seed)
        Astar, Xstar, Y = gen_samples(cfg)
        A0 = perturb_dictionary(Astar, PerturbConfig(sigma_scale=0.1, seed=seed))
        report = altmin_dict(Y, A0, AltMinConfig(T=1, solver=SolverConfig(s=3)), oracle=(Astar, Xstar))
        if report.records[0].dict_error < report.initial_error:
            improved += 1
    assert improved >= 9


def test_trace_frame_schema(small_instance):
    Astar, Xstar, Y = small_instance
    report = altmin_dict(Y, Astar, AltMinConfig(T=1, solver=SolverConfig(s=2)), oracle=(Astar, Xstar))
    frame = report.to_frame()
    assert list(frame.columns) == TRACE_COLUMNS
    assert len(frame) == 1
    assert frame['t'].tolist() == [0]


def test_without_oracle_errors_are_nan(small_instance):
    Astar, Xstar, Y = small_instance
    report = altmin_dict(Y, Astar, AltMinConfig(T=2, solver=SolverConfig(s=2)))
    assert np.isnan(report.errors()).all()
    assert report.final_dictionary is not None


def test_stop_tol_exits_early(small_instance):
    Astar, Xstar, Y = small_instance
    cfg = AltMinConfig(T=10, solver=SolverConfig(s=2), stop_tol=1e-8)
    report = altmin_dict(Y, Astar, cfg, oracle=(Astar, Xstar))
    assert report.iterations == 1


def test_rank_deficient_run_keeps_partial_report():
    cfg = ModelConfig(d=10, r=20, n=5, s=2, seed=1)
    Astar, Xstar, Y = gen_samples(cfg)
    with pytest.raises(RankDeficientRun) as info:
        altmin_dict(Y, Astar, AltMinConfig(T=3, solver=SolverConfig(s=2)), oracle=(Astar, Xstar))
    report = info.value.report
    assert report.aborted
    assert report.iterations == 0
    assert isinstance(info.value, RankDeficientError)


def test_shape_mismatch_between_samples_and_start(small_instance):
    Astar, Xstar, Y = small_instance
    other = normalize_columns(np.ones((Astar.d + 1, Astar.r)) + np.eye(Astar.d + 1, Astar.r))
    with pytest.raises(ShapeMismatchError):
        altmin_dict(Y, other, AltMinConfig(T=1, solver=SolverConfig(s=2)))


def test_theory_schedule_warns_when_not_contractive(caplog):
    schedule = AccuracySchedule.theory(s=3, d=100, mu1=1.0)
    with caplog.at_level(logging.WARNING, logger='altmindict'):
        AltMinDict(AltMinConfig(T=1, schedule=schedule))
    assert 'not contractive' in caplog.text


def test_fixed_schedule_thresholds_keep_truth(small_instance):
    Astar, Xstar, Y = small_instance
    cfg = AltMinConfig(T=2, solver=SolverConfig(s=2), schedule=AccuracySchedule.fixed(1e-3))
    report = altmin_dict(Y, Astar, cfg, oracle=(Astar, Xstar))
    assert all(rec.eps == 1e-3 for rec in report.records)
    assert report.final_error <= 1e-10


def test_adaptive_schedule_with_l1_solver():
    cfg = ModelConfig(d=12, r=16, n=120, s=2, seed=4)
    Astar, Xstar, Y = gen_samples(cfg)
    solver = SolverConfig(kind='l1', s=2, fista_max_iters=300, bisection_steps=30)
    report = altmin_dict(Y, Astar, AltMinConfig(T=2, solver=solver, schedule=AccuracySchedule.adaptive(1e-3)),
                         oracle=(Astar, Xstar))
    assert report.iterations == 2
    assert report.records[0].eps == 1e-3
    assert 0.0 <= report.records[1].eps <= 1e-3


def test_untraced_run_reports_iterations_and_final_error(small_instance):
    Astar, Xstar, Y = small_instance
    A0 = perturb_dictionary(Astar, PerturbConfig(sigma_scale=0.1, seed=3))
    traced = altmin_dict(Y, A0, AltMinConfig(T=3, solver=SolverConfig(s=2)), oracle=(Astar, Xstar))
    untraced = altmin_dict(Y, A0, AltMinConfig(T=3, solver=SolverConfig(s=2), record_trace=False),
                           oracle=(Astar, Xstar))
    assert untraced.records == []
    assert untraced.iterations == traced.iterations == 3
    assert untraced.final_error == traced.final_error
    assert untraced.final_error != untraced.initial_error


def test_zero_column_run_keeps_partial_report(small_instance, monkeypatch):
    Astar, Xstar, Y = small_instance

    def collapse_first_atom(Y, X, rank_tol=None):
        A = np.array(Astar.entries)
        A[:, 0] = 0.0
        return A

    monkeypatch.setattr(dict_update, 'least_squares_update', collapse_first_atom)
    with pytest.raises(ZeroColumnRun) as info:
        altmin_dict(Y, Astar, AltMinConfig(T=3, solver=SolverConfig(s=2)), oracle=(Astar, Xstar))
    assert isinstance(info.value, ZeroColumnError)
    assert info.value.index == 0
    report = info.value.report
    assert report.aborted
    assert report.iterations == 0
    assert report.final_dictionary is Astar
