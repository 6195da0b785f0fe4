import time

import numpy as np
import pandas as pd
import pytest

from altmindict.utils.batch_processing import ASYNC_THRESHOLD, run_batch
from altmindict.utils.formatting import format_error, format_number, format_report, parse_bool, parse_number
from altmindict.utils.plotting import plot_compare, plot_error_trace, plot_sweep
from altmindict.utils.seeding import derive_seed, encode_key, make_rng


class TestFormatting:
    def test_format_number(self):
        assert format_number(True) == 'true'
        assert format_number(np.bool_(False)) == 'false'
        assert format_number(np.int64(7)) == '7'
        assert format_number(0.1) == '0.10000000000000001'
        assert format_number(0.1, digits=6) == '0.1'
        assert format_number(float('nan')) == 'nan'
        assert format_number(None) == 'nan'
        assert format_number('sampled') == 'sampled'

    def test_format_number_round_trips(self, rng):
        for value in rng.standard_normal(100) * 10.0 ** rng.integers(-20, 20, size=100):
            assert float(format_number(value)) == value

    def test_format_error(self):
        assert format_error(3.2e-11) == '3.20e-11'
        assert format_error(float('nan')) == 'N/A'
        assert format_error('oops') == 'N/A'

    def test_format_report(self):
        assert format_report({'a': 1, 'b': 0.5, 'c': False}) == 'a=1\nb=0.5\nc=false\n'

    def test_parse_number(self):
        assert parse_number(' 1e-3 ') == 0.001
        assert parse_number(4) == 4.0
        assert parse_number('abc') is None
        assert parse_number(None) is None
        assert parse_number(True) is None

    @pytest.mark.parametrize('text,expected', [
        ('true', True), ('YES', True), ('1', True),
        ('false', False), ('off', False), ('0', False),
        ('maybe', None), (3, None),
    ])
    def test_parse_bool(self, text, expected):
        assert parse_bool(text) is expected


class TestBatchProcessing:
    def test_results_keep_input_order(self):
        # later items finish first
        def slow_inverse(i):
            time.sleep(0.01 * (8 - i))
            return i * i

        summary = run_batch(slow_inverse, list(range(8)), threads=4)
        assert summary.mode == 'asynchronous'
        assert summary.results == [i * i for i in range(8)]
        assert summary.success_count == 8

    def test_small_batches_run_synchronously(self):
        summary = run_batch(lambda x: x + 1, list(range(ASYNC_THRESHOLD - 1)), threads=8)
        assert summary.mode == 'synchronous'
        assert summary.results == [1, 2, 3]

    @pytest.mark.parametrize('threads', [1, 4])
    def test_caught_failures_are_recorded(self, threads):
        def fragile(i):
            if i == 2:
                raise ValueError('bad item')
            return i

        summary = run_batch(fragile, list(range(5)), threads=threads, catch=(ValueError,))
        assert summary.results == [0, 1, None, 3, 4]
        assert summary.failure_count == 1
        assert summary.failures[0]['index'] == 2
        assert 'ValueError: bad item' in summary.failures[0]['error']

    def test_uncaught_failures_propagate(self):
        def broken(_):
            raise KeyError('boom')

        with pytest.raises(KeyError):
            run_batch(broken, [1, 2])

    def test_empty_batch(self):
        summary = run_batch(lambda x: x, [])
        assert summary.results == []
        assert summary.total == 0


class TestSeeding:
    def test_streams_are_reproducible(self):
        a = make_rng(42, 1).standard_normal(5)
        b = make_rng(42, 1).standard_normal(5)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, make_rng(42, 2).standard_normal(5))

    def test_encode_key(self):
        assert encode_key(7) == 7
        assert encode_key(np.int32(7)) == 7
        assert encode_key(2.5) == 2500
        with pytest.raises(ValueError):
            encode_key(-1)

    def test_derive_seed(self):
        seed = derive_seed(0, 64, 1.0, 0)
        assert seed == derive_seed(0, 64, 1.0, 0)
        assert 0 <= seed < 2 ** 64
        children = {derive_seed(0, 64, ratio, trial) for ratio in (1.0, 2.0) for trial in range(10)}
        assert len(children) == 20


class TestPlotting:
    def test_trace_chart_is_reproducible(self, tmp_path):
        trace = pd.DataFrame({'t': [0, 1, 2], 'dict_error': [1e-2, 1e-5, 0.0]})
        first = plot_error_trace(trace, tmp_path / 'a.svg', initial_error=0.4)
        second = plot_error_trace(trace, tmp_path / 'b.svg', initial_error=0.4)
        assert first.read_text().lstrip().startswith('<?xml')
        assert first.read_bytes() == second.read_bytes()

    def test_compare_and_sweep_charts(self, tmp_path):
        table = pd.DataFrame({'n': [100, 200], 'init_error': [0.5, 0.5], 'final_error': [1e-3, 1e-12]})
        assert plot_compare(table, tmp_path / 'nested' / 'compare.svg').is_file()
        sweep = pd.DataFrame({'r': [64, 64, 128, 128], 'n_over_r': [1.0, 2.0, 1.0, 2.0],
                              'prob': [0.0, 1.0, 0.0, 0.9]})
        assert 'svg' in plot_sweep(sweep, tmp_path / 'sweep.svg').read_text()
