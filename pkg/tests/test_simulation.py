"""
Test suite for the Monte Carlo engines
"""
import math
from fractions import Fraction
from types import SimpleNamespace

import numpy as np
import pytest

import config
import exact
from errors import ParameterError, SampleCapExceeded, StepCapExceeded
from models import BirthDeathSpec, ModelParams
from simulation_core import (CHUNK_SIZE, MAX_BLOCK, MIN_BLOCK, BirthDeathSimulator,
                             CoupledCollectorSimulator, RngStream, block_size_for, expected_length,
                             limit_law_values, sample_exponential, sample_gumbel, sample_limit_law,
                             simulate_batch, simulate_coupled, simulate_tau_batch, simulate_tau_c,
                             simulate_tau_values)
from statistical_analysis import StatisticalAnalyzer


class TestRngStream:
    """Test keyed random streams"""

    def test_streams_are_reproducible(self):
        """Test one (seed, index) pair always yields the same draws"""
        a = RngStream(42, 7).generator.random(5)
        b = RngStream(42, 7).generator.random(5)
        assert np.array_equal(a, b)

    def test_streams_are_distinct(self):
        """Test neighbouring indices and seeds give different draws"""
        base = RngStream(42, 7).generator.random(5)
        assert not np.array_equal(base, RngStream(42, 8).generator.random(5))
        assert not np.array_equal(base, RngStream(43, 7).generator.random(5))

    def test_negative_keys_rejected(self):
        with pytest.raises(ParameterError):
            RngStream(-1, 0)
        with pytest.raises(ParameterError):
            RngStream(1, -3)


class TestCoupledCollectorSimulator:
    """Test the coupled classical/clumsy trajectory"""

    def test_expected_length(self):
        """Test E T = 8 for m = 2, p = 1/2 and overflow to inf"""
        assert expected_length(ModelParams(2, Fraction(1, 2))) == pytest.approx(8.0)
        assert math.isinf(expected_length(ModelParams(2000, 0.5)))

    def test_block_size(self):
        assert block_size_for(ModelParams(1, 0)) == MIN_BLOCK
        assert block_size_for(ModelParams(2000, 0.5)) == MAX_BLOCK
        assert block_size_for(ModelParams(200, 0.01)) > 200

    def test_single_coupon_without_clumsiness(self):
        """Test m = 1, p = 0 finishes on the first day"""
        sample = simulate_coupled(ModelParams(1, 0), RngStream(0, 0))
        assert (sample.t_classical, sample.t_clumsy) == (1, 1)

    def test_classical_case_is_coupled_exactly(self):
        """Test with p = 0 both times coincide"""
        simulator = CoupledCollectorSimulator(ModelParams(6, 0))
        for index in range(20):
            sample = simulator.run(RngStream(3, index))
            assert sample.t_clumsy == sample.t_classical >= 6

    @pytest.mark.parametrize('m,p', [(5, 0.3), (20, 0.1), (40, 0.02)])
    def test_scan_paths_agree(self, m, p):
        """Test the step-by-step and vectorised scans consume the same draws identically"""
        params = ModelParams(m, p)
        python = CoupledCollectorSimulator(params, block_size=64)
        vectorised = CoupledCollectorSimulator(params, block_size=64)
        python.python_scan = True
        vectorised.python_scan = False
        for index in range(30):
            assert python.run(RngStream(9, index)) == vectorised.run(RngStream(9, index))

    def test_step_cap(self):
        """Test a trajectory that cannot finish in one block hits the cap"""
        simulator = CoupledCollectorSimulator(ModelParams(50, 0.5), step_cap=64, block_size=64)
        with pytest.raises(StepCapExceeded) as info:
            simulator.run(RngStream(1, 5))
        assert info.value.stream_index == 5
        assert info.value.step_cap == 64


class TestSimulateBatch:
    """Test batches of coupled trajectories"""

    def test_means_match_closed_forms(self):
        """Test both sample means lie within four standard errors of the exact means"""
        params = ModelParams(3, Fraction(1, 5))
        batch = simulate_batch(params, 4000, master_seed=2024)
        assert abs(batch.clumsy.mean - float(exact.mean_closed(params))) <= 4 * batch.clumsy.standard_error
        assert abs(batch.classical.mean - 5.5) <= 4 * batch.classical.standard_error
        assert batch.difference.minimum >= 0

    def test_retained_samples(self):
        """Test raw pairs are kept in stream order"""
        batch = simulate_batch(ModelParams(4, 0.1), 50, master_seed=5, retain=True)
        frame = batch.to_frame()
        assert batch.retained
        assert list(frame.columns) == ['stream_index', 't_classical', 't_clumsy', 'difference']
        assert frame['stream_index'].tolist() == list(range(50))
        assert (frame['t_clumsy'] >= frame['t_classical']).all()
        assert np.array_equal(batch.clumsy.sorted_samples, np.sort(batch.t_clumsy).astype(float))
        assert batch.summary_frame()['quantity'].tolist() == ['t_clumsy', 't_classical', 'difference']

    def test_unretained_batch_has_no_frame(self):
        batch = simulate_batch(ModelParams(4, 0.1), 10, master_seed=5)
        assert not batch.retained
        with pytest.raises(ParameterError):
            batch.to_frame()

    def test_first_stream_offsets(self):
        """Test a batch starting at stream 5 reproduces the tail of a batch starting at 0"""
        params = ModelParams(4, 0.1)
        full = simulate_batch(params, 15, master_seed=8, retain=True)
        shifted = simulate_batch(params, 10, master_seed=8, retain=True, first_stream=5)
        assert np.array_equal(full.t_clumsy[5:], shifted.t_clumsy)
        assert shifted.to_frame()['stream_index'].iloc[0] == 5

    def test_worker_count_does_not_change_results(self):
        """Test identical summaries for one and two worker processes"""
        params = ModelParams(3, 0.1)
        n = CHUNK_SIZE + 100
        serial = simulate_batch(params, n, master_seed=77, workers=1)
        parallel = simulate_batch(params, n, master_seed=77, workers=2)
        assert serial.clumsy.content() == parallel.clumsy.content()
        assert serial.difference.content() == parallel.difference.content()

    def test_retention_cap(self, monkeypatch):
        """Test retaining more samples than the cap raises before any work"""
        monkeypatch.setattr(config, 'MAX_RETAINED_SAMPLES', 10)
        with pytest.raises(SampleCapExceeded):
            simulate_batch(ModelParams(2, 0.1), 11, master_seed=1, retain=True)
        assert simulate_batch(ModelParams(2, 0.1), 11, master_seed=1).clumsy.n == 11

    def test_invalid_arguments(self):
        with pytest.raises(ParameterError):
            simulate_batch(ModelParams(2, 0.1), 0, master_seed=1)
        with pytest.raises(ParameterError):
            simulate_batch(ModelParams(2, 0.1), 5, master_seed=1, workers=0)


class TestBirthDeath:
    """Test the birth-death hitting time"""

    def test_start_at_zero(self):
        """Test an empty start hits 0 immediately"""
        assert simulate_tau_c(BirthDeathSpec(1.0, q0_override=0), RngStream(0, 0)) == 0.0

    def test_positive_hitting_time(self):
        spec = BirthDeathSpec(2.0, q0_override=3)
        assert BirthDeathSimulator(spec).run(RngStream(4, 1)) > 0

    def test_mean_hitting_time(self):
        """Test E tau_1 = 1.3179 within four standard errors"""
        values = simulate_tau_values(BirthDeathSpec(1.0), 4000, master_seed=31)
        mean, se = StatisticalAnalyzer.mean_with_se(values)
        assert abs(mean - 1.3179) <= 4 * se

    def test_batch_summary(self):
        summary = simulate_tau_batch(BirthDeathSpec(0.5), 200, master_seed=3)
        assert summary.n == 200
        assert summary.minimum >= 0
        assert summary.sorted_samples.size == 200


class TestLimitLaws:
    """Test samplers of the limit laws"""

    def test_gumbel_and_exponential_means(self):
        """Test sample means near Euler's constant and 1"""
        gumbel = limit_law_values('subcritical', 20000, seed=12)
        exponential = limit_law_values('fixed_p', 20000, seed=12)
        mean, se = StatisticalAnalyzer.mean_with_se(gumbel)
        assert abs(mean - np.euler_gamma) <= 4 * se
        mean, se = StatisticalAnalyzer.mean_with_se(exponential)
        assert abs(mean - 1.0) <= 4 * se
        assert np.all(exponential > 0)

    def test_critical_law_adds_hitting_time(self):
        """Test the critical draw is the Gumbel draw plus an independent tau_c"""
        gumbel = limit_law_values('subcritical', 50, seed=6)
        critical = limit_law_values('critical', 50, seed=6, c=1.0)
        tau = simulate_tau_values(BirthDeathSpec(1.0), 50, 6, first_stream=1)
        assert np.allclose(critical, gumbel + tau)

    def test_extreme_uniform_draws_stay_finite(self):
        """Test raw draws of exactly 0 and of the largest double below 1 map to finite samples"""
        edge = SimpleNamespace(generator=SimpleNamespace(random=lambda n: np.array([0.0, 1.0 - 2.0 ** -53])))
        assert np.all(np.isfinite(sample_gumbel(edge, 2)))
        assert np.all(np.isfinite(sample_exponential(edge, 2)))
        assert np.all(sample_exponential(edge, 2) > 0)

    def test_sample_limit_law(self):
        summary = sample_limit_law('supercritical', 100, seed=1)
        assert summary.n == 100
        assert summary.master_seed == 1

    def test_critical_needs_c(self):
        with pytest.raises(ParameterError):
            limit_law_values('critical', 10, seed=1)
