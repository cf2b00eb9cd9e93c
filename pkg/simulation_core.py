"""
Monte Carlo engines for the clumsy coupon collector
The coupled urn process (classical and clumsy collection times from one
trajectory), the birth-death hitting time tau_c and samplers of the limit laws
"""

import math
from dataclasses import dataclass, replace
from multiprocessing import Pool
from typing import Optional

import numpy as np
import pandas as pd

import config
from errors import ParameterError, SampleCapExceeded, StepCapExceeded
from models import BirthDeathSpec, CoupledSample, Regime, RegimeTag, SampleSummary
from utils.logger import get_module_logger

logger = get_module_logger('simulation')

# Streams per unit of parallel work; fixed so results do not depend on the worker count
CHUNK_SIZE = 2048
MIN_BLOCK = 64
MAX_BLOCK = 2 ** 22
# Expected lengths below this are scanned step by step in Python
PYTHON_SCAN_BELOW = 512
# Replaces an exact zero draw; the largest draw 1 - 2^-53 is already below 1
_TINY = 2.0 ** -54


class RngStream:
    """
    Counter-based random stream identified by (master_seed, stream_index).

    Philox keyed through SeedSequence spawn keys: every pair yields an
    independent, platform-stable sequence and deriving a stream is O(1).
    """

    def __init__(self, master_seed, stream_index=0):
        if master_seed < 0 or stream_index < 0:
            raise ParameterError("seeds and stream indices must be nonnegative")
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        sequence = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        self.generator = np.random.Generator(np.random.Philox(sequence))

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_index={self.stream_index})"


def expected_length(params):
    """E T = m * sum_l q^l / l with q = 1/(1-p), as a float (inf when it overflows)"""
    m, p = params.m, params.p_float
    ell = np.arange(1, m + 1, dtype=float)
    log_terms = -ell * math.log1p(-p) - np.log(ell)
    if log_terms.max() > 700:
        return math.inf
    return float(m * np.exp(log_terms).sum())


def block_size_for(params):
    mean = expected_length(params)
    if not math.isfinite(mean):
        return MAX_BLOCK
    return int(min(max(1.25 * mean + params.m, MIN_BLOCK), MAX_BLOCK))


class _TrajectoryState:
    """Per-coupon state carried between blocks: seen at all, last update non-clumsy"""

    def __init__(self, m):
        self.seen = np.zeros(m, dtype=bool)
        self.good = np.zeros(m, dtype=bool)
        self.n_seen = 0
        self.n_good = 0
        self.steps = 0
        self.t_classical = None


class CoupledCollectorSimulator:
    """
    Simulate the coupled urn process.

    Each day draws a coupon type C uniformly from m and a uniform U; the
    update is clumsy when U > 1 - p. The classical time is the first day
    every type has been drawn; the clumsy time is the first day every
    type's most recent update was non-clumsy. Both come from one
    trajectory, so t_clumsy >= t_classical always.
    """

    def __init__(self, params, step_cap=None, block_size=None):
        self.params = params
        self.m = params.m
        self.threshold = 1.0 - params.p_float
        self.step_cap = config.STEP_CAP if step_cap is None else step_cap
        self.block_size = block_size or block_size_for(params)
        self.python_scan = expected_length(params) < PYTHON_SCAN_BELOW

    def run(self, rng):
        """
        Run one trajectory.

        Parameters:
        -----------
        rng : RngStream
            Stream supplying the draws

        Returns:
        --------
        CoupledSample
            Classical and clumsy collection times
        """
        state = _TrajectoryState(self.m)
        generator = rng.generator
        scan = self._scan_python if self.python_scan else self._scan_vectorised
        while True:
            if state.steps >= self.step_cap:
                raise StepCapExceeded(
                    f"trajectory exceeded {self.step_cap} steps for m={self.m}, p={self.params.p}",
                    stream_index=rng.stream_index, step_cap=self.step_cap)
            coupons = generator.integers(0, self.m, size=self.block_size)
            clumsy = generator.random(self.block_size) > self.threshold
            t_clumsy = scan(coupons, clumsy, state)
            if t_clumsy is not None:
                return CoupledSample(t_classical=state.t_classical, t_clumsy=t_clumsy)
            state.steps += self.block_size

    def _scan_python(self, coupons, clumsy, state):
        seen = state.seen.tolist()
        good = state.good.tolist()
        n_seen, n_good = state.n_seen, state.n_good
        m = self.m
        for i, (c, bad) in enumerate(zip(coupons.tolist(), clumsy.tolist())):
            if not seen[c]:
                seen[c] = True
                n_seen += 1
                if n_seen == m:
                    state.t_classical = state.steps + i + 1
            if bad:
                if good[c]:
                    good[c] = False
                    n_good -= 1
            elif not good[c]:
                good[c] = True
                n_good += 1
                if n_good == m:
                    return state.steps + i + 1
        state.seen[:] = seen
        state.good[:] = good
        state.n_seen, state.n_good = n_seen, n_good
        return None

    def _scan_vectorised(self, coupons, clumsy, state):
        good_now = ~clumsy
        order = np.argsort(coupons, kind='stable')
        sorted_c = coupons[order]
        sorted_good = good_now[order]
        boundary = sorted_c[1:] != sorted_c[:-1]
        first = np.concatenate(([True], boundary))
        last = np.concatenate((boundary, [True]))

        # status of each drawn coupon just before this draw
        prev_sorted = np.empty_like(sorted_good)
        prev_sorted[1:] = sorted_good[:-1]
        prev_sorted[first] = state.good[sorted_c[first]]
        prev = np.empty_like(prev_sorted)
        prev[order] = prev_sorted

        if state.t_classical is None:
            fresh = first.copy()
            fresh[first] = ~state.seen[sorted_c[first]]
            new = np.zeros(coupons.size, dtype=np.int64)
            new[order[fresh]] = 1
            seen_count = state.n_seen + np.cumsum(new)
            hit = np.flatnonzero(seen_count == self.m)
            if hit.size:
                state.t_classical = state.steps + int(hit[0]) + 1
            state.n_seen = int(seen_count[-1])
            state.seen[sorted_c[first]] = True

        delta = good_now.astype(np.int64) - prev.astype(np.int64)
        good_count = state.n_good + np.cumsum(delta)
        hit = np.flatnonzero(good_count == self.m)
        if hit.size:
            return state.steps + int(hit[0]) + 1
        state.good[sorted_c[last]] = sorted_good[last]
        state.n_good = int(good_count[-1])
        return None


def simulate_coupled(params, rng):
    """One coupled trajectory; see CoupledCollectorSimulator"""
    return CoupledCollectorSimulator(params).run(rng)


def _coupled_chunk(args):
    params, master_seed, start, stop = args
    simulator = CoupledCollectorSimulator(params)
    classical = np.empty(stop - start, dtype=np.int64)
    clumsy = np.empty(stop - start, dtype=np.int64)
    for offset, index in enumerate(range(start, stop)):
        sample = simulator.run(RngStream(master_seed, index))
        classical[offset] = sample.t_classical
        clumsy[offset] = sample.t_clumsy
    return classical, clumsy


def _chunks(n_samples, first_stream=0):
    return [(start, min(start + CHUNK_SIZE, first_stream + n_samples))
            for start in range(first_stream, first_stream + n_samples, CHUNK_SIZE)]


def _map_chunks(worker, tasks, workers):
    workers = config.DEFAULT_THREADS if workers is None else workers
    if workers < 1:
        raise ParameterError(f"workers must be at least 1, got {workers}")
    workers = min(workers, len(tasks))
    if workers == 1:
        return [worker(task) for task in tasks]
    with Pool(processes=workers) as pool:
        return pool.map(worker, tasks)


def _merged_summary(arrays, master_seed, first_stream):
    summary = None
    for values in arrays:
        part = SampleSummary.from_samples(values, master_seed, first_stream, retain=False)
        summary = part if summary is None else summary.merge(part)
    return summary


def _check_retention(n_samples, retain):
    if retain and n_samples > config.MAX_RETAINED_SAMPLES:
        raise SampleCapExceeded(
            f"retaining {n_samples} samples exceeds the cap of {config.MAX_RETAINED_SAMPLES} "
            f"(CLUMSY_MAX_RETAINED)")


@dataclass(frozen=True, eq=False)
class BatchResult:
    """Summaries of a coupled batch plus the raw pairs when retained"""
    params: object
    clumsy: SampleSummary
    classical: SampleSummary
    difference: SampleSummary
    master_seed: int
    t_classical: Optional[np.ndarray] = None
    t_clumsy: Optional[np.ndarray] = None

    @property
    def retained(self):
        return self.t_classical is not None

    def to_frame(self):
        """Raw pairs in stream order"""
        if not self.retained:
            raise ParameterError("raw samples were not retained for this batch")
        return pd.DataFrame({
            'stream_index': np.arange(self.clumsy.first_stream,
                                      self.clumsy.first_stream + self.t_clumsy.size),
            't_classical': self.t_classical,
            't_clumsy': self.t_clumsy,
            'difference': self.t_clumsy - self.t_classical,
        })

    def summary_frame(self):
        rows = []
        for name, summary in (('t_clumsy', self.clumsy), ('t_classical', self.classical),
                              ('difference', self.difference)):
            row = {'quantity': name}
            row.update(summary.to_dict())
            rows.append(row)
        return pd.DataFrame(rows)

    def to_dict(self):
        return {
            'params': self.params.to_dict(),
            'master_seed': self.master_seed,
            't_clumsy': self.clumsy.to_dict(),
            't_classical': self.classical.to_dict(),
            'difference': self.difference.to_dict(),
        }


def simulate_batch(params, n_samples, master_seed, retain=False, workers=None, first_stream=0):
    """
    Run n_samples coupled trajectories, sample i on stream first_stream + i.

    Work is cut into fixed chunks of streams and chunk summaries are merged
    in stream order, so the result is identical for any worker count.

    Parameters:
    -----------
    params : ModelParams
    n_samples : int
        Number of trajectories, at least 1
    master_seed : int
    retain : bool
        Keep the raw samples (sorted copies go into the summaries)
    workers : int, optional
        Worker processes, defaults to config.DEFAULT_THREADS

    Returns:
    --------
    BatchResult
    """
    if n_samples < 1:
        raise ParameterError(f"n_samples must be at least 1, got {n_samples}")
    _check_retention(n_samples, retain)
    tasks = [(params, master_seed, start, stop) for start, stop in _chunks(n_samples, first_stream)]
    logger.info(f"Coupled batch: m={params.m}, p={params.p}, n={n_samples}, seed={master_seed}, "
                f"chunks={len(tasks)}")
    results = _map_chunks(_coupled_chunk, tasks, workers)

    classical_parts = [classical for classical, _ in results]
    clumsy_parts = [clumsy for _, clumsy in results]
    diff_parts = [clumsy - classical for classical, clumsy in results]
    classical = _merged_summary(classical_parts, master_seed, first_stream)
    clumsy = _merged_summary(clumsy_parts, master_seed, first_stream)
    difference = _merged_summary(diff_parts, master_seed, first_stream)

    raw_classical = raw_clumsy = None
    if retain:
        raw_classical = np.concatenate(classical_parts)
        raw_clumsy = np.concatenate(clumsy_parts)
        classical = replace(classical, sorted_samples=np.sort(raw_classical).astype(float))
        clumsy = replace(clumsy, sorted_samples=np.sort(raw_clumsy).astype(float))
        difference = replace(difference,
                             sorted_samples=np.sort(raw_clumsy - raw_classical).astype(float))
    logger.info(f"Coupled batch done: mean T={clumsy.mean:.6g} (se {clumsy.standard_error:.3g})")
    return BatchResult(params=params, clumsy=clumsy, classical=classical, difference=difference,
                       master_seed=master_seed, t_classical=raw_classical, t_clumsy=raw_clumsy)


class BirthDeathSimulator:
    """
    Exact event-driven simulation of the M/M/infinity queue.

    From state n the holding time is Exponential(c + n); the next state is
    n + 1 with probability c / (c + n) and n - 1 otherwise. The start is
    Poisson(c) unless overridden. tau_c is the first time state 0 is hit.
    """

    BLOCK = 64

    def __init__(self, spec, step_cap=None):
        self.spec = spec
        self.c = spec.c
        self.step_cap = config.STEP_CAP if step_cap is None else step_cap

    def run(self, rng):
        generator = rng.generator
        if self.spec.q0_override is not None:
            n = self.spec.q0_override
        else:
            n = int(generator.poisson(self.c))
        elapsed = 0.0
        steps = 0
        while n > 0:
            holds = generator.standard_exponential(self.BLOCK).tolist()
            moves = generator.random(self.BLOCK).tolist()
            for hold, move in zip(holds, moves):
                rate = self.c + n
                elapsed += hold / rate
                n += 1 if move < self.c / rate else -1
                if n == 0:
                    return elapsed
            steps += self.BLOCK
            if steps >= self.step_cap:
                raise StepCapExceeded(f"birth-death run exceeded {self.step_cap} steps",
                                      stream_index=rng.stream_index, step_cap=self.step_cap)
        return elapsed


def simulate_tau_c(spec, rng):
    """Hitting time of 0 for one birth-death path"""
    return BirthDeathSimulator(spec).run(rng)


def _tau_chunk(args):
    spec, master_seed, start, stop = args
    simulator = BirthDeathSimulator(spec)
    return np.array([simulator.run(RngStream(master_seed, index)) for index in range(start, stop)],
                    dtype=float)


def simulate_tau_values(spec, n, master_seed, workers=None, first_stream=0):
    """Raw tau_c draws in stream order"""
    if n < 1:
        raise ParameterError(f"n must be at least 1, got {n}")
    tasks = [(spec, master_seed, start, stop) for start, stop in _chunks(n, first_stream)]
    logger.info(f"Birth-death batch: c={spec.c}, n={n}, seed={master_seed}")
    return np.concatenate(_map_chunks(_tau_chunk, tasks, workers))


def simulate_tau_batch(spec, n, master_seed, workers=None):
    """Retained SampleSummary of n tau_c draws"""
    _check_retention(n, True)
    values = simulate_tau_values(spec, n, master_seed, workers)
    return SampleSummary.from_samples(values, master_seed=master_seed, first_stream=0)


def _uniforms(rng, n):
    """Uniforms on the open interval (0, 1) so that both logarithms below stay finite"""
    u = rng.generator.random(n)
    return np.where(u > 0.0, u, _TINY)


def sample_gumbel(rng, n):
    return -np.log(-np.log(_uniforms(rng, n)))


def sample_exponential(rng, n):
    return -np.log(_uniforms(rng, n))


def limit_law_values(regime, n, seed, c=None, workers=None):
    """
    Raw draws from the limit law of the regime.

    Gumbel and exponential draws come from stream 0; in the critical regime
    the tau_c summand of sample i comes from stream i + 1.
    """
    regime = regime if isinstance(regime, Regime) else Regime(regime, c)
    if n < 1:
        raise ParameterError(f"n must be at least 1, got {n}")
    rng = RngStream(seed, 0)
    if regime.tag is RegimeTag.SUBCRITICAL:
        return sample_gumbel(rng, n)
    if regime.tag in (RegimeTag.SUPERCRITICAL, RegimeTag.FIXED_P):
        return sample_exponential(rng, n)
    gumbel = sample_gumbel(rng, n)
    tau = simulate_tau_values(BirthDeathSpec(regime.c), n, seed, workers, first_stream=1)
    return gumbel + tau


def sample_limit_law(regime, n, seed, c=None, workers=None):
    """Retained SampleSummary of n draws from the regime's limit law"""
    _check_retention(n, True)
    values = limit_law_values(regime, n, seed, c, workers)
    return SampleSummary.from_samples(values, master_seed=seed, first_stream=0)
