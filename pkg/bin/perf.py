"""Complexity model, operation-count comparison, frame simulation and the multicodeword
throughput harness.
"""
import logging
import os
import threading
import time
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import List

import numpy as np

import channel
import gf
from counters import BarrierRunner, BlockCount, OP_FIELDS, LOOP_FIELDS, OpCounters
from decoding import ALGORITHMS, DecodeConfig
from errors import CountersDisabled, InvalidConfig
from fft_spa import FFTSPADecoder
from fft_spa import BLOCKS as FFT_SPA_BLOCKS
from ldpc_code import SystematicEncoder, build_tanner, gen_regular_code
from min_max import MinMaxDecoder
from min_max import BLOCKS as MIN_MAX_BLOCKS

logger = logging.getLogger(__name__)

BLOCKS = {'fft-spa': FFT_SPA_BLOCKS, 'min-max': MIN_MAX_BLOCKS}

# (algorithm, block, counter) triples whose measured value must equal the model exactly.
# Every loop-control row is exact as well.
CORE_TERMS = frozenset([
    ('fft-spa', 'permutation', 'memory_transactions'),
    ('fft-spa', 'fft', 'additions'),
    ('fft-spa', 'fft', 'multiplications'),
    ('fft-spa', 'fft', 'memory_transactions'),
    ('fft-spa', 'cnp_product', 'multiplications'),
    ('fft-spa', 'cnp_product', 'memory_transactions'),
    ('fft-spa', 'ifft', 'additions'),
    ('fft-spa', 'ifft', 'multiplications'),
    ('fft-spa', 'ifft', 'divisions'),
    ('fft-spa', 'ifft', 'memory_transactions'),
    ('fft-spa', 'depermutation', 'memory_transactions'),
    ('fft-spa', 'vnp', 'additions'),
    ('fft-spa', 'vnp', 'multiplications'),
    ('fft-spa', 'vnp', 'divisions'),
    ('fft-spa', 'vnp', 'memory_transactions'),
    ('min-max', 'fb_first', 'memory_transactions'),
    ('min-max', 'fb_remaining', 'additions'),
    ('min-max', 'fb_remaining', 'comparisons'),
    ('min-max', 'fb_remaining', 'memory_transactions'),
    ('min-max', 'beta_first_last', 'memory_transactions'),
    ('min-max', 'beta_remaining', 'additions'),
    ('min-max', 'beta_remaining', 'comparisons'),
    ('min-max', 'beta_remaining', 'memory_transactions'),
    ('min-max', 'vnp', 'additions'),
    ('min-max', 'vnp', 'comparisons'),
    ('min-max', 'vnp', 'memory_transactions'),
])

# The C1/C2/C3 code family: (N, M, d_c, d_v)
CODE_FAMILY = {
    'C1': (16, 8, 4, 2),
    'C2': (32, 16, 4, 2),
    'C3': (64, 32, 4, 2),
}


def check_algorithm(algorithm):
    if algorithm not in ALGORITHMS:
        raise InvalidConfig(f"unknown algorithm {algorithm!r}, expected one of {', '.join(ALGORITHMS)}")
    return algorithm


def make_decoder(graph, algorithm, config):
    check_algorithm(algorithm)
    if algorithm == 'fft-spa':
        return FFTSPADecoder(graph, config)
    return MinMaxDecoder(graph, config)


# --- complexity model ---

def _loop(trips):
    return dict(loop_additions=trips, loop_comparisons=trips)


@dataclass(frozen=True)
class ComplexityModel:
    """Per-iteration operation counts of a (d_v, d_c)-regular code, block by block.
    Initialization and the hard decision are not part of an iteration."""
    algorithm: str
    m: int
    n: int
    dc: int
    dv: int
    g: int

    @property
    def log2g(self):
        return self.g.bit_length() - 1

    def blocks(self):
        M, N, dc, dv, g, L = self.m, self.n, self.dc, self.dv, self.g, self.log2g
        cn_loop = _loop(M + M * dc + M * dc * g)
        vn_loop = _loop(N + N * dv + N * dv * g)
        if self.algorithm == 'fft-spa':
            transform = M * dc * g * L
            product = M * dc * (dc - 1) * g
            return {
                'permutation': BlockCount(memory_transactions=3 * N * dv * g, **vn_loop),
                'fft': BlockCount(additions=transform, multiplications=transform,
                                  memory_transactions=transform),
                'cnp_product': BlockCount(additions=product, multiplications=product,
                                          memory_transactions=product, **cn_loop),
                'ifft': BlockCount(additions=transform, multiplications=transform,
                                   divisions=M * dc * g,
                                   memory_transactions=transform + M * dc * g),
                'depermutation': BlockCount(memory_transactions=3 * M * dc * g, **cn_loop),
                'vnp': BlockCount(additions=N * dv * g,
                                  multiplications=N * dv * (dv - 1) * g + N * dv * g,
                                  divisions=N * dv * g,
                                  memory_transactions=5 * N * dv * g + N * dv * (dv - 1) * g,
                                  **vn_loop),
            }
        check_algorithm(self.algorithm)
        g2 = g * g
        return {
            'fb_first': BlockCount(comparisons=M * dc * g, memory_transactions=6 * M * g,
                                   **cn_loop),
            'fb_remaining': BlockCount(additions=2 * M * (dc - 1) * g2,
                                       comparisons=2 * M * (dc - 1) * g2 + 2 * M * (dc - 1) * g,
                                       memory_transactions=8 * M * (dc - 1) * g2,
                                       **_loop(M * (dc - 1) * g2)),
            'beta_first_last': BlockCount(comparisons=2 * M * dc * g,
                                          memory_transactions=6 * M * g, **cn_loop),
            'beta_remaining': BlockCount(additions=M * (dc - 2) * g2,
                                         comparisons=M * (dc - 2) * g2 + M * (dc - 2) * g,
                                         memory_transactions=4 * M * (dc - 2) * g2,
                                         **_loop(M * (dc - 2) * g2)),
            'vnp': BlockCount(additions=N * dv * (dv - 1) * g + 2 * N * dv * g,
                              comparisons=N * dv * g,
                              memory_transactions=5 * N * dv * g + N * dv * (dv - 1) * g,
                              **vn_loop),
        }

    def total(self):
        total = BlockCount()
        for entry in self.blocks().values():
            total.add(entry)
        return total

    def total_operations(self):
        """Arithmetic plus loop-control operations, the figure the totals formulas give."""
        t = self.total()
        return t.operations + t.loop_operations

    def total_memory(self):
        return self.total().memory_transactions

    def closed_form_operations(self):
        M, N, dc, dv, g, L = self.m, self.n, self.dc, self.dv, self.g, self.log2g
        if self.algorithm == 'fft-spa':
            return (4 * M + 4 * M * dc + 3 * M * dc * g + 2 * M * dc ** 2 * g
                    + 4 * M * dc * g * L + 4 * N + 4 * N * dv + 6 * N * dv * g + N * dv ** 2 * g)
        return (4 * M + 4 * M * dc - 4 * M * g - 14 * M * g ** 2 + 10 * M * dc * g
                + 10 * M * dc * g ** 2 + 2 * N + 2 * N * dv + 4 * N * dv * g + N * dv ** 2 * g)

    def closed_form_memory(self):
        M, N, dc, dv, g, L = self.m, self.n, self.dc, self.dv, self.g, self.log2g
        if self.algorithm == 'fft-spa':
            return (3 * M * dc * g + M * dc ** 2 * g + 2 * M * dc * g * L
                    + 7 * N * dv * g + N * dv ** 2 * g)
        return 12 * M * g - 16 * M * g ** 2 + 12 * M * dc * g ** 2 + N * dv ** 2 * g + 4 * N * dv * g


def predict_counts(algorithm, m, n, dc, dv, g):
    """The model as a one-iteration OpCounters, shaped like a measured run."""
    counters = OpCounters()
    counters.start_iteration()
    counters.per_iteration[0] = ComplexityModel(check_algorithm(algorithm), m, n, dc, dv, g).blocks()
    return counters


def measured_counts(result):
    if result.counters is None:
        raise CountersDisabled()
    return result.counters


@dataclass(frozen=True)
class CountRow:
    q: int
    algorithm: str
    block: str
    counter: str
    predicted: int
    measured: int

    @property
    def residual(self):
        return self.measured - self.predicted

    @property
    def exact(self):
        return self.counter.startswith('loop_') or (self.algorithm, self.block, self.counter) in CORE_TERMS

    @property
    def label(self):
        return f"{self.algorithm}:{self.block}:{self.counter}"


def measure_iteration(algorithm, pcm, arithmetic='f64'):
    """Decodes one noiseless frame for exactly one iteration with counters on."""
    graph = build_tanner(pcm)
    config = DecodeConfig(max_iters=1, early_stop=False, arithmetic=arithmetic,
                          counters_enabled=True)
    signal = channel.modulate_bpsk(np.zeros(pcm.n, dtype=np.int64), pcm.field)
    priors = channel.symbol_priors(channel.add_awgn_noiseless(signal, pcm.field.q), pcm.field)
    result = make_decoder(graph, algorithm, config).decode(priors)
    return measured_counts(result)


def count_table(algorithms=ALGORITHMS, qs=range(gf.Q_MIN, gf.Q_MAX + 1), shape='C3', seed=0):
    """Predicted vs measured counts per block and counter, with block totals and the
    operation/memory totals of each algorithm, for every q."""
    n, m, dc, dv = CODE_FAMILY[shape]
    rows = []
    for q in qs:
        field = gf.build_field(q)
        pcm = gen_regular_code(n, m, dc, dv, field, seed)
        for algorithm in algorithms:
            model = ComplexityModel(algorithm, m, n, dc, dv, field.g)
            predicted = model.blocks()
            measured = measure_iteration(algorithm, pcm).per_iteration[0]
            for block in BLOCKS[algorithm]:
                p = predicted[block]
                meas = measured.get(block, BlockCount())
                for counter in OP_FIELDS + LOOP_FIELDS:
                    rows.append(CountRow(q, algorithm, block, counter,
                                         getattr(p, counter), getattr(meas, counter)))
            meas_total = BlockCount()
            for entry in measured.values():
                meas_total.add(entry)
            rows.append(CountRow(q, algorithm, 'total', 'operations',
                                 model.total_operations(),
                                 meas_total.operations + meas_total.loop_operations))
            rows.append(CountRow(q, algorithm, 'total', 'memory_transactions',
                                 model.total_memory(), meas_total.memory_transactions))
        logger.info("counted q=%d", q)
    return rows


def operation_ratio(q, shape='C3'):
    """Min-Max over FFT-SPA predicted total operations."""
    n, m, dc, dv = CODE_FAMILY[shape]
    g = 1 << q
    mm = ComplexityModel('min-max', m, n, dc, dv, g).total_operations()
    fft = ComplexityModel('fft-spa', m, n, dc, dv, g).total_operations()
    return mm / fft


# --- frames and batches ---

@dataclass
class Frame:
    message: np.ndarray
    codeword: np.ndarray
    priors: channel.SymbolPriors


def frame_rng(seed, stream, index):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, index)))


def simulate_frames(pcm, encoder, ebn0_db, count, seed, stream=0, noiseless=False,
                    channel_bits=None, channel_scale=None):
    """Frames message -> encode -> BPSK -> AWGN -> priors. Frame i depends only on
    (seed, stream, i)."""
    field = pcm.field
    rate = encoder.k / pcm.n
    frames = []
    for i in range(count):
        rng = frame_rng(seed, stream, i)
        message = rng.integers(0, field.g, size=encoder.k)
        codeword = encoder.encode(message)
        signal = channel.modulate_bpsk(codeword, field)
        if noiseless:
            obs = channel.add_awgn_noiseless(signal, field.q)
        else:
            obs = channel.add_awgn(signal, ebn0_db, rate, field.q, rng)
        if channel_scale is not None:
            obs = channel.quantize_observation(obs, channel_bits or 8, channel_scale)
        frames.append(Frame(message, codeword, channel.symbol_priors(obs, field)))
    return frames


@dataclass
class BatchReport:
    algorithm: str
    workers: int
    frames: int
    wall_s: float
    n: int
    q: int
    decoded: List[np.ndarray] = dc_field(repr=False)
    iterations: List[int] = dc_field(repr=False)
    syndrome_ok: List[bool] = dc_field(repr=False)
    # frames handled per worker (thread or process id)
    utilization: dict = dc_field(default_factory=dict)
    failures: int = 0

    @property
    def throughput_bps(self):
        return self.n * self.q * self.frames / self.wall_s if self.wall_s > 0 else float('inf')


# Worker state: one decoder per process (initializer) or per thread (thread-local).
_process_decoder = None
_thread_state = threading.local()


def _init_process(pcm, algorithm, config):
    global _process_decoder
    _process_decoder = make_decoder(build_tanner(pcm), algorithm, config)


def _decode_in_process(priors):
    result = _process_decoder.decode(priors)
    return result.decoded, result.iterations_run, result.syndrome_ok, os.getpid()


def _decode_in_thread(args):
    pcm, algorithm, config, priors = args
    decoder = getattr(_thread_state, 'decoder', None)
    if decoder is None or getattr(_thread_state, 'key', None) != (id(pcm), algorithm, config):
        decoder = make_decoder(build_tanner(pcm), algorithm, config)
        _thread_state.decoder = decoder
        _thread_state.key = (id(pcm), algorithm, config)
    result = decoder.decode(priors)
    return result.decoded, result.iterations_run, result.syndrome_ok, threading.get_ident()


def run_batch(pcm, algorithm, config, frames, workers=1, executor='process'):
    """Decodes `frames` on `workers` workers. Frame generation and prior computation
    happen before the clock starts; results come back in frame order."""
    check_algorithm(algorithm)
    if workers < 1 or not frames:
        raise InvalidConfig("run_batch needs workers >= 1 and at least one frame")
    priors = [f.priors for f in frames]
    # graph errors surface here rather than as a broken worker pool
    make_decoder(build_tanner(pcm), algorithm, config)

    if executor == 'process':
        pool = ProcessPoolExecutor(max_workers=workers, initializer=_init_process,
                                   initargs=(pcm, algorithm, config))
        func, items = _decode_in_process, priors
        chunksize = max(1, len(priors) // (4 * workers))
    elif executor == 'thread':
        pool = ThreadPoolExecutor(max_workers=workers)
        func, items = _decode_in_thread, [(pcm, algorithm, config, p) for p in priors]
        chunksize = 1
    else:
        raise InvalidConfig(f"unknown executor {executor!r}, expected 'process' or 'thread'")

    with pool:
        # start every worker and build its decoder before timing
        list(pool.map(func, items[:1] * workers))
        start = time.perf_counter()
        results = list(pool.map(func, items, chunksize=chunksize))
        wall = time.perf_counter() - start

    utilization = {}
    for _, _, _, worker in results:
        utilization[worker] = utilization.get(worker, 0) + 1
    report = BatchReport(
        algorithm=algorithm, workers=workers, frames=len(frames), wall_s=wall,
        n=pcm.n, q=pcm.field.q,
        decoded=[r[0] for r in results],
        iterations=[r[1] for r in results],
        syndrome_ok=[r[2] for r in results],
        utilization=utilization,
    )
    report.failures = sum(not np.array_equal(d, f.codeword) for d, f in zip(report.decoded, frames))
    return report


def staged_run(graph, algorithm, config, priors, threads):
    """One codeword decoded by a barrier-synchronized team of `threads` workers.
    Returns (result, barriers per iteration)."""
    decoder = make_decoder(graph, algorithm, config)
    with BarrierRunner(threads) as runner:
        result = decoder.decode(priors, runner)
    per_iteration = runner.barrier_log[0] if runner.barrier_log else 0
    return result, per_iteration


# --- sweeps ---

@dataclass
class SweepPoint:
    ebn0_db: float
    frames: int
    frame_errors: int
    symbol_errors: int
    bit_errors: int
    info_symbols: int
    q: int
    total_iterations: int

    @property
    def fer(self):
        return self.frame_errors / self.frames if self.frames else 0.0

    @property
    def ber(self):
        bits = self.frames * self.info_symbols * self.q
        return self.bit_errors / bits if bits else 0.0

    @property
    def avg_iters(self):
        return self.total_iterations / self.frames if self.frames else 0.0


def count_errors(pcm, encoder, frames, decoded):
    """(frame, information-symbol, information-bit) errors of a batch."""
    popcount = channel.symbol_bits(pcm.field.q).sum(axis=1)
    frame_errors = symbol_errors = bit_errors = 0
    for frame, word in zip(frames, decoded):
        if not np.array_equal(word, frame.codeword):
            frame_errors += 1
        diff = frame.message ^ encoder.extract_message(word)
        symbol_errors += int(np.count_nonzero(diff))
        bit_errors += int(popcount[diff].sum())
    return frame_errors, symbol_errors, bit_errors


def sweep(pcm, algorithm, config, ebn0_grid, frames, seed, workers=1, executor='process',
          noiseless=False, channel_bits=None, channel_scale=None, progress=None):
    encoder = SystematicEncoder(pcm)
    points = []
    for stream, ebn0 in enumerate(ebn0_grid):
        batch = simulate_frames(pcm, encoder, ebn0, frames, seed, stream=stream,
                                noiseless=noiseless, channel_bits=channel_bits,
                                channel_scale=channel_scale)
        report = run_batch(pcm, algorithm, config, batch, workers, executor)
        fe, se, be = count_errors(pcm, encoder, batch, report.decoded)
        point = SweepPoint(ebn0_db=ebn0, frames=frames, frame_errors=fe, symbol_errors=se,
                           bit_errors=be, info_symbols=encoder.k, q=pcm.field.q,
                           total_iterations=sum(report.iterations))
        points.append(point)
        if progress is not None:
            progress(point)
    return points
