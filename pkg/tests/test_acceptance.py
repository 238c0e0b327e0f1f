"""Statistical and exhaustive end-to-end checks. Deselected by default; run with
`pytest -m slow`."""
import sys
import os
import pytest
import numpy as np

# Allow importing from bin/
sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'bin'))
import channel
import fft_spa
import gf
import min_max
import perf
from counters import BarrierRunner
from decoding import ALGORITHMS, Arithmetic, DecodeConfig
from ldpc_code import (ParityCheckMatrix, SystematicEncoder, build_tanner, enumerate_codewords,
                       gen_regular_code, ml_decode, toy_code)

pytestmark = pytest.mark.slow

WORKERS = os.cpu_count() or 1


def exhaustive_partials(rows, coeffs, field, combine):
    """For each edge j, fold `combine` over every assignment of the other edges, keyed by
    the sum of h_i x_i; returns the (d, g) table read back at h_j x."""
    d, g = rows.shape
    mul = field.mul_table
    out = np.zeros((d, g))
    for j in range(d):
        others = [i for i in range(d) if i != j]
        xs = np.indices((g,) * len(others)).reshape(len(others), -1)
        z = np.zeros(xs.shape[1], dtype=np.int64)
        for i, x in zip(others, xs):
            z ^= mul[coeffs[i], x]
        values = [rows[i, x] for i, x in zip(others, xs)]
        out[j] = combine(z, values, g)[mul[coeffs[j]]]
    return out


def sum_product(z, values, g):
    acc = np.zeros(g)
    np.add.at(acc, z, np.prod(values, axis=0))
    return acc / acc.sum()


def min_of_max(z, values, g):
    acc = np.full(g, np.inf)
    np.minimum.at(acc, z, np.max(values, axis=0))
    return acc


def single_check(field, coeffs):
    entries = tuple((0, n, int(h)) for n, h in enumerate(coeffs))
    return build_tanner(ParityCheckMatrix(1, len(coeffs), field, entries))


class TestKernels:
    @pytest.mark.parametrize("q", range(2, 9))
    def test_transform_involution(self, q):
        g = 1 << q
        x = np.random.default_rng(q).standard_normal((1000, g))
        twice = fft_spa.fft_gf(fft_spa.fft_gf(x))
        assert np.allclose(twice, g * x, rtol=1e-12, atol=1e-9 * g)

    @pytest.mark.parametrize("dc", [2, 3, 4])
    @pytest.mark.parametrize("q", [2, 3, 4])
    def test_cnp_oracle(self, dc, q):
        field = gf.build_field(q)
        rng = np.random.default_rng(100 * q + dc)
        for _ in range(200):
            coeffs = rng.integers(1, field.g, size=dc)
            graph = single_check(field, coeffs)
            p = rng.random((dc, field.g)) + 1e-3
            p /= p.sum(axis=1, keepdims=True)
            u = fft_spa.permute(p, graph, fft_spa.TO_CN)
            v = fft_spa.ifft_gf(fft_spa.cnp_product(fft_spa.fft_gf(u), graph))
            got = fft_spa.permute(v, graph, fft_spa.TO_VN)
            got /= got.sum(axis=1, keepdims=True)
            expected = exhaustive_partials(p, coeffs, field, sum_product)
            assert np.allclose(got, expected, rtol=1e-9, atol=1e-12)

    @pytest.mark.parametrize("dc", [2, 3, 4])
    @pytest.mark.parametrize("q", [2, 3, 4])
    @pytest.mark.parametrize("integer", [False, True])
    def test_min_max_oracle(self, dc, q, integer):
        field = gf.build_field(q)
        rng = np.random.default_rng(1000 * q + dc)
        for _ in range(200):
            coeffs = rng.integers(1, field.g, size=dc)
            alpha = rng.integers(0, 128, size=(dc, field.g)) if integer else rng.random((dc, field.g))
            beta = min_max.beta_extract(min_max.forward_backward(alpha, coeffs, field), coeffs, field)
            expected = exhaustive_partials(alpha, coeffs, field, min_of_max)
            if integer:
                assert (beta == expected).all()
            else:
                assert np.allclose(beta, expected, rtol=1e-12, atol=0)


class TestNoiselessDecoding:
    @pytest.mark.parametrize("shape", sorted(perf.CODE_FAMILY))
    @pytest.mark.parametrize("q", [2, 4, 8])
    def test_every_mode_decodes(self, shape, q):
        n, m, dc, dv = perf.CODE_FAMILY[shape]
        pcm = gen_regular_code(n, m, dc, dv, gf.build_field(q), seed=q)
        encoder = SystematicEncoder(pcm)
        graph = build_tanner(pcm)
        frames = perf.simulate_frames(pcm, encoder, 0.0, 100, seed=1, noiseless=True)
        for algorithm in ALGORITHMS:
            for arithmetic in Arithmetic:
                decoder = perf.make_decoder(graph, algorithm, DecodeConfig(arithmetic=arithmetic))
                for frame in frames:
                    result = decoder.decode(frame.priors)
                    assert (result.decoded == frame.codeword).all()
                    assert result.iterations_run == 1


class TestStructure:
    @pytest.mark.parametrize("shape", sorted(perf.CODE_FAMILY))
    @pytest.mark.parametrize("q", range(2, 9))
    def test_barriers_and_identity(self, shape, q):
        n, m, dc, dv = perf.CODE_FAMILY[shape]
        pcm = gen_regular_code(n, m, dc, dv, gf.build_field(q), seed=0)
        graph = build_tanner(pcm)
        frame = perf.simulate_frames(pcm, SystematicEncoder(pcm), 2.0, 1, seed=0)[0]
        config = DecodeConfig(max_iters=2, early_stop=False)
        expected = {'fft-spa': 4 * q + 8, 'min-max': 2 * m * dc + 1}
        for algorithm in ALGORITHMS:
            serial = perf.make_decoder(graph, algorithm, config)
            staged = perf.make_decoder(graph, algorithm, config)
            a = serial.decode(frame.priors)
            with BarrierRunner(4) as runner:
                b = staged.decode(frame.priors, runner)
            assert runner.barrier_log == [expected[algorithm]] * 2
            assert (a.decoded == b.decoded).all()
            banks = ('u', 'v') if algorithm == 'fft-spa' else ('alpha', 'beta')
            for bank in banks:
                assert (getattr(serial, bank) == getattr(staged, bank)).all()

    def test_core_terms_at_c3(self):
        rows = perf.count_table(shape='C3')
        drift = [(r.q, r.label, r.residual) for r in rows if r.exact and r.residual]
        assert drift == []
        assert {r.q for r in rows} == set(range(2, 9))


@pytest.fixture(scope="module")
def c1_gf16():
    return gen_regular_code(16, 8, 4, 2, gf.build_field(4), seed=1)


class TestErrorRates:
    @pytest.mark.parametrize("algorithm", ALGORITHMS)
    def test_fer_falls_with_snr(self, c1_gf16, algorithm):
        config = DecodeConfig(max_iters=10, early_stop=False)
        points = perf.sweep(c1_gf16, algorithm, config, [1.0, 2.0, 3.0, 4.0], 10000, seed=3,
                            workers=WORKERS)
        fer = [p.fer for p in points]
        assert all(b < a for a, b in zip(fer, fer[1:]))
        assert fer[-1] <= fer[0] / 10

    def test_quantization_loss(self, c1_gf16):
        grid = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]
        float_points = perf.sweep(c1_gf16, 'min-max', DecodeConfig(), grid, 10000, seed=4,
                                  workers=WORKERS)
        chosen = [p for p in float_points if 1e-2 <= p.fer <= 1e-1]
        if not chosen:
            pytest.skip("no grid point with float FER in [1e-2, 1e-1]")
        point = chosen[0]
        for arithmetic, bound in ((Arithmetic.I8, 2.0), (Arithmetic.I32, 1.2)):
            fixed = perf.sweep(c1_gf16, 'min-max', DecodeConfig(arithmetic=arithmetic),
                               [point.ebn0_db], 10000, seed=4, workers=WORKERS)[0]
            assert fixed.fer <= bound * point.fer

    def test_toy_code_near_ml(self):
        pcm = toy_code()
        encoder = SystematicEncoder(pcm)
        codebook = enumerate_codewords(pcm, encoder)
        graph = build_tanner(pcm)
        decoder = fft_spa.FFTSPADecoder(graph, DecodeConfig(max_iters=20))
        frames = perf.simulate_frames(pcm, encoder, 5.0, 10000, seed=6)
        ml_errors = spa_errors = 0
        for frame in frames:
            ml_errors += not np.array_equal(ml_decode(codebook, frame.priors.values), frame.codeword)
            spa_errors += not np.array_equal(decoder.decode(frame.priors).decoded, frame.codeword)
        assert spa_errors <= 2 * max(ml_errors, 1)


@pytest.mark.skipif(WORKERS < 4, reason="needs at least 4 CPUs")
def test_multicodeword_scaling():
    pcm = gen_regular_code(64, 32, 4, 2, gf.build_field(6), seed=0)
    frames = perf.simulate_frames(pcm, SystematicEncoder(pcm), 3.0, 256, seed=0)
    config = DecodeConfig(early_stop=False)
    one = perf.run_batch(pcm, 'min-max', config, frames, 1)
    four = perf.run_batch(pcm, 'min-max', config, frames, 4)
    assert all((a == b).all() for a, b in zip(one.decoded, four.decoded))
    assert four.throughput_bps >= 2.8 * one.throughput_bps
