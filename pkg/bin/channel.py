"""BPSK over AWGN and the conversion of received samples into decoder inputs."""
import logging
from dataclasses import dataclass

import numpy as np

from decoding import Arithmetic
from errors import InvalidConfig, InvalidRate, LengthMismatch

logger = logging.getLogger(__name__)

PROB_FLOOR = 1e-30
SIGMA_FLOOR = 1e-6

PROBABILITY = 'probability'
DELTA_LLR = 'delta-llr'


@dataclass(frozen=True, eq=False)
class ChannelObservation:
    samples: np.ndarray
    sigma: float
    q: int

    def __post_init__(self):
        if self.samples.ndim != 1 or self.samples.size % self.q:
            raise LengthMismatch("observation", f"a multiple of q={self.q}", self.samples.size)

    @property
    def n(self):
        return self.samples.size // self.q


@dataclass(frozen=True, eq=False)
class SymbolPriors:
    """Per-VN length-g vectors: probabilities (FFT-SPA) or delta-LLRs (Min-Max)."""
    values: np.ndarray
    mode: str = PROBABILITY
    arithmetic: Arithmetic = Arithmetic.F64

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def g(self):
        return self.values.shape[1]


def symbol_bits(q):
    """g x q table of symbol bits, most significant first."""
    g = 1 << q
    return (np.arange(g)[:, None] >> np.arange(q - 1, -1, -1)[None, :]) & 1


def modulate_bpsk(codeword, field):
    word = np.asarray(codeword, dtype=np.int64)
    bits = symbol_bits(field.q)[word]
    return (1.0 - 2.0 * bits).ravel()


def ebn0_to_sigma(ebn0_db, rate):
    if not 0 < rate <= 1:
        raise InvalidRate(rate)
    ebn0 = 10.0 ** (ebn0_db / 10.0)
    return float(np.sqrt(1.0 / (2.0 * rate * ebn0)))


def add_awgn(signal, ebn0_db, rate, q, rng):
    sigma = ebn0_to_sigma(ebn0_db, rate)
    signal = np.asarray(signal, dtype=np.float64)
    samples = signal + sigma * rng.standard_normal(signal.size)
    return ChannelObservation(samples=samples, sigma=sigma, q=q)


def add_awgn_noiseless(signal, q):
    return ChannelObservation(samples=np.array(signal, dtype=np.float64), sigma=0.0, q=q)


def symbol_priors(obs, field):
    """p(c_n = x | y_n), the product of per-bit logistic factors, normalized per VN.

    Computed in the log domain so that high-SNR samples do not overflow.
    """
    if obs.q != field.q:
        raise LengthMismatch("bits per symbol", field.q, obs.q)
    sigma = max(obs.sigma, SIGMA_FLOOR)
    y = obs.samples.reshape(obs.n, field.q)
    # bit 0 was sent as +1, so its factor is 1 / (1 + exp(-2y/sigma^2))
    b = 2.0 * symbol_bits(field.q) - 1.0
    t = (2.0 / sigma ** 2) * y[:, None, :] * b[None, :, :]
    logp = -np.logaddexp(0.0, t).sum(axis=2)
    logp -= logp.max(axis=1, keepdims=True)
    p = np.exp(logp)
    p /= p.sum(axis=1, keepdims=True)
    return SymbolPriors(values=p, mode=PROBABILITY)


def llr_init_minmax(priors):
    """gamma_n(x) = ln(p(eta) / p(x)) with eta the most likely symbol."""
    if priors.mode != PROBABILITY or priors.arithmetic.is_fixed:
        raise InvalidConfig("delta-LLRs are derived from float probability priors")
    logp = np.log(np.maximum(priors.values, PROB_FLOOR))
    gamma = logp.max(axis=1, keepdims=True) - logp
    return SymbolPriors(values=gamma, mode=DELTA_LLR)


def quantize(values, bits, scale):
    if bits not in (8, 32):
        raise InvalidConfig(f"quantization width must be 8 or 32 bits, got {bits}")
    if scale <= 0:
        raise InvalidConfig(f"quantization scale must be positive, got {scale}")
    dtype = np.int8 if bits == 8 else np.int32
    info = np.iinfo(dtype)
    scaled = np.rint(np.asarray(values, dtype=np.float64) * scale)
    return np.clip(scaled, info.min, info.max).astype(dtype)


def quantize_observation(obs, bits, scale):
    """Rounds channel samples to integers at `scale` and maps them back to sample units."""
    levels = quantize(obs.samples, bits, scale)
    return ChannelObservation(samples=levels.astype(np.float64) / scale, sigma=obs.sigma, q=obs.q)


def hard_decision(priors):
    if priors.mode == PROBABILITY:
        return np.argmax(priors.values, axis=1)
    return np.argmin(priors.values, axis=1)


def fixed_priors(priors, arithmetic, llr_scale=None):
    """Converts float priors to decoder arithmetic.

    Probabilities become unsigned Q-format integers; delta-LLRs are scaled, rounded and
    saturated to the storage range.
    """
    if not arithmetic.is_fixed:
        return priors
    if priors.arithmetic.is_fixed:
        if priors.arithmetic is not arithmetic:
            raise InvalidConfig(f"priors already converted to {priors.arithmetic.value}")
        return priors

    if priors.mode == PROBABILITY:
        one = 1 << arithmetic.prob_frac_bits
        values = np.rint(priors.values * one).astype(np.int64)
        empty = values.sum(axis=1) == 0
        if empty.any():
            # every symbol fell below one LSB
            logger.debug("%d prior vectors underflowed, using uniform", int(empty.sum()))
            values[empty] = 1
        return SymbolPriors(values=values, mode=PROBABILITY, arithmetic=arithmetic)

    scale = llr_scale if llr_scale is not None else arithmetic.default_llr_scale
    levels = quantize(priors.values, arithmetic.bits, scale).astype(np.int64)
    values = np.clip(levels, 0, arithmetic.llr_max)
    return SymbolPriors(values=values, mode=DELTA_LLR, arithmetic=arithmetic)
