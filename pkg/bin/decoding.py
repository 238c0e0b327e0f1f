"""Types shared by the FFT-SPA and Min-Max decoders."""
import enum
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from counters import OpCounters, SerialRunner
from errors import InvalidConfig
from ldpc_code import graph_syndrome

logger = logging.getLogger(__name__)


class Arithmetic(enum.Enum):
    F64 = 'f64'
    I32 = 'i32'
    I8 = 'i8'

    @property
    def is_fixed(self):
        return self is not Arithmetic.F64

    @property
    def bits(self):
        return {Arithmetic.F64: 64, Arithmetic.I32: 32, Arithmetic.I8: 8}[self]

    @property
    def prob_frac_bits(self):
        """Fraction bits of unsigned fixed-point probabilities (Q16 / Q6)."""
        return {Arithmetic.I32: 16, Arithmetic.I8: 6}.get(self, 0)

    @property
    def default_llr_scale(self):
        return {Arithmetic.I32: float(1 << 16), Arithmetic.I8: 8.0}.get(self, 1.0)

    @property
    def llr_max(self):
        """Saturation bound of delta-LLR storage."""
        return int(np.iinfo(np.int32).max) if self is Arithmetic.I32 else 127

    @classmethod
    def parse(cls, text):
        try:
            return cls(text)
        except ValueError:
            raise InvalidConfig(f"unknown arithmetic {text!r}, expected one of "
                                f"{', '.join(a.value for a in cls)}") from None


ALGORITHMS = ('fft-spa', 'min-max')


@dataclass(frozen=True)
class DecodeConfig:
    max_iters: int = 10
    early_stop: bool = True
    arithmetic: Arithmetic = Arithmetic.F64
    counters_enabled: bool = False
    # delta-LLR quantization scale for fixed Min-Max, None = arithmetic default
    llr_scale: Optional[float] = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidConfig(f"max_iters must be >= 1, got {self.max_iters}")
        if isinstance(self.arithmetic, str):
            object.__setattr__(self, 'arithmetic', Arithmetic.parse(self.arithmetic))
        if self.llr_scale is not None and self.llr_scale <= 0:
            raise InvalidConfig(f"llr_scale must be positive, got {self.llr_scale}")


@dataclass
class DecodeResult:
    decoded: np.ndarray
    iterations_run: int
    syndrome_ok: bool
    counters: Optional[object] = None
    # normalizations that found an all-zero vector and fell back to uniform
    zero_sum_fallbacks: int = 0


class IterativeDecoder:
    """Iteration loop shared by both decoders.

    Subclasses provide load(priors), phases(staged) and decide(), and may report uniform
    fallbacks through fallbacks(). With early_stop the
    syndrome of the decision taken after every iteration is checked, otherwise exactly
    max_iters iterations run before the single final decision.
    """
    algorithm = None

    def __init__(self, graph, config):
        self.graph = graph
        self.config = config
        self.arithmetic = config.arithmetic

    def load(self, priors):
        raise NotImplementedError

    def phases(self, staged):
        raise NotImplementedError

    def decide(self):
        raise NotImplementedError

    def fallbacks(self):
        return 0

    def decode(self, priors, runner=None):
        runner = runner or SerialRunner()
        self.load(priors)
        phases = self.phases(runner.staged)
        counters = OpCounters() if self.config.counters_enabled else None

        word, ok = None, False
        iterations = 0
        for k in range(1, self.config.max_iters + 1):
            if counters is not None:
                counters.start_iteration()
            runner.run(phases, counters)
            iterations = k
            if self.config.early_stop:
                word = self.decide()
                _, ok = graph_syndrome(self.graph, word)
                if ok:
                    break
        if not self.config.early_stop:
            word = self.decide()
            _, ok = graph_syndrome(self.graph, word)

        fallbacks = self.fallbacks()
        if fallbacks:
            logger.debug("%s: %d zero-sum vectors replaced by uniform", self.algorithm, fallbacks)
        return DecodeResult(decoded=word, iterations_run=iterations, syndrome_ok=ok,
                            counters=counters, zero_sum_fallbacks=fallbacks)
