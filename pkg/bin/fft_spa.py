"""FFT-SPA decoding: sum-product with the check-node convolution taken in the
Walsh-Hadamard domain.

One iteration is permutation, forward transform, check-node product, inverse transform,
depermutation and the variable-node product with normalization. Every step is split into
phases so that the same code runs serially or on a barrier-synchronized thread team.
"""

import numpy as np

import channel
from counters import Phase, group_parts, part_range
from decoding import Arithmetic, IterativeDecoder
from errors import InvalidConfig, LengthMismatch

TO_CN = 'vn->cn'
TO_VN = 'cn->vn'

BLOCKS = ('permutation', 'fft', 'cnp_product', 'ifft', 'depermutation', 'vnp')


# --- kernels ---

def permute(bank, graph, direction):
    """Barrel shift of every edge vector by its coefficient.

    VN->CN: out(y) = in(h^-1 y). CN->VN: out(x) = in(h x). Index 0 never moves.
    """
    index = graph.to_cn_index if direction == TO_CN else graph.to_vn_index
    return np.take_along_axis(bank, index, axis=1)


def _butterflies(src, dst, h, lo=0, hi=None):
    """One radix-2 stage pairing indices that differ in bit log2(h), rows lo..hi of the
    (blocks, 2, h) view."""
    s = src.reshape(-1, 2, h)
    d = dst.reshape(-1, 2, h)
    hi = s.shape[0] if hi is None else hi
    a = s[lo:hi, 0]
    c = s[lo:hi, 1]
    d[lo:hi, 0] = a + c
    d[lo:hi, 1] = a - c
    return (hi - lo) * 2 * h


def fft_gf(vector):
    """Walsh-Hadamard transform along the last axis (unnormalized)."""
    out = np.array(vector, copy=True)
    g = out.shape[-1]
    h = 1
    while h < g:
        _butterflies(out.copy(), out, h)
        h <<= 1
    return out


def ifft_gf(vector, arithmetic=Arithmetic.F64):
    out = fft_gf(vector)
    g = out.shape[-1]
    if arithmetic.is_fixed:
        return out >> (g.bit_length() - 1)
    return out / g


def _mul(a, b, frac):
    if frac:
        return (a * b) >> frac
    return a * b


def _exclusion_products(x, one, frac, first=None):
    """out[:, j] = first * prod_{i != j} x[:, i] for x of shape (k, d, g)."""
    k, d, g = x.shape
    out = np.empty_like(x)
    for j in range(d):
        acc = np.full((k, g), one, dtype=x.dtype)
        if first is not None:
            acc = _mul(acc, first, frac)
        for i in range(d):
            if i != j:
                acc = _mul(acc, x[:, i], frac)
        out[:, j] = acc
    return out


def _normalize(z, frac):
    """Scales rows to sum 1 (or 1 << frac). Zero-sum rows become uniform; returns the
    scaled rows and the mask of those that fell back."""
    z = np.maximum(z, 0)
    s = z.sum(axis=1, keepdims=True)
    empty = (s[:, 0] == 0)
    if empty.any():
        z = z.copy()
        z[empty] = 1
        s[empty] = z.shape[1]
    if frac:
        return (z << frac) // s, empty
    return z / s, empty


def _cnp_rows(u_hat, edges, one, frac):
    return _exclusion_products(u_hat[edges], one, frac)


def cnp_product(bank_u, graph, arithmetic=Arithmetic.F64):
    """Per CN, each edge gets the elementwise product of the other transformed vectors."""
    frac = arithmetic.prob_frac_bits
    one = 1 << frac if frac else 1.0
    out = np.empty_like(bank_u)
    for _, _, edges in graph.cn_groups:
        out[edges] = _cnp_rows(bank_u, edges, one, frac)
    return out


def vnp(bank_v, priors, graph, arithmetic=Arithmetic.F64):
    """Extrinsic product times the prior, normalized. Returns (bank_u, fallbacks)."""
    frac = arithmetic.prob_frac_bits
    one = 1 << frac if frac else 1.0
    p = np.asarray(priors.values if hasattr(priors, 'values') else priors)
    z = np.empty_like(bank_v)
    for _, nodes, edges in graph.vn_groups:
        z[edges] = _exclusion_products(bank_v[edges], one, frac, first=p[nodes])
    u, empty = _normalize(z, frac)
    return u, int(empty.sum())


def posteriori_decide(bank_v, priors, graph):
    """argmax_x p_n(x) * prod over all CN messages, lowest symbol on ties. The product is
    taken in float64 so fixed-point inputs do not underflow."""
    p = np.asarray(priors.values if hasattr(priors, 'values') else priors, dtype=np.float64)
    word = np.zeros(graph.n, dtype=np.int64)
    for _, nodes, edges in graph.vn_groups:
        z = p[nodes] * bank_v[edges].astype(np.float64).prod(axis=1)
        word[nodes] = np.argmax(z, axis=1)
    return word


# --- decoder ---

class FFTSPADecoder(IterativeDecoder):
    """Owns the message banks of one codeword; reusable across frames. The same phase
    list serves the serial and the staged runner."""
    algorithm = 'fft-spa'

    def __init__(self, graph, config):
        super().__init__(graph, config)
        self.frac = self.arithmetic.prob_frac_bits
        self.one = (1 << self.frac) if self.frac else 1.0
        dtype = np.int64 if self.arithmetic.is_fixed else np.float64
        shape = (graph.e, graph.g)
        self.u = np.zeros(shape, dtype=dtype)
        self.v = np.zeros(shape, dtype=dtype)
        self.scratch = np.zeros(shape, dtype=dtype)
        self.prior = np.zeros((graph.n, graph.g), dtype=dtype)
        # per edge slot, so that workers of a staged run write disjoint ranges
        self.fallback_rows = np.zeros(graph.e, dtype=np.int64)
        self._phases = self._build_phases()

    def load(self, priors):
        if priors.mode != channel.PROBABILITY:
            raise InvalidConfig("FFT-SPA decodes from probability-mode priors")
        if priors.n != self.graph.n or priors.g != self.graph.g:
            raise LengthMismatch("priors", (self.graph.n, self.graph.g), priors.values.shape)
        priors = channel.fixed_priors(priors, self.arithmetic)
        self.prior[:] = priors.values
        self.fallback_rows[:] = 0
        self.u[:] = self.prior[self.graph.edge_vn]

    def phases(self, staged):
        return self._phases

    # phases

    def _permute_write(self, part, parts, counters):
        gr = self.graph
        lo, hi = part_range(gr.n, part, parts)
        edges = gr.vn_order[gr.vn_ptr[lo]:gr.vn_ptr[hi]]
        self.scratch[edges] = np.take_along_axis(self.u[edges], gr.to_cn_index[edges], axis=1)
        if counters is not None:
            k = len(edges)
            counters.count('permutation', nodes=hi - lo, edges=k, elements=k * gr.g,
                           memory_transactions=2 * k * gr.g)

    def _permute_commit(self, part, parts, counters):
        gr = self.graph
        lo, hi = part_range(gr.n, part, parts)
        edges = gr.vn_order[gr.vn_ptr[lo]:gr.vn_ptr[hi]]
        self.u[edges] = self.scratch[edges]
        if counters is not None:
            counters.count('permutation', memory_transactions=len(edges) * gr.g)

    def _copy(self, bank, part, parts, counters):
        lo, hi = part_range(self.graph.e, part, parts)
        self.scratch[lo:hi] = bank[lo:hi]

    def _stage(self, bank, h, block, part, parts, counters):
        rows = self.graph.e * self.graph.g // (2 * h)
        lo, hi = part_range(rows, part, parts)
        written = _butterflies(self.scratch, bank, h, lo, hi)
        if counters is not None:
            counters.count(block, additions=written, multiplications=written,
                           memory_transactions=written)

    def _cnp(self, part, parts, counters):
        for d, nodes, edges in group_parts(self.graph.cn_groups, part, parts):
            self.v[edges] = _cnp_rows(self.u, edges, self.one, self.frac)
            if counters is not None:
                k, g = len(nodes), self.graph.g
                counters.count('cnp_product', nodes=k, edges=k * d, elements=k * d * g,
                               multiplications=k * d * (d - 1) * g,
                               memory_transactions=k * d * (d - 1) * g)

    def _ifft_scale(self, part, parts, counters):
        lo, hi = part_range(self.graph.e, part, parts)
        g, q = self.graph.g, self.graph.q
        if self.frac:
            # >> q, then renormalize the Q-format vector
            self.v[lo:hi], empty = _normalize(self.v[lo:hi] >> q, self.frac)
        else:
            self.v[lo:hi] = np.maximum(self.v[lo:hi] / g, 0.0)
            empty = np.zeros(hi - lo, dtype=bool)
        self.fallback_rows[lo:hi] += empty
        if counters is not None:
            counters.count('ifft', divisions=(hi - lo) * g, memory_transactions=(hi - lo) * g)
            counters.zero_sum_fallbacks += int(empty.sum())

    def _depermute_write(self, part, parts, counters):
        gr = self.graph
        lo, hi = part_range(gr.m, part, parts)
        a, b = gr.cn_ptr[lo], gr.cn_ptr[hi]
        self.scratch[a:b] = np.take_along_axis(self.v[a:b], gr.to_vn_index[a:b], axis=1)
        if counters is not None:
            k = b - a
            counters.count('depermutation', nodes=hi - lo, edges=k, elements=k * gr.g,
                           memory_transactions=2 * k * gr.g)

    def _depermute_commit(self, part, parts, counters):
        gr = self.graph
        lo, hi = part_range(gr.m, part, parts)
        a, b = gr.cn_ptr[lo], gr.cn_ptr[hi]
        self.v[a:b] = self.scratch[a:b]
        if counters is not None:
            counters.count('depermutation', memory_transactions=(b - a) * gr.g)

    def _vnp_product(self, part, parts, counters):
        g = self.graph.g
        for d, nodes, edges in group_parts(self.graph.vn_groups, part, parts):
            self.scratch[edges] = _exclusion_products(self.v[edges], self.one, self.frac,
                                                      first=self.prior[nodes])
            if counters is not None:
                k = len(nodes)
                counters.count('vnp', nodes=k, edges=k * d, elements=k * d * g,
                               multiplications=k * d * d * g,
                               memory_transactions=k * d * (d + 1) * g)

    def _vnp_normalize(self, part, parts, counters):
        lo, hi = part_range(self.graph.e, part, parts)
        g = self.graph.g
        self.u[lo:hi], empty = _normalize(self.scratch[lo:hi], self.frac)
        self.fallback_rows[lo:hi] += empty
        if counters is not None:
            k = hi - lo
            counters.count('vnp', additions=k * g, divisions=k * g, memory_transactions=3 * k * g)
            counters.zero_sum_fallbacks += int(empty.sum())

    def _transform_phases(self, bank, block):
        phases = []
        h = 1
        while h < self.graph.g:
            phases.append(Phase(block, lambda p, n, c, bank=bank: self._copy(bank, p, n, c)))
            phases.append(Phase(block, lambda p, n, c, bank=bank, h=h:
                                self._stage(bank, h, block, p, n, c)))
            h <<= 1
        return phases

    def _build_phases(self):
        return [
            Phase('permutation', self._permute_write),
            Phase('permutation', self._permute_commit),
            *self._transform_phases(self.u, 'fft'),
            Phase('cnp_product', self._cnp),
            *self._transform_phases(self.v, 'ifft'),
            Phase('ifft', self._ifft_scale),
            Phase('depermutation', self._depermute_write),
            Phase('depermutation', self._depermute_commit),
            Phase('vnp', self._vnp_product),
            Phase('vnp', self._vnp_normalize),
        ]

    def fallbacks(self):
        return int(self.fallback_rows.sum())

    def decide(self):
        return posteriori_decide(self.v, self.prior, self.graph)


def decode_fft_spa(graph, priors, config):
    return FFTSPADecoder(graph, config).decode(priors)
