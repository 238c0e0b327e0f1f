"""Min-Max decoding over delta-LLRs.

Check nodes run a forward/backward min-max recursion; variable nodes add and
min-shift. Messages are compared and added only, so the fixed-point modes are exact
integer versions of the float decoder apart from the quantization of the channel
LLRs and saturation at the storage bound.

Inputs of a CN are moved into the "h*x" domain first (P_j(y) = alpha_j(h_j^-1 y)), where
the parity constraint is a plain XOR: F_j = F_{j-1} (*) P_j with
(a (*) b)(x) = min_y max(a(x ^ y), b(y)).
"""
from dataclasses import dataclass

import numpy as np

import channel
from counters import Phase, group_parts, part_range
from decoding import IterativeDecoder
from errors import InvalidConfig, InvalidGraph, LengthMismatch

BLOCKS = ('fb_first', 'fb_remaining', 'beta_first_last', 'beta_remaining', 'vnp')


def xor_table(g):
    return np.arange(g)[:, None] ^ np.arange(g)[None, :]


def minmax_conv(a, b, xor, xs=None):
    """(a (*) b)(x) for x in xs (all symbols by default), over the last axis."""
    rows = xor if xs is None else xor[xs]
    candidates = np.maximum(a[..., rows], b[..., None, :])
    return candidates.min(axis=-1)


@dataclass
class FBWorkspace:
    """Forward and backward values of one CN (d x g) or of a batch (k x d x g)."""
    f: np.ndarray
    b: np.ndarray


def _to_cn_domain(alpha_rows, coeffs, field):
    index = field.mul_table[field.inv_table[np.asarray(coeffs)]]
    return np.take_along_axis(alpha_rows, index, axis=-1)


def _from_cn_domain(rows, coeffs, field):
    index = field.mul_table[np.asarray(coeffs)]
    return np.take_along_axis(rows, index, axis=-1)


def forward_backward(alpha_rows, coeffs, field):
    """F[0] = alpha_0(h_0^-1 x), F[j] = F[j-1] (*) P_j; B mirrored from the last edge."""
    p = _to_cn_domain(np.asarray(alpha_rows), coeffs, field)
    d = p.shape[-2]
    if d < 2:
        raise InvalidGraph("min-max check nodes need degree >= 2")
    xor = xor_table(field.g)
    f = np.empty_like(p)
    b = np.empty_like(p)
    f[..., 0, :] = p[..., 0, :]
    b[..., d - 1, :] = p[..., d - 1, :]
    for j in range(1, d):
        f[..., j, :] = minmax_conv(f[..., j - 1, :], p[..., j, :], xor)
        b[..., d - 1 - j, :] = minmax_conv(b[..., d - j, :], p[..., d - 1 - j, :], xor)
    return FBWorkspace(f=f, b=b)


def beta_extract(workspace, coeffs, field):
    """Extrinsic CN outputs: edge 0 from B[1], the last edge from F[d-2], interior edges
    merge F[j-1] and B[j+1]; each is read back at h_j x."""
    f, b = workspace.f, workspace.b
    d = f.shape[-2]
    xor = xor_table(field.g)
    out = np.empty_like(f)
    out[..., 0, :] = b[..., 1, :]
    out[..., d - 1, :] = f[..., d - 2, :]
    for j in range(1, d - 1):
        out[..., j, :] = minmax_conv(f[..., j - 1, :], b[..., j + 1, :], xor)
    return _from_cn_domain(out, coeffs, field)


def _sat_add(a, b, bound):
    if bound is None:
        return a + b
    return np.minimum(a + b, bound)


def _vnp_rows(beta_rows, gamma, bound):
    """beta_rows (k, d, g), gamma (k, g) -> alpha rows with min 0."""
    k, d, g = beta_rows.shape
    out = np.empty_like(beta_rows)
    for j in range(d):
        acc = gamma.copy()
        for i in range(d):
            if i != j:
                acc = _sat_add(acc, beta_rows[:, i], bound)
        out[:, j] = acc - acc.min(axis=1, keepdims=True)
    return out


def _bound(arithmetic):
    return arithmetic.llr_max if arithmetic.is_fixed else None


def vnp_minmax(beta_bank, gamma, graph, arithmetic):
    g_values = np.asarray(gamma.values if hasattr(gamma, 'values') else gamma)
    out = np.empty_like(beta_bank)
    bound = _bound(arithmetic)
    for _, nodes, edges in graph.vn_groups:
        out[edges] = _vnp_rows(beta_bank[edges], g_values[nodes], bound)
    return out


def decide_minmax(beta_bank, gamma, graph):
    """argmin of gamma + all incoming beta, summed without saturation."""
    g_values = np.asarray(gamma.values if hasattr(gamma, 'values') else gamma)
    word = np.zeros(graph.n, dtype=np.int64)
    for _, nodes, edges in graph.vn_groups:
        total = g_values[nodes] + beta_bank[edges].sum(axis=1)
        word[nodes] = np.argmin(total, axis=1)
    return word


class MinMaxDecoder(IterativeDecoder):
    """Unstaged iterations run five vectorized phases over CN degree groups. Staged
    iterations walk the CNs one at a time, 2*d_c phases each, splitting the output
    symbols of every phase across the thread team, then run the VNP phase.
    """
    algorithm = 'min-max'

    def __init__(self, graph, config):
        super().__init__(graph, config)
        if graph.m and int(graph.dc_per_cn.min()) < 2:
            raise InvalidGraph("min-max check nodes need degree >= 2")
        self.bound = _bound(self.arithmetic)
        self.llr_scale = config.llr_scale
        dtype = np.int64 if self.arithmetic.is_fixed else np.float64
        shape = (graph.e, graph.g)
        self.alpha = np.zeros(shape, dtype=dtype)
        self.beta = np.zeros(shape, dtype=dtype)
        self.gamma = np.zeros((graph.n, graph.g), dtype=dtype)
        self.xor = xor_table(graph.g)
        # per CN group: permuted inputs, forward and backward rows
        self.work = [tuple(np.zeros((len(nodes), d, graph.g), dtype=dtype) for _ in range(3))
                     for d, nodes, _ in graph.cn_groups]
        self.cn_slot = {}
        for gi, (_, nodes, _) in enumerate(graph.cn_groups):
            for r, m in enumerate(nodes):
                self.cn_slot[int(m)] = (gi, r)
        self._unstaged = self._build_unstaged()
        self._staged = None

    def load(self, priors):
        if priors.mode == channel.PROBABILITY:
            priors = channel.llr_init_minmax(priors)
        if priors.n != self.graph.n or priors.g != self.graph.g:
            raise LengthMismatch("priors", (self.graph.n, self.graph.g), priors.values.shape)
        priors = channel.fixed_priors(priors, self.arithmetic, self.llr_scale)
        if priors.arithmetic is not self.arithmetic:
            raise InvalidConfig(f"priors in {priors.arithmetic.value}, "
                                f"decoder in {self.arithmetic.value}")
        self.gamma[:] = priors.values
        self.alpha[:] = self.gamma[self.graph.edge_vn]

    def phases(self, staged):
        if not staged:
            return self._unstaged
        if self._staged is None:
            self._staged = self._build_staged()
        return self._staged

    def decide(self):
        return decide_minmax(self.beta, self.gamma, self.graph)

    # unstaged phases, vectorized over the CNs of each degree group

    def _cn_parts(self, part, parts):
        gr = self.graph
        for gi, (d, nodes, edges) in enumerate(gr.cn_groups):
            lo, hi = part_range(len(nodes), part, parts)
            if hi > lo:
                yield d, hi - lo, edges[lo:hi], self.work[gi], slice(lo, hi)

    def _fb_first(self, part, parts, counters):
        g = self.graph.g
        for d, k, edges, (p, f, b), rows in self._cn_parts(part, parts):
            p[rows] = np.take_along_axis(self.alpha[edges], self.graph.to_cn_index[edges], axis=-1)
            f[rows, 0] = p[rows, 0]
            b[rows, d - 1] = p[rows, d - 1]
            if counters is not None:
                counters.count('fb_first', nodes=k, edges=k * d, elements=k * d * g,
                               memory_transactions=6 * k * g)

    def _fb_remaining(self, part, parts, counters):
        g = self.graph.g
        for d, k, edges, (p, f, b), rows in self._cn_parts(part, parts):
            for j in range(1, d):
                f[rows, j] = minmax_conv(f[rows, j - 1], p[rows, j], self.xor)
                b[rows, d - 1 - j] = minmax_conv(b[rows, d - j], p[rows, d - 1 - j], self.xor)
            if counters is not None:
                steps = 2 * k * (d - 1)
                counters.count('fb_remaining', elements=k * (d - 1) * g * g,
                               additions=steps * g * g,
                               comparisons=steps * g * g + steps * g,
                               memory_transactions=4 * steps * g * g)

    def _beta_first_last(self, part, parts, counters):
        g = self.graph.g
        to_vn = self.graph.to_vn_index
        for d, k, edges, (p, f, b), rows in self._cn_parts(part, parts):
            first, last = edges[:, 0], edges[:, d - 1]
            self.beta[first] = np.take_along_axis(b[rows, 1], to_vn[first], axis=-1)
            self.beta[last] = np.take_along_axis(f[rows, d - 2], to_vn[last], axis=-1)
            if counters is not None:
                counters.count('beta_first_last', nodes=k, edges=k * d, elements=k * d * g,
                               memory_transactions=6 * k * g)

    def _beta_remaining(self, part, parts, counters):
        g = self.graph.g
        to_vn = self.graph.to_vn_index
        for d, k, edges, (p, f, b), rows in self._cn_parts(part, parts):
            for j in range(1, d - 1):
                e = edges[:, j]
                merged = minmax_conv(f[rows, j - 1], b[rows, j + 1], self.xor)
                self.beta[e] = np.take_along_axis(merged, to_vn[e], axis=-1)
            if counters is not None:
                steps = k * (d - 2)
                counters.count('beta_remaining', elements=steps * g * g,
                               additions=steps * g * g,
                               comparisons=steps * g * g + steps * g,
                               memory_transactions=4 * steps * g * g)

    def _vnp(self, part, parts, counters):
        g = self.graph.g
        for d, nodes, edges in group_parts(self.graph.vn_groups, part, parts):
            self.alpha[edges] = _vnp_rows(self.beta[edges], self.gamma[nodes], self.bound)
            if counters is not None:
                k = len(nodes)
                counters.count('vnp', nodes=k, edges=k * d, elements=k * d * g,
                               additions=k * d * (d + 1) * g,
                               comparisons=k * d * g,
                               memory_transactions=k * d * (d + 4) * g)

    def _build_unstaged(self):
        return [
            Phase('fb_first', self._fb_first),
            Phase('fb_remaining', self._fb_remaining),
            Phase('beta_first_last', self._beta_first_last),
            Phase('beta_remaining', self._beta_remaining),
            Phase('vnp', self._vnp),
        ]

    # staged phases, one CN at a time with the output symbols split across workers

    def _cn_view(self, m):
        gi, r = self.cn_slot[m]
        d, _, edges = self.graph.cn_groups[gi]
        p, f, b = self.work[gi]
        return d, edges[r], p[r], f[r], b[r]

    def _st_first(self, m, part, parts, counters):
        d, edges, p, f, b = self._cn_view(m)
        lo, hi = part_range(self.graph.g, part, parts)
        xs = np.arange(lo, hi)
        p[:, lo:hi] = self.alpha[edges[:, None], self.graph.to_cn_index[edges][:, lo:hi]]
        f[0, xs] = p[0, xs]
        b[d - 1, xs] = p[d - 1, xs]
        if counters is not None:
            n = hi - lo
            head = 1 + d if part == 0 else 0
            counters.count('fb_first', nodes=head, elements=d * n, memory_transactions=6 * n)

    def _st_recursion(self, m, j, part, parts, counters):
        d, edges, p, f, b = self._cn_view(m)
        g = self.graph.g
        lo, hi = part_range(g, part, parts)
        xs = np.arange(lo, hi)
        f[j, xs] = minmax_conv(f[j - 1], p[j], self.xor, xs)
        b[d - 1 - j, xs] = minmax_conv(b[d - j], p[d - 1 - j], self.xor, xs)
        if counters is not None:
            n = hi - lo
            counters.count('fb_remaining', elements=n * g,
                           additions=2 * n * g, comparisons=2 * n * g + 2 * n,
                           memory_transactions=8 * n * g)

    def _st_beta_edge(self, m, j, part, parts, counters):
        d, edges, p, f, b = self._cn_view(m)
        g = self.graph.g
        lo, hi = part_range(g, part, parts)
        e = int(edges[j])
        ys = self.graph.to_vn_index[e, lo:hi]
        n = hi - lo
        if j == 0:
            self.beta[e, lo:hi] = b[1, ys]
        elif j == d - 1:
            self.beta[e, lo:hi] = f[d - 2, ys]
        else:
            self.beta[e, lo:hi] = minmax_conv(f[j - 1], b[j + 1], self.xor, ys)
        if counters is None:
            return
        if j == 0:
            head = 1 + d if part == 0 else 0
            counters.count('beta_first_last', nodes=head, elements=d * n,
                           memory_transactions=3 * n)
        elif j == d - 1:
            counters.count('beta_first_last', memory_transactions=3 * n)
        else:
            counters.count('beta_remaining', elements=n * g,
                           additions=n * g, comparisons=n * g + n,
                           memory_transactions=4 * n * g)

    def _build_staged(self):
        phases = []
        for m in range(self.graph.m):
            d = int(self.graph.dc_per_cn[m])
            phases.append(Phase('fb_first', lambda p, n, c, m=m: self._st_first(m, p, n, c)))
            for j in range(1, d):
                phases.append(Phase('fb_remaining', lambda p, n, c, m=m, j=j:
                                    self._st_recursion(m, j, p, n, c)))
            for j in (0, d - 1, *range(1, d - 1)):
                block = 'beta_remaining' if 0 < j < d - 1 else 'beta_first_last'
                phases.append(Phase(block, lambda p, n, c, m=m, j=j:
                                    self._st_beta_edge(m, j, p, n, c)))
        phases.append(Phase('vnp', self._vnp))
        return phases


def decode_min_max(graph, priors, config):
    return MinMaxDecoder(graph, config).decode(priors)
