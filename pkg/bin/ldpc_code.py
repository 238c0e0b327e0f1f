"""Parity-check matrices over GF(2^q): alist I/O, regular construction, Tanner graphs,
syndromes and a systematic encoder.
"""
import itertools
import logging
import warnings
from dataclasses import dataclass, field as dc_field
from functools import cached_property

import numpy as np

import gf
from errors import (CodeConstructionError, FieldMismatch, InfeasibleDegrees,
                    InvalidConfig, LengthMismatch, ParseError, RankDeficient)

logger = logging.getLogger(__name__)

# Random draws per edge spent looking for a VN that closes no length-4 cycle.
GIRTH_RETRIES = 100
MAX_RESTARTS = 50

# exhaustive codebooks are limited to 2^16 words
CODEBOOK_MAX_BITS = 16

PROB_FLOOR = 1e-30

# alist column line of a degree-0 VN
EMPTY_COLUMN = "-"


@dataclass(frozen=True)
class ParityCheckMatrix:
    m: int
    n: int
    field: gf.FieldSpec
    # (row, col, coefficient), sorted row-major
    entries: tuple

    def __post_init__(self):
        entries = tuple(sorted((int(r), int(c), int(h)) for r, c, h in self.entries))
        seen = set()
        for r, c, h in entries:
            if not (0 <= r < self.m and 0 <= c < self.n):
                raise InvalidConfig(f"entry ({r}, {c}) outside a {self.m}x{self.n} matrix")
            if not 0 < h < self.field.g:
                raise FieldMismatch(h, self.field.g)
            if (r, c) in seen:
                raise InvalidConfig(f"duplicate entry at ({r}, {c})")
            seen.add((r, c))
        object.__setattr__(self, 'entries', entries)

    @property
    def nnz(self):
        return len(self.entries)

    @cached_property
    def arrays(self):
        """(rows, cols, coeffs) as int64 arrays."""
        if not self.entries:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty, empty
        rows, cols, coeffs = (np.array(a, dtype=np.int64) for a in zip(*self.entries))
        return rows, cols, coeffs

    @property
    def row_degrees(self):
        return np.bincount(self.arrays[0], minlength=self.m)

    @property
    def col_degrees(self):
        return np.bincount(self.arrays[1], minlength=self.n)

    @property
    def regular_degrees(self):
        """(d_c, d_v) when every row and every column has a single weight, else None."""
        rd, cd = self.row_degrees, self.col_degrees
        if self.m == 0 or self.n == 0:
            return None
        if (rd == rd[0]).all() and (cd == cd[0]).all():
            return int(rd[0]), int(cd[0])
        return None

    def dense(self):
        h = np.zeros((self.m, self.n), dtype=np.int64)
        rows, cols, coeffs = self.arrays
        h[rows, cols] = coeffs
        return h

    @classmethod
    def from_dense(cls, field, matrix):
        matrix = np.asarray(matrix, dtype=np.int64)
        rows, cols = np.nonzero(matrix)
        entries = tuple(zip(rows.tolist(), cols.tolist(), matrix[rows, cols].tolist()))
        return cls(m=matrix.shape[0], n=matrix.shape[1], field=field, entries=entries)


@dataclass(frozen=True, eq=False)
class TannerGraph:
    """Dual-indexed Tanner graph. Edge ids are CN-major: the edges of CN m are
    cn_ptr[m] .. cn_ptr[m+1]-1, ordered by VN index.
    """
    field: gf.FieldSpec
    m: int
    n: int
    edge_cn: np.ndarray
    edge_vn: np.ndarray
    edge_h: np.ndarray
    cn_ptr: np.ndarray
    vn_ptr: np.ndarray
    # edge ids sorted by (vn, cn)
    vn_order: np.ndarray
    dc_per_cn: np.ndarray
    dv_per_vn: np.ndarray
    # (degree, node ids, node x degree edge-id matrix) per distinct degree
    cn_groups: tuple = dc_field(repr=False)
    vn_groups: tuple = dc_field(repr=False)
    # out(y) = in(h^-1 y) on the way to the CN, out(x) = in(h x) on the way back
    to_cn_index: np.ndarray = dc_field(repr=False)
    to_vn_index: np.ndarray = dc_field(repr=False)

    @property
    def e(self):
        return len(self.edge_h)

    @property
    def g(self):
        return self.field.g

    @property
    def q(self):
        return self.field.q

    @cached_property
    def cn_edges(self):
        return tuple(
            tuple((int(self.edge_vn[e]), int(self.edge_h[e]), e)
                  for e in range(self.cn_ptr[m], self.cn_ptr[m + 1]))
            for m in range(self.m))

    @cached_property
    def vn_edges(self):
        return tuple(
            tuple((int(self.edge_cn[e]), int(self.edge_h[e]), int(e))
                  for e in self.vn_order[self.vn_ptr[n]:self.vn_ptr[n + 1]])
            for n in range(self.n))

    @property
    def regular_degrees(self):
        if len(self.cn_groups) == 1 and len(self.vn_groups) == 1:
            return self.cn_groups[0][0], self.vn_groups[0][0]
        return None


def _groups(degrees, ptr, order=None):
    groups = []
    for d in np.unique(degrees):
        nodes = np.flatnonzero(degrees == d)
        edges = ptr[nodes][:, None] + np.arange(d)[None, :]
        if order is not None:
            edges = order[edges]
        groups.append((int(d), nodes, edges.astype(np.int64)))
    return tuple(groups)


def build_tanner(pcm):
    rows, cols, coeffs = pcm.arrays
    field = pcm.field

    dc = np.bincount(rows, minlength=pcm.m).astype(np.int64)
    dv = np.bincount(cols, minlength=pcm.n).astype(np.int64)
    cn_ptr = np.concatenate(([0], np.cumsum(dc))).astype(np.int64)
    vn_ptr = np.concatenate(([0], np.cumsum(dv))).astype(np.int64)
    vn_order = np.lexsort((rows, cols)).astype(np.int64)

    to_cn_index = field.mul_table[field.inv_table[coeffs]]
    to_vn_index = field.mul_table[coeffs]

    arrays = [rows, cols, coeffs, cn_ptr, vn_ptr, vn_order, dc, dv, to_cn_index, to_vn_index]
    for a in arrays:
        a.setflags(write=False)

    return TannerGraph(
        field=field, m=pcm.m, n=pcm.n,
        edge_cn=rows, edge_vn=cols, edge_h=coeffs,
        cn_ptr=cn_ptr, vn_ptr=vn_ptr, vn_order=vn_order,
        dc_per_cn=dc, dv_per_vn=dv,
        cn_groups=_groups(dc, cn_ptr),
        vn_groups=_groups(dv, vn_ptr, vn_order),
        to_cn_index=to_cn_index, to_vn_index=to_vn_index,
    )


# --- construction ---

def _closes_4cycle(v, row, vn_rows):
    return any(vn_rows[u] & vn_rows[v] for u in row)


def _try_regular(n, m, dc, dv, rng):
    remaining = rng.permutation(np.repeat(np.arange(n), dv)).tolist()
    vn_rows = [set() for _ in range(n)]
    rows = []
    short_cycles = 0

    for r in range(m):
        row = []
        for _ in range(dc):
            choice = fallback = None
            for _ in range(GIRTH_RETRIES):
                i = int(rng.integers(len(remaining)))
                v = remaining[i]
                if v in row:
                    continue
                if fallback is None:
                    fallback = i
                if not _closes_4cycle(v, row, vn_rows):
                    choice = i
                    break
            if choice is None:
                short_cycles += 1
                choice = fallback
            if choice is None:
                candidates = [i for i, v in enumerate(remaining) if v not in row]
                if not candidates:
                    return None, short_cycles
                choice = candidates[int(rng.integers(len(candidates)))]
            row.append(remaining.pop(choice))
        for v in row:
            vn_rows[v].add(r)
        rows.append(sorted(row))
    return rows, short_cycles


def gen_regular_code(n, m, dc, dv, field, seed):
    """Random (d_v, d_c)-regular code, duplicate-free, with length-4 cycles avoided
    where the retry budget finds an alternative. Deterministic in (parameters, seed).
    """
    if n * dv != m * dc or dc > n or dv > m or min(n, m, dc, dv) < 1:
        raise InfeasibleDegrees(n, m, dc, dv)

    rng = np.random.default_rng(seed)
    for attempt in range(MAX_RESTARTS):
        rows, short_cycles = _try_regular(n, m, dc, dv, rng)
        if rows is not None:
            break
        logger.debug("regular construction stuck on attempt %d, restarting", attempt + 1)
    else:
        raise CodeConstructionError(
            f"no duplicate-free ({dv}, {dc})-regular placement found in {MAX_RESTARTS} attempts")

    if short_cycles:
        logger.info("accepted %d edges closing length-4 cycles", short_cycles)

    coeffs = rng.integers(1, field.g, size=n * dv)
    entries = [(r, v, int(h)) for (r, v), h in
               zip(((r, v) for r, row in enumerate(rows) for v in row), coeffs)]
    return ParityCheckMatrix(m=m, n=n, field=field, entries=tuple(entries))


def toy_code():
    """The 3x6 GF(4) example matrix, coefficients in polynomial basis (a = 2, a^2 = 3)."""
    field = gf.build_field(2)
    return ParityCheckMatrix.from_dense(field, [
        [2, 0, 1, 2, 0, 1],
        [3, 2, 0, 1, 1, 0],
        [0, 2, 3, 0, 3, 1],
    ])


# --- alist I/O ---

def _int_token(token, line, column, what):
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"expected integer {what}, got {token!r}", line, column) from None


def parse_code(text):
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split('#', 1)[0].strip()
        if body:
            lines.append((lineno, body.split()))
    if len(lines) < 4:
        raise ParseError("truncated header, expected 4 header lines",
                         lines[-1][0] if lines else 1)

    lineno, toks = lines[0]
    if len(toks) not in (3, 4):
        raise ParseError("header must be 'N M g [poly]'", lineno)
    n, m, g = (_int_token(t, lineno, i + 1, name) for i, (t, name) in enumerate(zip(toks, "NMg")))
    poly = _int_token(toks[3], lineno, 4, "poly") if len(toks) == 4 else None
    if g < 2 or g & (g - 1):
        raise ParseError(f"field size {g} is not a power of two", lineno, 3)
    field = gf.build_field(g.bit_length() - 1, poly)

    lineno, toks = lines[1]
    if len(toks) != 2:
        raise ParseError("expected 'dv_max dc_max'", lineno)
    dv_max, dc_max = (_int_token(t, lineno, i + 1, "degree") for i, t in enumerate(toks))

    lineno, toks = lines[2]
    if len(toks) != n:
        raise ParseError(f"expected {n} column degrees, got {len(toks)}", lineno)
    col_deg = [_int_token(t, lineno, i + 1, "degree") for i, t in enumerate(toks)]

    lineno, toks = lines[3]
    if len(toks) != m:
        raise ParseError(f"expected {m} row degrees, got {len(toks)}", lineno)
    row_deg = [_int_token(t, lineno, i + 1, "degree") for i, t in enumerate(toks)]

    body = lines[4:]
    if len(body) != n:
        last = body[-1][0] if body else lines[3][0]
        raise ParseError(f"expected {n} column lines, got {len(body)}", last)

    entries = []
    seen = set()
    counted_rows = [0] * m
    for col, (lineno, toks) in enumerate(body):
        if toks == [EMPTY_COLUMN]:
            toks = []
        if len(toks) != col_deg[col]:
            raise ParseError(f"column {col + 1} declares degree {col_deg[col]} "
                             f"but lists {len(toks)} entries", lineno)
        for i, tok in enumerate(toks, start=1):
            row_text, sep, coeff_text = tok.partition(':')
            if not sep:
                raise ParseError(f"expected 'row:coeff', got {tok!r}", lineno, i)
            row = _int_token(row_text, lineno, i, "row")
            coeff = _int_token(coeff_text, lineno, i, "coefficient")
            if not 1 <= row <= m:
                raise ParseError(f"row {row} outside 1..{m}", lineno, i)
            if coeff >= g:
                raise FieldMismatch(coeff, g, lineno)
            if coeff < 1:
                raise ParseError("coefficients must be nonzero", lineno, i)
            if (row, col) in seen:
                raise ParseError(f"duplicate entry for row {row}", lineno, i)
            seen.add((row, col))
            counted_rows[row - 1] += 1
            entries.append((row - 1, col, coeff))

    for r in range(m):
        if counted_rows[r] == 0:
            raise ParseError(f"row {r + 1} is empty", lines[3][0], r + 1)
        if counted_rows[r] != row_deg[r]:
            raise ParseError(f"row {r + 1} declares degree {row_deg[r]} "
                             f"but has {counted_rows[r]} entries", lines[3][0], r + 1)
    if max(col_deg, default=0) != dv_max or max(row_deg, default=0) != dc_max:
        raise ParseError("maximum degrees do not match the degree lists", lines[1][0])

    return ParityCheckMatrix(m=m, n=n, field=field, entries=tuple(entries))


def format_code(pcm):
    field = pcm.field
    header = f"{pcm.n} {pcm.m} {field.g}"
    if field.poly != gf.DEFAULT_POLYS[field.q]:
        header += f" {field.poly}"
    col_deg = pcm.col_degrees
    row_deg = pcm.row_degrees

    per_col = [[] for _ in range(pcm.n)]
    for r, c, h in pcm.entries:
        per_col[c].append(f"{r + 1}:{h}")

    out = [header,
           f"{int(col_deg.max(initial=0))} {int(row_deg.max(initial=0))}",
           " ".join(str(int(d)) for d in col_deg),
           " ".join(str(int(d)) for d in row_deg)]
    out.extend(" ".join(col) or EMPTY_COLUMN for col in per_col)
    return "\n".join(out) + "\n"


def load_code(path):
    with open(path, 'r') as f:
        return parse_code(f.read())


def save_code(pcm, path):
    with open(path, 'w') as f:
        f.write(format_code(pcm))


# --- syndrome and encoding ---

def check_codeword(field, symbols, n, what="codeword"):
    word = np.asarray(symbols, dtype=np.int64)
    if word.shape != (n,):
        raise LengthMismatch(what, n, word.size)
    bad = (word < 0) | (word >= field.g)
    if bad.any():
        raise FieldMismatch(int(word[bad][0]), field.g)
    return word


def syndrome(pcm, codeword):
    """Returns (s, is_zero) with s_m = XOR over n of h_{m,n} * c_n."""
    word = check_codeword(pcm.field, codeword, pcm.n)
    rows, cols, coeffs = pcm.arrays
    s = np.zeros(pcm.m, dtype=np.int64)
    np.bitwise_xor.at(s, rows, pcm.field.mul_table[coeffs, word[cols]])
    return s, not s.any()


def graph_syndrome(graph, codeword):
    """Syndrome evaluated over the Tanner graph edges; same result as syndrome()."""
    word = np.asarray(codeword, dtype=np.int64)
    s = np.zeros(graph.m, dtype=np.int64)
    np.bitwise_xor.at(s, graph.edge_cn, graph.field.mul_table[graph.edge_h, word[graph.edge_vn]])
    return s, not s.any()


class SystematicEncoder:
    """Gaussian elimination of H to reduced row echelon form. Information symbols sit at
    the non-pivot columns, each pivot column is the XOR of its row's products.
    """

    def __init__(self, pcm):
        self.pcm = pcm
        field = pcm.field
        mul, inv = field.mul_table, field.inv_table
        h = pcm.dense()

        pivots = []
        rank = 0
        for col in range(pcm.n):
            if rank == pcm.m:
                break
            nonzero = np.flatnonzero(h[rank:, col])
            if nonzero.size == 0:
                continue
            r = rank + nonzero[0]
            h[[rank, r]] = h[[r, rank]]
            h[rank] = mul[inv[h[rank, col]], h[rank]]
            for i in np.flatnonzero(h[:, col]):
                if i != rank:
                    h[i] ^= mul[h[i, col], h[rank]]
            pivots.append(col)
            rank += 1

        self.rank = rank
        self.pivot_cols = np.array(pivots, dtype=np.int64)
        self.info_cols = np.setdiff1d(np.arange(pcm.n), self.pivot_cols)
        self.k = pcm.n - rank
        self._parity_rows = h[:rank][:, self.info_cols]

        if rank < pcm.m:
            warnings.warn(RankDeficient(rank, pcm.m, pcm.n), stacklevel=2)

    def encode(self, message):
        msg = check_codeword(self.pcm.field, message, self.k, what="message")
        word = np.zeros(self.pcm.n, dtype=np.int64)
        word[self.info_cols] = msg
        if self.rank:
            products = self.pcm.field.mul_table[self._parity_rows, msg[None, :]]
            word[self.pivot_cols] = np.bitwise_xor.reduce(products, axis=1)
        return word

    def extract_message(self, codeword):
        return np.asarray(codeword, dtype=np.int64)[self.info_cols]


def encode_systematic(pcm, message):
    return SystematicEncoder(pcm).encode(message)


def enumerate_codewords(pcm, encoder=None):
    encoder = encoder or SystematicEncoder(pcm)
    if encoder.k * pcm.field.q > CODEBOOK_MAX_BITS:
        raise InvalidConfig(f"codebook of {encoder.k * pcm.field.q} bits is too large to enumerate")
    messages = itertools.product(range(pcm.field.g), repeat=encoder.k)
    return np.array([encoder.encode(msg) for msg in messages], dtype=np.int64)


def ml_decode(codebook, probabilities):
    """Codeword maximising the summed log symbol probabilities (first on ties)."""
    logp = np.log(np.maximum(np.asarray(probabilities, dtype=np.float64), PROB_FLOOR))
    scores = logp[np.arange(codebook.shape[1])[None, :], codebook].sum(axis=1)
    return codebook[int(np.argmax(scores))]
