"""GF(2^q) arithmetic for q = 2..8 on eagerly built exp/log tables.

Symbols are held as polynomial-basis integers (bit i is the coefficient of x^i), so field
addition is XOR. Power notation ("a^k") is only used when printing or parsing.
"""
import re
from dataclasses import dataclass, field as dc_field

import numpy as np

from errors import GFDivisionByZero, NonPrimitivePolynomial, UnsupportedQ

Q_MIN = 2
Q_MAX = 8

# Minimal-weight primitive polynomials, bit i = coefficient of x^i.
DEFAULT_POLYS = {
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10000011,
    8: 0b100011101,
}

# A field element, as a polynomial-basis integer in [0, g).
GFSymbol = int

POWER_RE = re.compile(r'^(?:a|α)(?:\^\(?(\d+)\)?)?$')


@dataclass(frozen=True, eq=False)
class FieldSpec:
    q: int
    poly: int
    exp_table: np.ndarray = dc_field(repr=False)
    log_table: np.ndarray = dc_field(repr=False)
    mul_table: np.ndarray = dc_field(repr=False)
    inv_table: np.ndarray = dc_field(repr=False)

    @property
    def g(self):
        return 1 << self.q

    def __eq__(self, other):
        if not isinstance(other, FieldSpec):
            return NotImplemented
        return self.q == other.q and self.poly == other.poly

    def __hash__(self):
        return hash((self.q, self.poly))

    def __reduce__(self):
        # Rebuild from (q, poly) instead of shipping the tables to worker processes.
        return (build_field, (self.q, self.poly))

    def contains(self, x):
        return 0 <= int(x) < self.g

    def add(self, a, b):
        return gf_add(a, b)

    def mul(self, a, b):
        return gf_mul(self, a, b)

    def inv(self, a):
        return gf_inv(self, a)


def build_field(q, poly=None):
    if not Q_MIN <= q <= Q_MAX:
        raise UnsupportedQ(q)
    if poly is None:
        poly = DEFAULT_POLYS[q]
    if poly.bit_length() - 1 != q:
        raise NonPrimitivePolynomial(poly, q)

    g = 1 << q
    exp_table = np.zeros(g - 1, dtype=np.int64)
    log_table = np.zeros(g, dtype=np.int64)
    seen = np.zeros(g, dtype=bool)

    x = 1
    for i in range(g - 1):
        if x == 0 or seen[x]:
            raise NonPrimitivePolynomial(poly, q, period=i)
        seen[x] = True
        exp_table[i] = x
        log_table[x] = i
        x <<= 1
        if x & g:
            x ^= poly
    if x != 1:
        # alpha^(g-1) must close the cycle
        raise NonPrimitivePolynomial(poly, q)

    logs = log_table[1:]
    mul_table = np.zeros((g, g), dtype=np.int64)
    mul_table[1:, 1:] = exp_table[(logs[:, None] + logs[None, :]) % (g - 1)]

    inv_table = np.zeros(g, dtype=np.int64)
    inv_table[1:] = exp_table[(-logs) % (g - 1)]

    for table in (exp_table, log_table, mul_table, inv_table):
        table.setflags(write=False)

    return FieldSpec(q=q, poly=poly, exp_table=exp_table, log_table=log_table,
                     mul_table=mul_table, inv_table=inv_table)


def gf_add(a, b):
    return int(a) ^ int(b)


def gf_mul(field, a, b):
    return int(field.mul_table[a, b])


def gf_inv(field, a):
    if a == 0:
        raise GFDivisionByZero()
    return int(field.inv_table[a])


def gf_pow(field, k):
    """alpha^k for any integer k."""
    return int(field.exp_table[k % (field.g - 1)])


def format_symbol(field, x):
    """Power notation used in print-outs: 0, 1, a, a^2, ..."""
    x = int(x)
    if x == 0:
        return "0"
    e = int(field.log_table[x])
    if e == 0:
        return "1"
    if e == 1:
        return "a"
    return f"a^{e}"


def parse_symbol(field, text):
    text = text.strip()
    if text == "0":
        return 0
    if text == "1":
        return 1
    m = POWER_RE.match(text)
    if not m:
        raise ValueError(f"not a field element in power notation: {text!r}")
    e = int(m.group(1)) if m.group(1) else 1
    return gf_pow(field, e)
