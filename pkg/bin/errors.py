"""Exception hierarchy shared by every nbldpc module.

InputError subclasses map to CLI exit code 2, EngineError subclasses to exit code 3.
"""


class NBLDPCError(Exception):
    exit_code = 1


class InputError(NBLDPCError):
    exit_code = 2


class EngineError(NBLDPCError):
    exit_code = 3


# --- gf ---

class UnsupportedQ(InputError):
    def __init__(self, q):
        super().__init__(f"GF(2^{q}) is not supported, q must be in [2, 8]")
        self.q = q


class NonPrimitivePolynomial(InputError):
    def __init__(self, poly, q, period=None):
        detail = f" (alpha has order {period})" if period else ""
        super().__init__(f"polynomial {poly:#b} is not primitive for q={q}{detail}")
        self.poly = poly
        self.q = q
        self.period = period


class GFDivisionByZero(InputError, ZeroDivisionError):
    def __init__(self):
        super().__init__("0 has no multiplicative inverse")


# --- code ---

class ParseError(InputError):
    def __init__(self, message, line=None, column=None):
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(f"{where}{message}")
        self.line = line
        self.column = column


class FieldMismatch(InputError):
    def __init__(self, value, g, line=None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"symbol {value} is outside GF({g}){where}")
        self.value = value
        self.g = g
        self.line = line


class InfeasibleDegrees(InputError):
    def __init__(self, n, m, dc, dv):
        super().__init__(
            f"no regular code with N={n}, M={m}, d_c={dc}, d_v={dv}: "
            f"N*d_v={n * dv} != M*d_c={m * dc} or degrees exceed the matrix size")
        self.params = (n, m, dc, dv)


class LengthMismatch(InputError):
    def __init__(self, what, expected, got):
        super().__init__(f"{what}: expected length {expected}, got {got}")
        self.expected = expected
        self.got = got


class RankDeficient(UserWarning):
    def __init__(self, rank, m, n):
        super().__init__(f"parity-check matrix has rank {rank} < M={m}; encoder uses K={n - rank}")
        self.rank = rank


class CodeConstructionError(EngineError):
    pass


class InvalidGraph(EngineError):
    pass


# --- channel ---

class InvalidRate(InputError):
    def __init__(self, rate):
        super().__init__(f"code rate must lie in (0, 1], got {rate}")
        self.rate = rate


# --- decoders / perf / cli ---

class InvalidConfig(InputError):
    pass


class ConfigError(InputError):
    pass


class CountersDisabled(EngineError):
    def __init__(self):
        super().__init__("decode ran without counters_enabled; no operation counts recorded")
