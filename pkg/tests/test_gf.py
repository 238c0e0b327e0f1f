import sys
import os
import pickle
import pytest

# Allow importing from bin/
sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'bin'))
import gf
from errors import GFDivisionByZero, InputError, NonPrimitivePolynomial, UnsupportedQ


class TestBuildField:
    @pytest.mark.parametrize("q", range(2, 9))
    def test_default_polynomials_are_primitive(self, q):
        field = gf.build_field(q)
        assert field.g == 1 << q
        assert sorted(field.exp_table.tolist()) == list(range(1, field.g))

    @pytest.mark.parametrize("q", range(2, 9))
    def test_exp_log_round_trip(self, q):
        field = gf.build_field(q)
        for x in range(1, field.g):
            assert field.exp_table[field.log_table[x]] == x
        for e in range(field.g - 1):
            assert field.log_table[field.exp_table[e]] == e

    @pytest.mark.parametrize("q", [0, 1, 9, 16])
    def test_unsupported_q(self, q):
        with pytest.raises(UnsupportedQ):
            gf.build_field(q)

    def test_non_primitive_polynomial(self):
        # x^4+x^3+x^2+x+1 divides x^5-1, so alpha has order 5
        with pytest.raises(NonPrimitivePolynomial) as info:
            gf.build_field(4, 0b11111)
        assert info.value.period == 5

    def test_reducible_polynomial(self):
        with pytest.raises(NonPrimitivePolynomial):
            gf.build_field(3, 0b1001)

    def test_wrong_degree(self):
        with pytest.raises(NonPrimitivePolynomial):
            gf.build_field(4, 0b1011)

    def test_errors_are_input_errors(self):
        with pytest.raises(InputError):
            gf.build_field(9)

    def test_alternative_primitive_polynomial(self):
        # x^4+x^3+1 is primitive as well
        field = gf.build_field(4, 0b11001)
        assert field != gf.build_field(4)
        assert field.poly == 0b11001


class TestArithmetic:
    def test_gf4_by_hand(self):
        field = gf.build_field(2)
        a, a2 = 2, 3
        assert gf.gf_mul(field, a, a) == a2      # a^2 = a + 1
        assert gf.gf_mul(field, a, a2) == 1      # a^3 = 1
        assert gf.gf_inv(field, a) == a2
        assert gf.gf_add(a, a2) == 1

    @pytest.mark.parametrize("q", [2, 3, 4])
    def test_field_axioms_exhaustive(self, q):
        field = gf.build_field(q)
        mul = field.mul_table
        g = field.g
        for a in range(g):
            assert mul[a, 1] == a
            assert mul[a, 0] == 0
            if a:
                assert mul[a, field.inv_table[a]] == 1
            for b in range(g):
                assert mul[a, b] == mul[b, a]
                for c in range(g):
                    assert mul[mul[a, b], c] == mul[a, mul[b, c]]
                    assert mul[a, b ^ c] == mul[a, b] ^ mul[a, c]

    def test_inverse_of_zero(self):
        field = gf.build_field(3)
        with pytest.raises(GFDivisionByZero):
            gf.gf_inv(field, 0)
        with pytest.raises(ZeroDivisionError):
            field.inv(0)

    def test_tables_are_read_only(self):
        field = gf.build_field(3)
        with pytest.raises(ValueError):
            field.mul_table[1, 1] = 0

    def test_pow_wraps_around(self):
        field = gf.build_field(3)
        assert gf.gf_pow(field, 7) == 1
        assert gf.gf_pow(field, -1) == gf.gf_inv(field, 2)


class TestSymbolNotation:
    def test_format_gf4(self):
        field = gf.build_field(2)
        assert [gf.format_symbol(field, x) for x in range(4)] == ["0", "1", "a", "a^2"]

    @pytest.mark.parametrize("q", [2, 5, 8])
    def test_parse_inverts_format(self, q):
        field = gf.build_field(q)
        for x in range(field.g):
            assert gf.parse_symbol(field, gf.format_symbol(field, x)) == x

    def test_parse_alpha_spelling(self):
        field = gf.build_field(2)
        assert gf.parse_symbol(field, "α^2") == 3
        with pytest.raises(ValueError):
            gf.parse_symbol(field, "b^2")


class TestFieldIdentity:
    def test_equality_by_q_and_poly(self):
        assert gf.build_field(5) == gf.build_field(5)
        assert hash(gf.build_field(5)) == hash(gf.build_field(5))
        assert gf.build_field(5) != gf.build_field(6)

    def test_pickle_rebuilds_tables(self):
        field = gf.build_field(6)
        clone = pickle.loads(pickle.dumps(field))
        assert clone == field
        assert (clone.mul_table == field.mul_table).all()
