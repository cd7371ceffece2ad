from fractions import Fraction

import gmpy2
import pytest
from gmpy2 import mpc, mpfr
from hypothesis import given
from hypothesis import strategies as st

from holorecon import PrecisionComplex
from holorecon.errors import TruncationUnavailable
from holorecon.numerics import (
    ExpLinear,
    ExpProduct,
    Polynomial,
    builtin_catalog,
    decimal_string,
    default_precision,
    eval_taylor,
    from_description,
    ipow,
    line_derivative_sum,
    monomial,
    phi_kernel,
    relative_discrepancy,
    to_mpc,
    working_precision,
)

# e^2 to 40 digits, from an independent mpmath evaluation
E_SQUARED = "7.389056098930650227230427460575007813180"


def close(a, b, tol):
    return abs(complex(a) - complex(b)) <= tol


class TestPrecisionComplex:
    def test_strings_round_trip(self):
        z = PrecisionComplex.from_strings("0.1", "-2.5", 256)
        back = PrecisionComplex.from_strings(*z.to_strings(), 256)
        assert back == z

    def test_arithmetic_keeps_precision(self):
        a = PrecisionComplex(1, precision_bits=128)
        b = PrecisionComplex(mpc(0, 1), precision_bits=128)
        assert (a + b).precision_bits == 128
        assert (a * b) ** 2 == PrecisionComplex(-1, precision_bits=128)

    def test_real_int_is_not_imaginary_part(self):
        # mpc(x, bits) would read bits as the imaginary part
        assert to_mpc(2, 256).imag == 0

    def test_default_precision_env(self, monkeypatch):
        monkeypatch.setenv("HOLORECON_PRECISION_BITS", "192")
        assert default_precision() == 192
        monkeypatch.delenv("HOLORECON_PRECISION_BITS")
        assert default_precision() == 256

    def test_decimal_string_is_plain(self):
        s = decimal_string(mpfr("0.5"))
        assert s == "0.5"


class TestPhiKernel:
    def test_zero(self):
        assert phi_kernel(PrecisionComplex(0), 1) == 0

    def test_one(self):
        assert phi_kernel(PrecisionComplex(1), 1) == PrecisionComplex(mpfr("0.5"))

    def test_i_squared(self):
        v = phi_kernel(PrecisionComplex(mpc(0, 1)), 2)
        assert close(v, -0.25, 1e-60)

    @given(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False), st.integers(0, 12))
    def test_modulus_at_most_half_to_q(self, z, q):
        # |phi| = |z|/(1+|z|^2) <= 1/2
        v = phi_kernel(PrecisionComplex(z), q)
        assert abs(v) <= mpfr(0.5) ** q * (1 + mpfr(2) ** -200)


@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), st.integers(0, 40))
def test_ipow_matches_repeated_product(z, n):
    with working_precision(256):
        w = to_mpc(z, 256)
        ref = mpc(1)
        for _ in range(n):
            ref *= w
        assert abs(ipow(w, n) - ref) <= abs(ref) * mpfr(2) ** -240


class TestTaylorEvaluation:
    def test_monomial(self):
        assert eval_taylor(monomial(1, 1), (2, 3)) == PrecisionComplex(6)

    def test_exp_at_origin(self):
        assert eval_taylor(ExpLinear(1, 1), (0, 0), M=30) == PrecisionComplex(1)

    def test_exp_at_one_one(self):
        v = eval_taylor(ExpLinear(1, 1), (1, 1), M=30)
        assert abs(v.value - mpfr(E_SQUARED)) < 1e-12

    def test_infinite_series_needs_truncation(self):
        with pytest.raises(TruncationUnavailable):
            eval_taylor(ExpLinear(1, 1), (1, 1))

    def test_tail_bound_majorizes_truncation_error(self):
        f = ExpLinear(1, 1)
        for M in (5, 10, 20):
            err = abs(eval_taylor(f, (1, 1), M=M).value - f.exact(mpc(1), mpc(1)))
            assert err <= f.tail_bound(1, M + 1)


class TestLineDerivativeSum:
    def test_z2(self):
        assert line_derivative_sum(monomial(0, 1), PrecisionComplex(7), 1) == PrecisionComplex(1)

    def test_z1_squared(self):
        assert line_derivative_sum(monomial(2, 0), PrecisionComplex(2), 2) == PrecisionComplex(4)

    def test_exp_third_order(self):
        v = line_derivative_sum(ExpLinear(1, 1), PrecisionComplex(1), 3)
        with working_precision(256):
            assert abs(v.value - mpfr(4) / 3) < mpfr(2) ** -240

    def test_beyond_degree_is_zero(self):
        assert line_derivative_sum(monomial(1, 1), PrecisionComplex(3), 5) == 0


class TestCatalog:
    def test_builtin_round_trip(self):
        for f in builtin_catalog():
            g = from_description(f.describe())
            assert g.describe() == f.describe()
            assert g.coeff(2, 1) == f.coeff(2, 1)

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            from_description({"name": "nope"})

    def test_exp_product_is_diagonal(self):
        f = ExpProduct(1)
        assert f.coeff(2, 1) == 0
        assert f.coeff(3, 3) == mpc(mpfr(1) / 6)

    def test_polynomial_exact_matches_series(self):
        P = Polynomial({(0, 0): 1, (2, 1): Fraction(-1, 2), (0, 3): (0, 1)})
        z = (mpc("0.3+0.2j"), mpc("-1.1+0.5j"))
        with working_precision(256):
            assert abs(P.exact(*z) - eval_taylor(P, z).value) < mpfr(2) ** -240


def test_relative_discrepancy_zero_pair():
    assert relative_discrepancy(mpc(0), mpc(0)) == 0


def test_working_precision_restores():
    before = gmpy2.get_context().precision
    with working_precision(512):
        assert gmpy2.get_context().precision == 512
    assert gmpy2.get_context().precision == before
