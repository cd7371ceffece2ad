import random

import pytest
from gmpy2 import mpc, mpfr
from hypothesis import assume, given
from hypothesis import strategies as st

from holorecon import PrecisionComplex
from holorecon.directions import from_points, gen_kappa, gen_square_net_sequence, gen_theta
from holorecon.divided_differences import (
    BOUNDED,
    GROWING,
    INCONCLUSIVE,
    PhiPower,
    classify,
    criterion_matrix,
    delta_closed_form,
    delta_recursive,
    delta_table,
    growth_exponent,
    lagrange_interpolant,
    row_roots,
)
from holorecon.errors import DuplicateNode, PrecisionFailure
from holorecon.numerics import working_precision

# |Delta_p[phi^q]| on the first p+1 theta nodes, from an independent mpmath
# implementation of the two-point recursion at 256 bits
THETA_DELTAS = {
    (3, 2): ("0.0077291205436127072601731669511", "0.31962683618030656500023485572"),
    (6, 1): ("115.769353157930978592497838799", "-15.8587518469553368177339686249"),
    (8, 3): ("27.2476491059606780955720786452", "-27.7374427900587764126316559521"),
}
KAPPA_DELTA_5_2 = "0.000334640469503344682777132848531"


def square(z):
    return z * z


def ident(z):
    return z


def near(a, b, rel=1e-28):
    a, b = complex(a), complex(b)
    return abs(a - b) <= rel * max(1.0, abs(b))


class TestDelta:
    def test_order_zero_is_value(self):
        for engine in (delta_recursive, delta_closed_form):
            assert engine(square, [mpc(3)], 0) == PrecisionComplex(9)

    def test_slope_of_identity(self):
        assert delta_recursive(ident, [0, 1], 1) == PrecisionComplex(1)

    def test_phi_slope(self):
        assert delta_closed_form(PhiPower(1), [0, 1], 1) == PrecisionComplex(mpfr("0.5"))

    def test_second_difference_of_square(self):
        assert delta_recursive(square, [0, 1, 2], 2) == PrecisionComplex(1)
        assert delta_closed_form(square, [0, 1, 2], 2) == PrecisionComplex(1)

    def test_two_point_expansion(self):
        a, b = mpc("0.3+1j"), mpc("-2+0.5j")
        h = PhiPower(2)
        with working_precision(256):
            want = h(a) / (a - b) + h(b) / (b - a)
        assert near(delta_closed_form(h, [a, b], 1), want, 1e-60)

    @pytest.mark.parametrize("pq", sorted(THETA_DELTAS))
    def test_theta_frozen(self, pq):
        p, q = pq
        nodes = gen_theta(p + 1, 256).values
        re, im = THETA_DELTAS[pq]
        with working_precision(256):
            want = mpc(mpfr(re), mpfr(im))
            for engine in (delta_recursive, delta_closed_form):
                assert abs(engine(PhiPower(q), nodes, p, 256).value - want) < mpfr("1e-28") * abs(want)

    def test_kappa_frozen(self):
        got = delta_closed_form(PhiPower(2), gen_kappa(6, 256).values, 5)
        assert abs(got.value - mpfr(KAPPA_DELTA_5_2, 256)) < mpfr("1e-32")

    def test_duplicate_nodes(self):
        with pytest.raises(DuplicateNode):
            delta_recursive(ident, [1, 1], 1)

    def test_too_few_nodes(self):
        with pytest.raises(ValueError):
            delta_closed_form(ident, [1, 2], 3)

    @given(st.lists(st.complex_numbers(max_magnitude=4, allow_nan=False), min_size=1, max_size=9), st.integers(0, 6))
    def test_engines_agree(self, pts, q):
        assume(all(abs(a - b) > 1e-2 for i, a in enumerate(pts) for b in pts[:i]))
        p = len(pts) - 1
        a = delta_recursive(PhiPower(q), pts, p, 256).value
        b = delta_closed_form(PhiPower(q), pts, p, 256).value
        with working_precision(256):
            assert abs(a - b) <= mpfr(2) ** -150 * max(1, abs(a))

    @given(st.permutations(range(6)))
    def test_symmetric_in_nodes(self, order):
        nodes = list(gen_theta(6, 256).values)
        shuffled = [nodes[i] for i in order]
        a = delta_closed_form(PhiPower(2), nodes, 5).value
        b = delta_closed_form(PhiPower(2), shuffled, 5).value
        with working_precision(256):
            assert abs(a - b) <= mpfr(2) ** -200 * max(1, abs(a))

    @given(st.integers(1, 8), st.integers(0, 7))
    def test_polynomial_of_lower_degree_vanishes(self, p, d):
        assume(d < p)
        nodes = gen_kappa(p + 1, 256).values
        val = delta_closed_form(lambda z: z ** d, nodes, p).value
        assert abs(val) < mpfr(2) ** -200


def test_delta_table_dual_precision():
    t = delta_table(PhiPower(1), gen_theta(13, 256), 12)
    assert t.precision_pair == (256, 512)
    assert t.max_discrepancy < 2 ** -64
    assert t.engine_discrepancy < 2 ** -64
    assert len(t.values) == 13


class TestInterpolant:
    def test_constant(self):
        poly = lagrange_interpolant(lambda z: mpc(5), gen_theta(4).values, 4)
        assert near(poly(mpc("0.7-0.1j")), 5, 1e-60)

    def test_reproduces_nodes_and_forms_agree(self):
        nodes = gen_kappa(6, 256).values
        poly = lagrange_interpolant(PhiPower(3), nodes, 6)
        for z in nodes:
            with working_precision(256):
                want = PhiPower(3)(z)
            assert near(poly.lagrange(z), want, 1e-50)
        z = mpc("0.4+0.9j")
        assert near(poly.lagrange(z), poly.newton(z), 1e-40)
        assert poly.degree_bound == 5

    def test_monomial_coefficients_of_quadratic(self):
        poly = lagrange_interpolant(lambda z: 2 * z * z - 3 * z + 1, [0, 1, 2], 3)
        c = [complex(x) for x in poly.monomial_coefficients()]
        assert all(abs(a - b) < 1e-60 for a, b in zip(c, [1, -3, 2]))


class TestCriterion:
    def test_q_zero_column(self):
        rep = criterion_matrix(gen_kappa(9, 256), 8, 3)
        assert rep.entry(0, 0) == 1
        assert all(rep.entry(p, 0) == 0 for p in range(1, 9))

    def test_theta_grows(self):
        rep = criterion_matrix(gen_theta(25, 256), 24, 8)
        assert rep.verdict == GROWING
        assert rep.exceeding(2)
        assert rep.dual_precision_max_discrepancy < 2 ** -64

    def test_square_net_bounded(self):
        rep = criterion_matrix(gen_square_net_sequence(41, 256), 40, 8)
        assert rep.verdict == BOUNDED
        assert not rep.exceeding(4)

    def test_kappa_bounded(self):
        rep = criterion_matrix(gen_kappa(41, 256), 40, 8)
        assert rep.verdict == BOUNDED
        assert float(rep.R_hat) < 1

    def test_precision_cap(self):
        with pytest.raises(PrecisionFailure):
            criterion_matrix(gen_theta(41, 64), 40, 8, precision_bits=64, max_bits=128)

    def test_report_json(self):
        js = criterion_matrix(gen_theta(6, 128), 5, 2).to_json()
        assert js["P"] == 5 and js["Q"] == 2
        assert len(js["entries"]) == 6 and len(js["entries"][0]) == 3


class TestClassifier:
    @staticmethod
    def synthetic(P, Q, rho):
        return [[mpfr(rho(p)) ** (p + q) if p + q else mpfr(1) for q in range(Q + 1)] for p in range(P + 1)]

    def test_geometric_is_bounded(self):
        entries = self.synthetic(24, 4, lambda p: 3)
        assert classify(entries, 24)[-1] == BOUNDED

    def test_factorial_like_grows(self):
        entries = self.synthetic(24, 4, lambda p: max(p, 1))
        assert classify(entries, 24)[-1] == GROWING

    def test_middle_is_inconclusive(self):
        entries = self.synthetic(24, 4, lambda p: max(p, 1) ** 0.6)
        assert classify(entries, 24)[-1] == INCONCLUSIVE

    def test_growth_exponent_of_power(self):
        entries = self.synthetic(40, 4, lambda p: max(p, 1) ** 1.5)
        beta = growth_exponent(row_roots(entries), 40)
        assert abs(beta - 1.5) < 1e-9


def test_random_node_sets_small_sample():
    rng = random.Random(3)
    for _ in range(20):
        p = rng.randint(1, 10)
        pts = from_points([complex(rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(p + 1)], 256).values
        a = delta_recursive(PhiPower(2), pts, p).value
        b = delta_closed_form(PhiPower(2), pts, p).value
        with working_precision(256):
            assert abs(a - b) <= mpfr(2) ** -150 * max(1, abs(a))
