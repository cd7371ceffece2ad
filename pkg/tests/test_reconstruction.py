import random

import pytest
from gmpy2 import mpc, mpfr
from hypothesis import given, settings
from hypothesis import strategies as st

from holorecon import PrecisionComplex
from holorecon.directions import from_points, gen_kappa, gen_square_net_sequence, gen_theta
from holorecon.errors import DuplicateNode, IdentityViolation
from holorecon.numerics import ExpLinear, ExpProduct, Polynomial, monomial, random_polynomial, working_precision
from holorecon.reconstruction import (
    DECREASING,
    NOT_DECREASING,
    Polydisc,
    ReconstructionRequest,
    classify_curve,
    convergence_experiment,
    eval_EN,
    eval_RN,
    eval_tail,
    remainder_curve,
    verify_identity,
)

E_SQUARED = "7.389056098930650227230427460575007813180"
BITS = 256


def request(f, seq, N, pts, M=None):
    return ReconstructionRequest(f, seq, N, pts, M, BITS)


def one(values):
    (v,) = values
    return v.value


class TestEN:
    def test_constant_function(self):
        seq = from_points(["0.3+2j"], BITS)
        v = one(eval_EN(request(monomial(0, 0), seq, 1, [(mpc("1.5"), mpc("-2j"))])).values)
        assert abs(v - 1) < mpfr(2) ** -240

    def test_linear_function(self):
        seq = from_points([0, 1], BITS)
        v = one(eval_EN(request(monomial(1, 0), seq, 2, [(mpc(2), mpc(5))])).values)
        assert abs(v - 2) < mpfr(2) ** -240

    @pytest.mark.parametrize("t", ["0.3", "1.7"])
    def test_matches_on_a_line(self, t):
        seq = from_points([0, 1, 1j], BITS)
        f = ExpLinear(1, 1)
        with working_precision(BITS):
            tt = mpfr(t)
            z = (seq.values[1] * tt, mpc(tt))
            want = f.exact(*z)
        ev = eval_EN(request(f, seq, 3, [z], M=80))
        assert abs(one(ev.values) - want) <= ev.truncation[0] + mpfr(2) ** -200

    @settings(max_examples=15)
    @given(st.integers(0, 10_000), st.sampled_from(["theta", "kappa", "square"]))
    def test_polynomial_exactness(self, seed, family):
        rng = random.Random(seed)
        N = rng.randint(1, 6)
        P = random_polynomial(rng, N - 1)
        seq = {"theta": gen_theta, "kappa": gen_kappa, "square": gen_square_net_sequence}[family](N, BITS)
        grid = Polydisc(1, 1, 4).grid(BITS)
        vals = eval_EN(request(P, seq, N, grid)).values
        with working_precision(BITS):
            for (a, b), e in zip(grid, vals):
                assert abs(e.value - P.exact(a, b)) < mpfr("1e-60")

    def test_validation(self):
        seq = gen_theta(3)
        with pytest.raises(ValueError):
            request(monomial(0, 0), seq, 4, [])
        with pytest.raises(ValueError):
            request(ExpLinear(), seq, 3, [], M=2)

    def test_colliding_nodes(self):
        seq = from_points(["1", "1.00000000000000000000000000000000000000000000000000000000000001"], BITS)
        with pytest.raises(DuplicateNode):
            eval_EN(request(monomial(1, 1), seq, 2, [(mpc(0), mpc(1))]))


class TestRN:
    def test_low_degree_polynomial_gives_zero(self):
        seq = gen_kappa(4, BITS)
        P = Polynomial({(1, 1): 2, (0, 2): (0, 1), (0, 0): -1})
        vals = eval_RN(request(P, seq, 3, Polydisc(1, 1, 4).grid(BITS))).values
        assert all(v.value == 0 for v in vals)

    def test_single_line(self):
        seq = from_points([0], BITS)
        v = one(eval_RN(request(monomial(0, 2), seq, 1, [(mpc(0), mpc(1))], M=2)).values)
        assert abs(v - 1) < mpfr(2) ** -240


class TestTail:
    def test_full_exponential_series(self):
        v, bound = eval_tail(ExpLinear(1, 1), 0, (mpc(1), mpc(1)), 40, BITS)
        with working_precision(BITS):
            assert abs(v.value - mpfr(E_SQUARED)) < mpfr("1e-20") + bound

    def test_empty_range(self):
        v, bound = eval_tail(ExpLinear(1, 1), 41, (mpc(1), mpc(1)), 40, BITS)
        assert v == PrecisionComplex(0)
        assert bound > 0

    def test_polynomial_below_N(self):
        v, _ = eval_tail(monomial(2, 1), 4, (mpc(3), mpc(2)), 10, BITS)
        assert v.value == 0


class TestIdentity:
    def test_exp_product_on_kappa(self):
        grid = Polydisc(1, 1, 8).grid(BITS)
        res = verify_identity(request(ExpProduct(1), gen_kappa(6, BITS), 6, grid, M=60))
        assert res.identity_residual < mpfr("1e-20")
        assert res.identity_residual <= res.budget

    def test_polynomial_is_exact(self):
        P = Polynomial({(3, 2): 1, (0, 1): (2, -1)})
        res = verify_identity(request(P, gen_theta(3, BITS), 3, Polydisc(1, 1, 4).grid(BITS)))
        assert res.identity_residual < mpfr(2) ** -200

    def test_smallest_case(self):
        res = verify_identity(request(ExpLinear(1, -1), gen_theta(1, BITS), 1, Polydisc(0.5, 0.5, 4).grid(BITS), M=50))
        assert res.identity_residual < mpfr("1e-20")

    def test_violation_raises(self):
        # an absurd tolerance cannot be met at any precision
        req = request(ExpLinear(1, 1), gen_kappa(3, BITS), 3, Polydisc(1, 1, 2).grid(BITS), M=5)
        with pytest.raises(IdentityViolation):
            verify_identity(req, tolerance=1e-300, max_bits=512)

    def test_json(self):
        res = verify_identity(request(monomial(1, 1), gen_theta(2, BITS), 2, [(mpc(1), mpc(1))]))
        js = res.to_json()
        assert js["precision_bits"] == BITS and len(js["E_values"]) == 1


class TestConvergence:
    def test_kappa_exp_decreasing(self):
        curve = convergence_experiment(ExpLinear(1, 1), gen_kappa(16, BITS), [2, 4, 8, 16], Polydisc(0.5, 0.5, 8))
        assert curve.classification() == DECREASING

    def test_square_net_exp_decreasing(self):
        seq = gen_square_net_sequence(16, BITS)
        curve = convergence_experiment(ExpLinear(1, 1), seq, [2, 4, 8, 16], Polydisc(0.25, 0.25, 8))
        assert curve.classification() == DECREASING

    def test_theta_diverges_on_large_polydisc(self):
        seq = gen_theta(24, BITS)
        curve = convergence_experiment(ExpLinear(1, 1), seq, [2, 4, 8, 16, 24], Polydisc(2, 2, 8))
        assert curve.classification() == NOT_DECREASING

    def test_polynomial_at_roundoff(self):
        P = Polynomial({(2, 1): 1, (0, 0): 3})
        curve = convergence_experiment(P, gen_kappa(8, BITS), [4, 6, 8], Polydisc(1, 1, 4))
        assert max(curve.errors()) < 1e-60

    def test_csv_without_time_is_deterministic(self):
        args = (ExpLinear(1, 1), gen_kappa(4, BITS), [2, 4], Polydisc(0.5, 0.5, 4))
        a = convergence_experiment(*args).to_csv(include_time=False)
        b = convergence_experiment(*args).to_csv(include_time=False)
        assert a == b
        assert a.splitlines()[0] == "N,sup_error,mean_error,precision_bits,M,wall_time_ms"

    def test_remainder_shrinks_for_kappa(self):
        r = remainder_curve(ExpLinear(1, 1), gen_kappa(12, BITS), [2, 6, 12], Polydisc(0.5, 0.5, 4))
        assert r[-1] < r[0]

    def test_classify_curve(self):
        assert classify_curve([1, 0.1, 0.01]) == DECREASING
        assert classify_curve([1, 0.9, 0.8]) == NOT_DECREASING
        assert classify_curve([1, 20, 0.01]) == NOT_DECREASING
