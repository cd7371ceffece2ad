"""Precision-configurable complex scalars and truncated bivariate Taylor models.

Everything numeric in holorecon runs on :mod:`gmpy2` multiprecision values.
Kernels work on raw ``gmpy2.mpc`` objects under an active precision context;
:class:`PrecisionComplex` is the public, precision-tagged scalar.
"""
from __future__ import annotations

import math
import os
from contextlib import contextmanager
from fractions import Fraction
from functools import lru_cache

import gmpy2
from gmpy2 import mpc, mpfr, mpq

from .errors import TruncationUnavailable

MIN_PRECISION = 64
ENV_PRECISION = "HOLORECON_PRECISION_BITS"


def default_precision():
    """Working precision in bits, honouring ``HOLORECON_PRECISION_BITS``."""
    bits = int(os.environ.get(ENV_PRECISION, "256"))
    _check_bits(bits)
    return bits


def _check_bits(bits):
    if int(bits) != bits or bits < MIN_PRECISION:
        raise ValueError(f"precision_bits must be an integer >= {MIN_PRECISION}, got {bits!r}")


@contextmanager
def working_precision(bits=None):
    """Run the body with gmpy2 arithmetic rounded to ``bits`` mantissa bits."""
    bits = default_precision() if bits is None else bits
    _check_bits(bits)
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        yield bits


def current_precision():
    return gmpy2.get_context().precision


def _rational(x):
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return x


def to_mpc(x, bits=None):
    """Convert ``x`` to an ``mpc`` rounded at ``bits`` (default: active context)."""
    if isinstance(x, PrecisionComplex):
        x = x.value
    if bits is None:
        bits = current_precision()
    if isinstance(x, tuple):
        re, im = x
        return mpc(mpfr(_rational(re), bits), mpfr(_rational(im), bits))
    if isinstance(x, str):
        return mpc(x.replace(" ", ""), precision=bits)
    if isinstance(x, (Fraction, type(mpq()))):
        return mpc(mpfr(_rational(x), bits))
    return mpc(x, precision=bits)


def to_mpfr(x, bits=None):
    if bits is None:
        bits = current_precision()
    return mpfr(_rational(x), bits)


def decimal_string(x):
    """Round-trip-exact decimal representation of an ``mpfr``."""
    return str(x)


def mpc_to_strings(z):
    return decimal_string(z.real), decimal_string(z.imag)


class PrecisionComplex:
    """Immutable complex scalar carrying its own mantissa precision.

    Binary operations between operands of different precision are carried
    out (and rounded) at the larger of the two.
    """

    __slots__ = ("_value", "_bits")

    def __init__(self, re=0, im=None, precision_bits=None):
        bits = default_precision() if precision_bits is None else precision_bits
        _check_bits(bits)
        if im is None:
            value = to_mpc(re, bits)
        else:
            value = mpc(to_mpfr(re, bits), to_mpfr(im, bits))
        object.__setattr__(self, "_value", value)
        object.__setattr__(self, "_bits", int(bits))

    def __setattr__(self, name, value):
        raise AttributeError("PrecisionComplex is immutable")

    @classmethod
    def from_mpc(cls, value, precision_bits):
        obj = cls.__new__(cls)
        object.__setattr__(obj, "_value", mpc(value, precision=precision_bits))
        object.__setattr__(obj, "_bits", int(precision_bits))
        return obj

    @classmethod
    def from_strings(cls, re, im, precision_bits):
        return cls(mpfr(re, precision_bits), mpfr(im, precision_bits), precision_bits)

    @property
    def value(self):
        return self._value

    @property
    def precision_bits(self):
        return self._bits

    @property
    def re(self):
        return self._value.real

    @property
    def im(self):
        return self._value.imag

    def with_precision(self, bits):
        return PrecisionComplex.from_mpc(self._value, bits)

    def to_strings(self):
        return mpc_to_strings(self._value)

    def _binary(self, other, op):
        if isinstance(other, PrecisionComplex):
            bits = max(self._bits, other._bits)
            rhs = other._value
        else:
            bits = self._bits
            rhs = other
        with working_precision(bits):
            rhs = to_mpc(rhs)
            return PrecisionComplex.from_mpc(op(self._value, rhs), bits)

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __radd__(self, other):
        return self._binary(other, lambda a, b: b + a)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    def __rmul__(self, other):
        return self._binary(other, lambda a, b: b * a)

    def __truediv__(self, other):
        return self._binary(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binary(other, lambda a, b: b / a)

    def __pow__(self, n):
        with working_precision(self._bits):
            return PrecisionComplex.from_mpc(
                ipow(self._value, n) if isinstance(n, int) and n >= 0 else self._value ** n, self._bits
            )

    def __neg__(self):
        return PrecisionComplex.from_mpc(-self._value, self._bits)

    def conjugate(self):
        return PrecisionComplex.from_mpc(self._value.conjugate(), self._bits)

    def __abs__(self):
        with working_precision(self._bits):
            return abs(self._value)

    def __eq__(self, other):
        if isinstance(other, PrecisionComplex):
            return self._value == other._value
        try:
            return self._value == to_mpc(other, self._bits)
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        return hash((self._value.real, self._value.imag))

    def __complex__(self):
        return complex(self._value)

    def __repr__(self):
        return f"PrecisionComplex({complex(self._value)!r}, bits={self._bits})"


def ipow(z, n):
    """z**n for an integer n >= 0 by repeated squaring.

    gmpy2's mpc ** int can be orders of magnitude slower near the axes.
    """
    out = mpc(1)
    while n:
        if n & 1:
            out = out * z
        n >>= 1
        if n:
            z = z * z
    return out


def phi_kernel(zeta, q):
    """(conj(zeta) / (1 + |zeta|^2))^q; modulus never exceeds 1."""
    bits = zeta.precision_bits if isinstance(zeta, PrecisionComplex) else default_precision()
    with working_precision(bits):
        return PrecisionComplex.from_mpc(phi_raw(to_mpc(zeta), q), bits)


def phi_raw(z, q):
    if q == 0:
        return mpc(1)
    return ipow(z.conjugate() / (1 + gmpy2.norm(z)), q)


# --------------------------------------------------------------------------
# Bivariate Taylor models
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _factorial(n):
    return math.factorial(n)


def _cauchy_tail(norm_bound, x, N):
    # sum_{m>=N} (m+1) x^m, times the Cauchy majorant of |a_{k,l}| R^{k+l}
    if x >= 1:
        return mpfr("inf")
    return norm_bound * x ** N * ((N + 1) - N * x) / (1 - x) ** 2


class BivariateTaylor:
    """Entire function on C^2 given by its Taylor coefficients a_{k,l}.

    Subclasses supply ``coeff_exact`` (a rational or complex-rational
    value, or an ``mpc``) and ``sup_norm_bound``.  ``degree`` is ``None``
    for transcendental functions.
    """

    degree = None
    name = "taylor"

    def params(self):
        return {}

    def describe(self):
        return {"name": self.name, **self.params()}

    def coeff(self, k, l):
        """a_{k,l} as an ``mpc`` at the active precision (cached per precision)."""
        if self.degree is not None and k + l > self.degree:
            return mpc(0)
        cache = self.__dict__.setdefault("_coeff_cache", {})
        key = (k, l, current_precision())
        val = cache.get(key)
        if val is None:
            val = cache[key] = self._coeff(k, l)
        return val

    def _coeff(self, k, l):
        raise NotImplementedError

    def sup_norm_bound(self, R):
        """Upper bound for sup_{|z1|,|z2|<=R} |f|."""
        raise NotImplementedError

    def tail_bound(self, rho, N, R=None):
        """Bound on |sum_{k+l>=N} a_{k,l} z1^k z2^l| for |z1|,|z2| <= rho.

        Cauchy estimates |a_{k,l}| <= ||f||_R / R^{k+l} with R = 8 rho unless
        given.
        """
        rho = to_mpfr(rho)
        if self.degree is not None and N > self.degree:
            return mpfr(0)
        if rho == 0:
            return abs(self.coeff(0, 0)) if N == 0 else mpfr(0)
        R = 8 * rho if R is None else to_mpfr(R)
        return _cauchy_tail(self.sup_norm_bound(R), rho / R, N)

    def exact(self, z1, z2):
        """Closed-form value, or ``None`` when no closed form exists."""
        return None

    def coeff_triangle(self, M):
        """rows[m][k] = a_{k, m-k} for m = 0..M at the active precision."""
        cache = self.__dict__.setdefault("_triangle_cache", {})
        key = (M, current_precision())
        if key not in cache:
            cache[key] = [[self.coeff(k, m - k) for k in range(m + 1)] for m in range(M + 1)]
        return cache[key]

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({inner})"

    def __eq__(self, other):
        return type(self) is type(other) and self.describe() == other.describe()

    def __hash__(self):
        return hash(repr(self))


def _as_qpair(c):
    """Complex rational as a pair of Fractions."""
    if isinstance(c, tuple):
        return Fraction(c[0]), Fraction(c[1])
    if isinstance(c, complex):
        return Fraction(c.real), Fraction(c.imag)
    return Fraction(c), Fraction(0)


def _qpair_mpc(pair):
    re, im = pair
    return mpc(mpfr(mpq(re.numerator, re.denominator)), mpfr(mpq(im.numerator, im.denominator)))


def _qpair_abs_upper(pair):
    re, im = pair
    return abs(re) + abs(im)


def _qpair_str(pair):
    re, im = pair
    return [str(re), str(im)]


class Polynomial(BivariateTaylor):
    """Polynomial with complex-rational coefficients {(k, l): c}."""

    name = "polynomial"

    def __init__(self, coeffs):
        clean = {}
        for (k, l), c in dict(coeffs).items():
            if k < 0 or l < 0:
                raise ValueError("exponents must be nonnegative")
            pair = _as_qpair(c)
            if pair != (0, 0):
                clean[(int(k), int(l))] = pair
        self._coeffs = clean
        self.degree = max((k + l for k, l in clean), default=0)

    def params(self):
        return {"coeffs": [[k, l, *_qpair_str(c)] for (k, l), c in sorted(self._coeffs.items())]}

    def _coeff(self, k, l):
        pair = self._coeffs.get((k, l))
        return mpc(0) if pair is None else _qpair_mpc(pair)

    def terms(self):
        return dict(self._coeffs)

    def sup_norm_bound(self, R):
        R = to_mpfr(R)
        return sum((_qpair_abs_upper(c) * R ** (k + l) for (k, l), c in self._coeffs.items()), mpfr(0))

    def tail_bound(self, rho, N, R=None):
        # exact majorant; the series is finite
        rho = to_mpfr(rho)
        total = mpfr(0)
        for (k, l), c in self._coeffs.items():
            if k + l >= N:
                total += abs(_qpair_mpc(c)) * rho ** (k + l)
        return total

    def exact(self, z1, z2):
        # repeated products; mpc ** int goes through log/exp
        p1, p2 = [mpc(1)], [mpc(1)]
        for _ in range(self.degree):
            p1.append(p1[-1] * z1)
            p2.append(p2[-1] * z2)
        return sum((_qpair_mpc(c) * p1[k] * p2[l] for (k, l), c in self._coeffs.items()), mpc(0))


def monomial(k, l, c=1):
    return Polynomial({(k, l): c})


class ExpLinear(BivariateTaylor):
    """exp(a z1 + b z2), a_{k,l} = a^k b^l / (k! l!)."""

    name = "exp-linear"

    def __init__(self, a=1, b=1):
        self.a = _as_qpair(a)
        self.b = _as_qpair(b)

    def params(self):
        return {"a": _qpair_str(self.a), "b": _qpair_str(self.b)}

    def _coeff(self, k, l):
        return ipow(_qpair_mpc(self.a), k) * ipow(_qpair_mpc(self.b), l) / (_factorial(k) * _factorial(l))

    def sup_norm_bound(self, R):
        s = abs(_qpair_mpc(self.a)) + abs(_qpair_mpc(self.b))
        return gmpy2.exp(s * to_mpfr(R))

    def exact(self, z1, z2):
        return gmpy2.exp(_qpair_mpc(self.a) * z1 + _qpair_mpc(self.b) * z2)


class ExpProduct(BivariateTaylor):
    """exp(c z1 z2), a_{k,k} = c^k / k!."""

    name = "exp-product"

    def __init__(self, c=1):
        self.c = _as_qpair(c)

    def params(self):
        return {"c": _qpair_str(self.c)}

    def _coeff(self, k, l):
        if k != l:
            return mpc(0)
        return ipow(_qpair_mpc(self.c), k) / _factorial(k)

    def sup_norm_bound(self, R):
        return gmpy2.exp(abs(_qpair_mpc(self.c)) * to_mpfr(R) ** 2)

    def exact(self, z1, z2):
        return gmpy2.exp(_qpair_mpc(self.c) * z1 * z2)


def _parse_coeff_spec(spec):
    out = {}
    for item in spec:
        k, l, re, *rest = item
        im = rest[0] if rest else 0
        out[(int(k), int(l))] = (Fraction(re), Fraction(im))
    return out


CATALOG = {
    "polynomial": lambda coeffs: Polynomial(_parse_coeff_spec(coeffs)),
    "monomial": lambda k, l, c=1: monomial(int(k), int(l), Fraction(c)),
    "exp-linear": lambda a=1, b=1: ExpLinear(_pair_param(a), _pair_param(b)),
    "exp-product": lambda c=1: ExpProduct(_pair_param(c)),
}


def _pair_param(x):
    if isinstance(x, (list, tuple)):
        return Fraction(x[0]), Fraction(x[1])
    return Fraction(x), Fraction(0)


def from_description(desc):
    """Rebuild a catalog function from :meth:`BivariateTaylor.describe` output."""
    desc = dict(desc)
    name = desc.pop("name")
    try:
        factory = CATALOG[name]
    except KeyError:
        raise ValueError(f"unknown catalog function {name!r}; known: {sorted(CATALOG)}") from None
    return factory(**desc)


def random_polynomial(rng, degree, n_terms=None, max_num=9, max_den=5):
    """Random polynomial of total degree exactly ``degree`` with small rational coefficients."""
    pairs = [(k, m - k) for m in range(degree + 1) for k in range(m + 1)]
    if n_terms is None:
        n_terms = len(pairs)
    chosen = {pairs[i] for i in rng.sample(range(len(pairs)), min(n_terms, len(pairs)))}
    top = rng.choice([p for p in pairs if sum(p) == degree])
    chosen.add(top)
    coeffs = {}
    for kl in sorted(chosen):
        re = Fraction(rng.randint(-max_num, max_num), rng.randint(1, max_den))
        im = Fraction(rng.randint(-max_num, max_num), rng.randint(1, max_den))
        if kl == top and re == 0 and im == 0:
            re = Fraction(1)
        coeffs[kl] = (re, im)
    return Polynomial(coeffs)


def builtin_catalog():
    """Small fixed family used by tests and by divergence-witness scans."""
    return [
        monomial(0, 0),
        monomial(1, 1),
        Polynomial({(0, 0): 1, (2, 1): Fraction(-1, 2), (0, 3): (0, 1)}),
        ExpLinear(1, 1),
        ExpLinear(Fraction(1, 2), -1),
        ExpLinear((0, 1), 1),
        ExpProduct(1),
        ExpProduct((0, Fraction(1, 2))),
    ]


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------

def _truncation(f, M):
    if M is None:
        if f.degree is None:
            raise TruncationUnavailable(f"{f!r} has no finite degree; pass a truncation degree M")
        return f.degree
    return M


def eval_taylor_raw(f, z1, z2, M=None):
    """sum_{k+l<=M} a_{k,l} z1^k z2^l at the active precision (Horner in both variables)."""
    M = _truncation(f, M)
    total = mpc(0)
    for l in range(M, -1, -1):
        inner = mpc(0)
        for k in range(M - l, -1, -1):
            inner = inner * z1 + f.coeff(k, l)
        total = total * z2 + inner
    return total


def eval_taylor(f, z, M=None, precision_bits=None):
    z1, z2 = z
    bits = _bits_of(z1, z2, precision_bits)
    with working_precision(bits):
        return PrecisionComplex.from_mpc(eval_taylor_raw(f, to_mpc(z1), to_mpc(z2), M), bits)


def line_derivative_sum_raw(f, eta, m):
    acc = mpc(0)
    for k in range(m, -1, -1):
        acc = acc * eta + f.coeff(k, m - k)
    return acc


def line_derivative_sum(f, eta, m, precision_bits=None):
    """sum_{k+l=m} a_{k,l} eta^k: the m-th Taylor coefficient of v -> f(eta v, v)."""
    if f.degree is not None and m > f.degree:
        bits = _bits_of(eta, None, precision_bits)
        return PrecisionComplex(0, precision_bits=bits)
    bits = _bits_of(eta, None, precision_bits)
    with working_precision(bits):
        return PrecisionComplex.from_mpc(line_derivative_sum_raw(f, to_mpc(eta), m), bits)


def _bits_of(a, b, explicit):
    if explicit is not None:
        return explicit
    bits = [x.precision_bits for x in (a, b) if isinstance(x, PrecisionComplex)]
    return max(bits) if bits else default_precision()


def relative_discrepancy(low, high):
    """|low - high| / |high| (absolute difference when high == 0)."""
    diff = abs(mpc(low) - mpc(high))
    scale = abs(mpc(high))
    return diff / scale if scale != 0 else diff
