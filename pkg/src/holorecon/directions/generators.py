"""Named direction families and the sequence-level operations on them."""
from __future__ import annotations

import math
from fractions import Fraction
from itertools import count

import gmpy2
from gmpy2 import mpc, mpfr, mpq

from ..errors import IndexOverflow, OverlapError, PoleTooClose
from ..numerics import default_precision, to_mpc, working_precision
from .sequence import DirectionSequence

_I_POWERS = ((1, 0), (0, 1), (-1, 0), (0, -1))


def _q(x):
    return mpq(x.numerator, x.denominator)


def _exact_point(re, im, bits):
    return mpc(mpfr(_q(Fraction(re)), bits), mpfr(_q(Fraction(im)), bits))


def gen_theta(n, precision_bits=None):
    """theta_j = i^j / j: a convergent sequence that is not locally real-analytic."""
    if n < 1:
        raise ValueError("n must be >= 1")
    bits = default_precision() if precision_bits is None else precision_bits
    with working_precision(bits):
        vals = []
        for j in range(1, n + 1):
            a, b = _I_POWERS[j % 4]
            vals.append(mpc(mpfr(mpq(a, j)), mpfr(mpq(b, j))))
    return DirectionSequence(
        tuple(vals), bits, {"generator": "theta", "n": n}, lambda b: gen_theta(n, b)
    )


def gen_kappa(n, precision_bits=None):
    """kappa_j = 3 + sin(j): real, inside [2, 4], pairwise distinct."""
    if n < 1:
        raise ValueError("n must be >= 1")
    bits = default_precision() if precision_bits is None else precision_bits
    with working_precision(bits):
        vals = tuple(mpc(3 + gmpy2.sin(mpfr(j))) for j in range(1, n + 1))
    return DirectionSequence(vals, bits, {"generator": "kappa", "n": n}, lambda b: gen_kappa(n, b))


# first two levels in the order listed for the square construction; later
# levels are lexicographic in (Re, Im)
_SQUARE_HEAD = (
    [(0, 0), (1, 0), (1, 1), (0, 1)],
    [
        (Fraction(1, 2), 0),
        (0, Fraction(1, 2)),
        (Fraction(1, 2), Fraction(1, 2)),
        (1, Fraction(1, 2)),
        (Fraction(1, 2), 1),
    ],
)


def square_net_level(r):
    """A_r = {(s + i t) / 2^r : 0 <= s, t <= 2^r} as exact Fraction pairs."""
    m = 2 ** r
    return {(Fraction(s, m), Fraction(t, m)) for s in range(m + 1) for t in range(m + 1)}


def square_net_new_points(r):
    """A_r minus A_{r-1} in enumeration order."""
    if r < len(_SQUARE_HEAD):
        return [(Fraction(a), Fraction(b)) for a, b in _SQUARE_HEAD[r]]
    return sorted(square_net_level(r) - square_net_level(r - 1))


def square_net_points(n):
    pts = []
    for r in count():
        pts.extend(square_net_new_points(r))
        if len(pts) >= n:
            return pts[:n]


def square_level_of_count(n):
    """Smallest r with n <= (2^r + 1)^2."""
    r = 0
    while (2 ** r + 1) ** 2 < n:
        r += 1
    return r


def gen_square_net_sequence(n, precision_bits=None):
    """Nested 2^-r nets of [0,1]+i[0,1]; the first (2^r+1)^2 points form A_r."""
    if n < 1:
        raise ValueError("n must be >= 1")
    bits = default_precision() if precision_bits is None else precision_bits
    with working_precision(bits):
        vals = tuple(_exact_point(a, b, bits) for a, b in square_net_points(n))
    return DirectionSequence(
        vals, bits, {"generator": "square-net", "n": n}, lambda b: gen_square_net_sequence(n, b)
    )


def gaussian_rationals():
    """Every Gaussian rational exactly once, by increasing height max(|a|, |b|, d).

    Yields (a, b, d) meaning (a + i b) / d with gcd(a, b, d) = 1.
    """
    yield 0, 0, 1
    for h in count(1):
        batch = []
        for d in range(1, h + 1):
            for a in range(-h, h + 1):
                for b in range(-h, h + 1):
                    if max(abs(a), abs(b), d) != h or a == b == 0:
                        continue
                    if math.gcd(math.gcd(a, b), d) != 1:
                        continue
                    batch.append((d, a, b))
        for d, a, b in sorted(set(batch)):
            yield a, b, d


def gen_dense(n, precision_bits=None):
    """Dense sequence of C: Gaussian rationals enumerated by height."""
    bits = default_precision() if precision_bits is None else precision_bits
    vals = []
    with working_precision(bits):
        for a, b, d in gaussian_rationals():
            vals.append(mpc(mpfr(mpq(a, d)), mpfr(mpq(b, d))))
            if len(vals) == n:
                break
    return DirectionSequence(tuple(vals), bits, {"generator": "dense", "n": n}, lambda b: gen_dense(n, b))


def interleave(a, b):
    """eta_j = a_{j/2} for even j and b_{(j+1)/2} for odd j, stopping at the first missing term."""
    bits = max(a.precision_bits, b.precision_bits)
    with working_precision(bits):
        common = set((v.real, v.imag) for v in a.values) & set((v.real, v.imag) for v in b.values)
        if common:
            raise OverlapError(f"sequences share {len(common)} point(s)")
        vals = []
        for j in count(1):
            if j % 2 == 0:
                if j // 2 > len(a):
                    break
                vals.append(mpc(a.values[j // 2 - 1], precision=bits))
            else:
                if (j + 1) // 2 > len(b):
                    break
                vals.append(mpc(b.values[(j + 1) // 2 - 1], precision=bits))
    rebuild = None
    if a.rebuild is not None and b.rebuild is not None:
        rebuild = lambda bb: interleave(a.at_precision(bb), b.at_precision(bb))
    prov = {"op": "interleave", "even": a.provenance, "odd": b.provenance}
    return DirectionSequence(tuple(vals), bits, prov, rebuild)


def _homography_raw(z, u):
    return (1 + u.conjugate() * z) / (z - u)


def _inverse_homography_raw(w, u):
    return (1 + u * w) / (w - u.conjugate())


def homography(seq, u, delta=None, inverse=False):
    """Apply h_u(zeta) = (1 + conj(u) zeta) / (zeta - u) termwise.

    With ``inverse=True`` the algebraic inverse w -> (1 + u w) / (w - conj(u))
    is applied instead.
    """
    bits = seq.precision_bits
    with working_precision(bits):
        u = to_mpc(u)
        pole = u.conjugate() if inverse else u
        delta = mpfr(2) ** (-32) if delta is None else mpfr(delta)
        vals = []
        for j, z in enumerate(seq.values, 1):
            if abs(z - pole) < delta:
                raise PoleTooClose(f"|eta_{j} - pole| < {float(delta):g}")
            vals.append(_inverse_homography_raw(z, u) if inverse else _homography_raw(z, u))
    rebuild = None
    if seq.rebuild is not None:
        u_saved = u
        rebuild = lambda bb: homography(seq.at_precision(bb), mpc(u_saved, precision=bb), delta, inverse)
    prov = {
        "op": "inverse-homography" if inverse else "homography",
        "u": [str(u.real), str(u.imag)],
        "of": seq.provenance,
    }
    return DirectionSequence(tuple(vals), bits, prov, rebuild)


def reciprocal(seq, delta=None):
    """zeta -> 1/zeta (the map sending the origin to infinity)."""
    bits = seq.precision_bits
    with working_precision(bits):
        delta = mpfr(2) ** (-32) if delta is None else mpfr(delta)
        for j, z in enumerate(seq.values, 1):
            if abs(z) < delta:
                raise PoleTooClose(f"|eta_{j}| < {float(delta):g}")
        vals = tuple(1 / z for z in seq.values)
    rebuild = None
    if seq.rebuild is not None:
        rebuild = lambda bb: reciprocal(seq.at_precision(bb), delta)
    return DirectionSequence(vals, bits, {"op": "reciprocal", "of": seq.provenance}, rebuild)


def delete_subsequence(seq, victim):
    """Drop every eta_j with ``victim(j)`` true (1-based j); survivors keep their order."""
    keep = [j for j in range(1, len(seq) + 1) if not victim(j)]
    vals = tuple(seq.values[j - 1] for j in keep)
    rebuild = None
    if seq.rebuild is not None:
        rebuild = lambda bb: delete_subsequence(seq.at_precision(bb), victim)
    prov = {"op": "delete", "kept": len(keep), "of": seq.provenance}
    return DirectionSequence(vals, seq.precision_bits, prov, rebuild)


def apply_permutation(seq, sigma, n):
    """(eta_{sigma(1)}, ..., eta_{sigma(n)})."""
    idx = sigma.prefix(n)
    top = max(idx, default=0)
    if top > len(seq):
        raise IndexOverflow(f"sigma reaches index {top} but only {len(seq)} points are materialized")
    vals = tuple(seq.values[i - 1] for i in idx)
    rebuild = None
    if seq.rebuild is not None:
        rebuild = lambda bb: apply_permutation(seq.at_precision(bb), sigma, n)
    prov = {"op": "permute", "sigma": sigma.description, "n": n, "of": seq.provenance}
    return DirectionSequence(vals, seq.precision_bits, prov, rebuild)
