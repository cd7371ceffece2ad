"""Rearrangements of an interleaved pair (theta, kappa) that flip the growth criterion.

Permutations here act on the interleaved index space: theta_k sits at
index 2k and kappa_j at index 2j - 1.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr

from ..divided_differences import DISCREPANCY_TOL, _abs_matrix
from ..errors import GapError, PrecisionWarning, WitnessOrderError
from ..numerics import decimal_string, relative_discrepancy, working_precision
from .permutation import Permutation
from .sequence import DirectionSequence


def theta_index(k):
    return 2 * k


def kappa_index(j):
    return 2 * j - 1


def set_distance(a, b):
    """min |x - y| over x in a, y in b (exact, on the materialized prefixes)."""
    bits = max(a.precision_bits, b.precision_bits)
    with working_precision(bits):
        return min(abs(x - y) for x in a.values for y in b.values)


def theta_kappa_gap(theta, kappa):
    """d = min{2, dist(theta, kappa)}; GapError when the two sets touch."""
    bits = max(theta.precision_bits, kappa.precision_bits)
    dist = set_distance(theta, kappa)
    if dist <= mpfr(2) ** (-(bits // 2)):
        raise GapError(f"theta and kappa are {float(dist):.3g} apart; they must be separated")
    return min(mpfr(2, bits), dist)


def _sigma1_levels(theta, d, R_kappa):
    """l_1 < l_2 < ... for every k whose theta_{k+1} is materialized."""
    bits = theta.precision_bits
    levels = []
    with working_precision(bits):
        pair_min = mpfr(1)
        ln2 = gmpy2.log(mpfr(2))
        for k in range(1, len(theta)):
            t = theta.values
            for i in range(k - 1):
                pair_min = min(pair_min, abs(t[k - 1] - t[i]))
            w = t[k]
            phi = min([pair_min] + [abs(w - t[j]) for j in range(k)])
            ratio = gmpy2.log(d / (2 * phi * R_kappa)) / ln2
            bound = k * max(mpfr(1), ratio)
            lk = max(1, int(gmpy2.ceil(bound)))
            if levels and lk <= levels[-1]:
                lk = levels[-1] + 1
            levels.append(lk)
    return levels


def build_sigma1(theta, kappa, R_kappa, n=None):
    """Insert theta_k at position l_k + k of the kappa stream, late enough to keep the criterion bounded.

    Positions 1..l_1 carry kappa_1..kappa_{l_1}; position l_k + k carries
    theta_k; positions l_k + k + 1 .. l_{k+1} + k carry kappa_{j-k}. Only as
    many positions as the materialized thetas determine can be produced.
    """
    R = mpfr(R_kappa)
    if R < 1:
        raise ValueError("R_kappa must be >= 1")
    d = theta_kappa_gap(theta, kappa)
    levels = _sigma1_levels(theta, d, R)

    def gen():
        k = 0
        j = 0
        while k < len(levels):
            j += 1
            if j == levels[k] + k + 1:
                k += 1
                yield theta_index(k)
            else:
                yield kappa_index(j - k)
        # positions up to the last placed theta are fully determined; stop there

    sigma = Permutation(
        gen,
        {
            "kind": "sigma1",
            "levels": levels,
            "d": decimal_string(d),
            "R_kappa": decimal_string(R),
        },
    )
    sigma.levels = levels
    if n is not None:
        sigma.prefix(n)
    return sigma


def validate_witnesses(witnesses):
    prev = None
    for r, (p, q) in enumerate(witnesses, 1):
        if p < 1 or q < 1:
            raise WitnessOrderError(f"witness {r} = ({p}, {q}) must have p, q >= 1")
        if prev is not None:
            if p < prev[0] + 2:
                raise WitnessOrderError(f"witness {r}: p = {p} must be >= {prev[0] + 2}")
            if p + q <= prev[0] + prev[1]:
                raise WitnessOrderError(f"witness {r}: p + q = {p + q} must exceed {prev[0] + prev[1]}")
        prev = (p, q)


def sigma2_labels(witnesses, length):
    """First ``length`` labels of theta^(R): kappa_r inserted at position p_r + 2 for each witness."""
    order = [("theta", k) for k in range(1, length + 1)]
    for r, (p, _) in enumerate(witnesses, 1):
        order.insert(p + 1, ("kappa", r))
    return order[:length]


def build_sigma2(theta, kappa, witnesses, n=None):
    """Diagonal rearrangement that keeps every witness (p_r, q_r) of theta alive.

    After the last witness prefix (through position p_R + 2) the remaining
    thetas alternate with kappa_{R+1}, kappa_{R+2}, ...
    """
    witnesses = [(int(p), int(q)) for p, q in witnesses]
    validate_witnesses(witnesses)
    head_len = witnesses[-1][0] + 2 if witnesses else 0
    head = sigma2_labels(witnesses, head_len)
    R = len(witnesses)

    def gen():
        for kind, i in head:
            yield theta_index(i) if kind == "theta" else kappa_index(i)
        next_theta = 1 + sum(1 for kind, _ in head if kind == "theta")
        next_kappa = R + 1
        while True:
            yield theta_index(next_theta)
            next_theta += 1
            yield kappa_index(next_kappa)
            next_kappa += 1

    sigma = Permutation(gen, {"kind": "sigma2", "witnesses": [list(w) for w in witnesses]})
    if n is not None:
        sigma.prefix(n)
    return sigma


class WitnessList(list):
    """(p, q) pairs plus the budgets and precision behind them."""

    def __init__(self, items, base, budgets, precision_bits, discrepancy):
        super().__init__(items)
        self.base = base
        self.budgets = budgets
        self.precision_bits = precision_bits
        self.discrepancy = discrepancy

    def to_json(self):
        return {
            "witnesses": [list(w) for w in self],
            "base": self.base,
            "p_budget": self.budgets[0],
            "q_budget": self.budgets[1],
            "precision_bits": self.precision_bits,
            "dual_precision_max_discrepancy": self.discrepancy,
        }


def _dual_matrix(seq, P, Q, bits):
    lo = _abs_matrix(seq, P, Q, bits)
    hi = _abs_matrix(seq, P, Q, 2 * bits)
    with working_precision(2 * bits):
        disc = max(
            (float(relative_discrepancy(a, b)) for ra, rb in zip(lo, hi) for a, b in zip(ra, rb)),
            default=0.0,
        )
    if disc > DISCREPANCY_TOL:
        warnings.warn(
            f"criterion entries differ by {disc:.3g} between {bits} and {2 * bits} bits",
            PrecisionWarning,
            stacklevel=3,
        )
    return hi, disc


def _exceeds(value, base, order):
    return value > 0 and gmpy2.log(value) >= order * math.log(base)


def find_divergence_witnesses(seq, r=2, p_budget=20, q_budget=10, precision_bits=None):
    """Every (p, q) with p <= p_budget, 1 <= q <= q_budget and |Delta_p[phi^q](eta_{p+1})| >= r^(p+q).

    Bounded search: an empty result says nothing about larger budgets.
    """
    if p_budget < 1 or q_budget < 1:
        raise ValueError("budgets must be >= 1")
    P = min(p_budget, len(seq) - 1)
    bits = precision_bits or seq.precision_bits
    M, disc = _dual_matrix(seq, P, q_budget, bits)
    found = [
        (p, q)
        for p in range(1, P + 1)
        for q in range(1, q_budget + 1)
        if _exceeds(M[p][q], r, p + q)
    ]
    return WitnessList(found, r, (p_budget, q_budget), 2 * bits, disc)


def _labels_sequence(theta, kappa, labels):
    vals = tuple(theta.values[i - 1] if kind == "theta" else kappa.values[i - 1] for kind, i in labels)
    return DirectionSequence(vals, max(theta.precision_bits, kappa.precision_bits), {"op": "sigma2-stage"})


@dataclass
class WitnessSearch:
    witnesses: list
    p_budget: int
    q_budget: int
    r_max: int
    precision_bits: int
    max_discrepancy: float

    def to_json(self):
        return {
            "witnesses": [list(w) for w in self.witnesses],
            "p_budget": self.p_budget,
            "q_budget": self.q_budget,
            "r_max": self.r_max,
            "precision_bits": self.precision_bits,
            "dual_precision_max_discrepancy": self.max_discrepancy,
        }


def search_sigma2_witnesses(theta, kappa, r_max=8, p_budget=20, q_budget=10, precision_bits=None):
    """Witnesses (p_r, q_r) for r = 1, 2, ... found on the partially rearranged theta^(r-1).

    The r-th witness must clear r^(p+q), start at least three places after
    the previous one (so kappa_{r-1} is already among the nodes) and have a
    larger p + q. The search stops at the first r with no witness in budget.
    """
    bits = precision_bits or max(theta.precision_bits, kappa.precision_bits)
    found = []
    worst = 0.0
    for r in range(1, r_max + 1):
        labels = sigma2_labels(found, p_budget + 1 + len(found))
        labels = labels[: p_budget + 1]
        needed_theta = max(i for kind, i in labels if kind == "theta")
        if needed_theta > len(theta) or len(found) > len(kappa):
            break
        stage = _labels_sequence(theta, kappa, labels)
        M, disc = _dual_matrix(stage, p_budget, q_budget, bits)
        worst = max(worst, disc)
        p_min = found[-1][0] + 3 if found else 1
        s_min = sum(found[-1]) + 1 if found else 2
        hit = None
        for p in range(p_min, p_budget + 1):
            for q in range(1, q_budget + 1):
                if p + q >= s_min and _exceeds(M[p][q], max(r, 1), p + q):
                    hit = (p, q)
                    break
            if hit:
                break
        if hit is None:
            break
        found.append(hit)
    return WitnessSearch(found, p_budget, q_budget, r_max, 2 * bits, worst)
