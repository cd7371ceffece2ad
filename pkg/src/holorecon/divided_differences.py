"""Discrete derivatives Delta_p, interpolating polynomials and the growth criterion.

The recursion Delta_p(h)(eta_{p+1}) = [Delta_{p-1}(h)(eta_{p+1}) - Delta_{p-1}(h)(eta_p)] / (eta_{p+1} - eta_p)
and the symmetric closed form sum_q h(eta_q) / prod_{j != q}(eta_q - eta_j) are both
implemented; the closed form is the production engine and the recursion
is kept as an independent cross-check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

from . import kernels
from .errors import DuplicateNode, PrecisionFailure
from .numerics import (
    PrecisionComplex,
    decimal_string,
    default_precision,
    phi_raw,
    relative_discrepancy,
    to_mpc,
    working_precision,
)

DISCREPANCY_TOL = mpfr(2) ** -64
MAX_PRECISION = 4096

BOUNDED = "BOUNDED"
GROWING = "GROWING"
INCONCLUSIVE = "INCONCLUSIVE"


class PhiPower:
    """zeta -> (conj(zeta) / (1 + |zeta|^2))^q as a scalar oracle on raw mpc values."""

    def __init__(self, q):
        self.q = int(q)

    def __call__(self, z):
        return phi_raw(z, self.q)

    def __repr__(self):
        return f"phi^{self.q}"


def _raw_nodes(nodes, bits):
    return [to_mpc(z, bits) for z in nodes]


def _node_bits(nodes, explicit):
    if explicit is not None:
        return explicit
    bits = [z.precision_bits for z in nodes if isinstance(z, PrecisionComplex)]
    return max(bits) if bits else default_precision()


def check_distinct(nodes, bits):
    """Raise DuplicateNode when two nodes are closer than 2^-(bits/2)."""
    thresh = mpfr(2) ** (-(bits // 2))
    n = len(nodes)
    for a in range(n):
        for b in range(a + 1, n):
            if abs(nodes[a] - nodes[b]) < thresh:
                raise DuplicateNode(f"nodes {a + 1} and {b + 1} are closer than 2^-{bits // 2}")


def _prepare(nodes, p, precision_bits):
    if len(nodes) < p + 1:
        raise ValueError(f"Delta_{p} needs {p + 1} nodes, got {len(nodes)}")
    bits = _node_bits(nodes, precision_bits)
    raw = _raw_nodes(nodes[: p + 1], bits)
    check_distinct(raw, bits)
    return raw, bits


def delta_recursive(h, nodes, p, precision_bits=None):
    """Delta_{p,(eta_p..eta_1)}(h)(eta_{p+1}) via the two-point recursion."""
    raw, bits = _prepare(nodes, p, precision_bits)
    with working_precision(bits):
        vals = [to_mpc(h(z)) for z in raw]
        return PrecisionComplex.from_mpc(kernels.newton_deltas(raw, vals)[p], bits)


def delta_closed_form(h, nodes, p, precision_bits=None):
    """sum_{q=1}^{p+1} h(eta_q) / prod_{j != q} (eta_q - eta_j)."""
    raw, bits = _prepare(nodes, p, precision_bits)
    with working_precision(bits):
        vals = [to_mpc(h(z)) for z in raw]
        return PrecisionComplex.from_mpc(kernels.closed_form_table(raw, [vals])[0][p], bits)


@dataclass(frozen=True)
class DeltaTable:
    """Delta_p[h](eta_{p+1}) for p = 0..P by both engines and at two precisions."""

    nodes: object
    values: list
    recursive: list
    h_descriptor: str
    precision_pair: tuple
    max_discrepancy: float
    engine_discrepancy: float


def delta_table(h, seq, P, precision_bits=None, h_descriptor=None):
    bits = precision_bits or seq.precision_bits
    out = {}
    for b in (bits, 2 * bits):
        s = seq.at_precision(b)
        with working_precision(b):
            raw = list(s.values[: P + 1])
            check_distinct(raw, b)
            vals = [to_mpc(h(z)) for z in raw]
            out[b] = (kernels.closed_form_table(raw, [vals])[0], kernels.newton_deltas(raw, vals))
    lo, hi = out[bits][0], out[2 * bits][0]
    with working_precision(2 * bits):
        disc = max(float(relative_discrepancy(a, c)) for a, c in zip(lo, hi))
        eng = max(float(relative_discrepancy(a, c)) for a, c in zip(out[bits][1], hi))
    return DeltaTable(
        nodes=seq.prefix(P + 1),
        values=[PrecisionComplex.from_mpc(v, bits) for v in lo],
        recursive=[PrecisionComplex.from_mpc(v, bits) for v in out[bits][1]],
        h_descriptor=h_descriptor or repr(h),
        precision_pair=(bits, 2 * bits),
        max_discrepancy=disc,
        engine_discrepancy=eng,
    )


# --------------------------------------------------------------------------
# Interpolating polynomials
# --------------------------------------------------------------------------

class InterpolatingPolynomial:
    """Degree <= N-1 polynomial through (eta_p, h(eta_p)), p = 1..N.

    Evaluates in Lagrange form (product weights) or Newton form
    (sum_p prod_{j<=p}(zeta - eta_j) Delta_p[h](eta_{p+1})).
    """

    def __init__(self, nodes, values, bits):
        self.nodes = nodes
        self.values = values
        self.precision_bits = bits
        with working_precision(bits):
            self.newton_coefficients = kernels.newton_deltas(nodes, values)
            self._weights = []
            for p, x in enumerate(nodes):
                d = mpc(1)
                for j, y in enumerate(nodes):
                    if j != p:
                        d *= x - y
                self._weights.append(values[p] / d)

    @property
    def degree_bound(self):
        return len(self.nodes) - 1

    def lagrange(self, zeta):
        with working_precision(self.precision_bits):
            z = to_mpc(zeta)
            total = mpc(0)
            for p, w in enumerate(self._weights):
                term = w
                for j, y in enumerate(self.nodes):
                    if j != p:
                        term *= z - y
                total += term
            return PrecisionComplex.from_mpc(total, self.precision_bits)

    def newton(self, zeta):
        with working_precision(self.precision_bits):
            z = to_mpc(zeta)
            acc = mpc(0)
            for p in range(len(self.nodes) - 1, -1, -1):
                acc = acc * (z - self.nodes[p]) + self.newton_coefficients[p]
            return PrecisionComplex.from_mpc(acc, self.precision_bits)

    __call__ = newton

    def monomial_coefficients(self):
        """c[k] with P(zeta) = sum_k c[k] zeta^k, expanded from the Newton form."""
        with working_precision(self.precision_bits):
            coeffs = [mpc(0)]
            for p in range(len(self.nodes) - 1, -1, -1):
                # coeffs <- coeffs * (zeta - eta_p) + newton[p]
                shifted = [mpc(0)] + coeffs
                for k in range(len(coeffs)):
                    shifted[k] -= self.nodes[p] * coeffs[k]
                shifted[0] += self.newton_coefficients[p]
                coeffs = shifted
            while len(coeffs) > 1 and coeffs[-1] == 0:
                coeffs.pop()
            return [PrecisionComplex.from_mpc(c, self.precision_bits) for c in coeffs]


def lagrange_interpolant(h, nodes, N, precision_bits=None):
    if len(nodes) < N:
        raise ValueError(f"need {N} nodes, got {len(nodes)}")
    bits = _node_bits(nodes, precision_bits)
    raw = _raw_nodes(nodes[:N], bits)
    check_distinct(raw, bits)
    with working_precision(bits):
        vals = [to_mpc(h(z)) for z in raw]
    return InterpolatingPolynomial(raw, vals, bits)


# --------------------------------------------------------------------------
# Criterion matrix
# --------------------------------------------------------------------------

@dataclass
class CriterionReport:
    """|Delta_p[phi^q](eta_{p+1})| for 0 <= p <= P, 0 <= q <= Q, with a growth verdict."""

    P: int
    Q: int
    entries: list
    R_hat: float
    verdict: str
    precision_bits: int
    dual_precision_max_discrepancy: float
    growth_exponent: float = float("nan")
    row_roots: list = field(default_factory=list)
    sequence: dict = field(default_factory=dict)
    label: str = ""

    def entry(self, p, q):
        return self.entries[p][q]

    def as_float_matrix(self):
        return np.array([[float(v) for v in row] for row in self.entries])

    def max_log_ratio(self, base):
        """max over p+q >= 1 of log M[p][q] - (p+q) log(base); positive means some entry exceeds base^(p+q)."""
        best = -math.inf
        for p, row in enumerate(self.entries):
            for q, v in enumerate(row):
                if p + q >= 1 and v > 0:
                    best = max(best, float(gmpy2.log(v)) - (p + q) * math.log(base))
        return best

    def exceeding(self, base):
        return [
            (p, q)
            for p, row in enumerate(self.entries)
            for q, v in enumerate(row)
            if p + q >= 1 and v > 0 and gmpy2.log(v) > (p + q) * math.log(base)
        ]

    def to_json(self):
        return {
            "P": self.P,
            "Q": self.Q,
            "entries": [[decimal_string(v) for v in row] for row in self.entries],
            "R_hat": self.R_hat,
            "verdict": self.verdict,
            "precision_bits": self.precision_bits,
            "dual_precision_max_discrepancy": self.dual_precision_max_discrepancy,
            "growth_exponent": self.growth_exponent,
            "row_roots": self.row_roots,
            "sequence": self.sequence,
            "label": self.label,
        }

    def table(self, digits=3):
        """Fixed-width text rendering, rows p, columns q."""
        head = "p\\q " + " ".join(f"{q:>{digits + 7}d}" for q in range(self.Q + 1))
        lines = [head]
        for p, row in enumerate(self.entries):
            cells = " ".join(f"{float(v):>{digits + 7}.{digits}e}" for v in row)
            lines.append(f"{p:>3d} {cells}")
        lines.append(f"R_hat={self.R_hat:.6g} growth_exponent={self.growth_exponent:.4g} verdict={self.verdict}")
        return "\n".join(lines)


def _phi_rows(raw, Q):
    rows = []
    base = [phi_raw(z, 1) for z in raw]
    cur = [mpc(1)] * len(raw)
    for q in range(1, Q + 1):
        cur = [c * b for c, b in zip(cur, base)]
        rows.append(cur)
    return rows


def _abs_matrix(seq, P, Q, bits):
    s = seq.at_precision(bits)
    with working_precision(bits):
        raw = list(s.values[: P + 1])
        check_distinct(raw, bits)
        cols = kernels.closed_form_table(raw, _phi_rows(raw, Q)) if Q > 0 else []
        # the q = 0 kernel is constant: all its discrete derivatives of order >= 1 vanish
        M = [[mpfr(1) if p == 0 else mpfr(0)] + [abs(cols[q - 1][p]) for q in range(1, Q + 1)] for p in range(P + 1)]
    return M


def row_roots(entries, min_order=4):
    """rho_p = max_q M[p][q]^(1/(p+q)) over entries with p+q >= min_order."""
    roots = []
    for p, row in enumerate(entries):
        best = 0.0
        for q, v in enumerate(row):
            if p + q >= min_order and v > 0:
                best = max(best, math.exp(float(gmpy2.log(v)) / (p + q)))
        roots.append(best)
    return roots


def growth_exponent(roots, P):
    """Least-squares slope of log rho_p against log p over the top half of p."""
    lo = max(2, math.ceil(P / 2))
    xs, ys = [], []
    for p in range(lo, P + 1):
        if roots[p] > 0:
            xs.append(math.log(p))
            ys.append(math.log(roots[p]))
    if len(xs) < 3:
        return float("nan")
    return float(np.polyfit(xs, ys, 1)[0])


def classify(entries, P, grow_above=0.7, bound_below=0.5):
    """Verdict from how fast the (p+q)-th roots of the entries drift with p.

    Geometric growth R^(p+q) keeps the roots bounded (exponent -> 0); the
    k^(p_k) lower bounds of non-interpolable sequences make them climb
    roughly linearly in p (exponent near 1).
    """
    roots = row_roots(entries)
    R_hat = max(roots) if roots else 0.0
    beta = growth_exponent(roots, P)
    if math.isnan(beta):
        verdict = INCONCLUSIVE
    elif beta > grow_above:
        verdict = GROWING
    elif beta < bound_below:
        verdict = BOUNDED
    else:
        verdict = INCONCLUSIVE
    return R_hat, beta, roots, verdict


def criterion_matrix(seq, P, Q, precision_bits=None, max_bits=MAX_PRECISION, tol=DISCREPANCY_TOL, label=""):
    """Criterion matrix at dual precision, escalating precision until the two agree.

    Raises PrecisionFailure when entries at ``b`` and ``2b`` bits still differ
    by more than ``tol`` (relative) with ``2b`` at ``max_bits``.
    """
    if len(seq) < P + 1:
        raise ValueError(f"criterion needs {P + 1} materialized points, sequence has {len(seq)}")
    bits = precision_bits or seq.precision_bits
    while True:
        lo = _abs_matrix(seq, P, Q, bits)
        hi = _abs_matrix(seq, P, Q, 2 * bits)
        with working_precision(2 * bits):
            disc = max(
                (float(relative_discrepancy(a, b)) for ra, rb in zip(lo, hi) for a, b in zip(ra, rb)),
                default=0.0,
            )
        if disc <= tol:
            break
        if 2 * bits >= max_bits:
            raise PrecisionFailure(
                f"criterion entries disagree by {disc:.3g} between {bits} and {2 * bits} bits"
            )
        bits *= 2
    R_hat, beta, roots, verdict = classify(hi, P)
    return CriterionReport(
        P=P,
        Q=Q,
        entries=[[mpfr(v, bits) for v in row] for row in hi],
        R_hat=R_hat,
        verdict=verdict,
        precision_bits=bits,
        dual_precision_max_discrepancy=disc,
        growth_exponent=beta,
        row_roots=roots,
        sequence=seq.provenance,
        label=label,
    )
