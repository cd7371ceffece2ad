"""The interpolation operator E_N, its remainder R_N and the decomposition identity.

For an entire f on C^2 and directions eta_1..eta_N,

    f = E_N(f; eta) - R_N(f; eta) + sum_{k+l>=N} a_{k,l} z1^k z2^l,

where E_N only uses the restrictions of f to the lines z1 = eta_j z2.
All series are truncated at total degree M; the neglected part is bounded
with Cauchy estimates and reported next to each value.
"""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpc, mpfr

from . import kernels
from .errors import DuplicateNode, IdentityViolation
from .numerics import (
    PrecisionComplex,
    _cauchy_tail,
    decimal_string,
    eval_taylor_raw,
    to_mpc,
    working_precision,
)

MAX_PRECISION = 4096


def default_truncation(N):
    return max(2 * N, 40)


@dataclass(frozen=True)
class Polydisc:
    """{|z1| <= r1, |z2| <= r2} sampled on ``n_circle`` boundary points per coordinate plus the centre."""

    r1: float = 1.0
    r2: float = 1.0
    n_circle: int = 8

    def coordinate_samples(self, r, bits):
        with working_precision(bits):
            pts = [mpc(0)]
            two_pi = 2 * gmpy2.const_pi()
            R = mpfr(r)
            for s in range(self.n_circle):
                ang = two_pi * s / self.n_circle
                pts.append(mpc(R * gmpy2.cos(ang), R * gmpy2.sin(ang)))
            return pts

    def grid(self, bits):
        a = self.coordinate_samples(self.r1, bits)
        b = self.coordinate_samples(self.r2, bits)
        return [(x, y) for x in a for y in b]

    @property
    def radius(self):
        return max(self.r1, self.r2)

    def to_json(self):
        return {"r1": self.r1, "r2": self.r2, "n_circle": self.n_circle}


@dataclass
class ReconstructionRequest:
    f: object
    seq: object
    N: int
    eval_points: list
    M: int = None
    precision_bits: int = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.N > len(self.seq):
            raise ValueError(f"N = {self.N} exceeds the {len(self.seq)} materialized directions")
        if self.M is None:
            # a polynomial is exact once M reaches its degree
            deg = getattr(self.f, "degree", None)
            self.M = max(self.N, deg) if deg is not None else default_truncation(self.N)
        if self.M < self.N:
            raise ValueError("truncation degree M must be >= N")
        if self.precision_bits is None:
            self.precision_bits = self.seq.precision_bits

    def at_precision(self, bits):
        return ReconstructionRequest(self.f, self.seq, self.N, self.eval_points, self.M, bits)


@dataclass
class Evaluated:
    """Values plus a bound on what the degree-M truncation left out, one per point."""

    values: list
    truncation: list


@dataclass
class ReconstructionResult:
    E_values: list
    R_values: list
    tail_values: list
    f_values: list
    identity_residual: object
    budget: object
    precision_bits: int
    truncation: dict = field(default_factory=dict)

    def to_json(self):
        def enc(vals):
            return [list(v.to_strings()) for v in vals]

        return {
            "E_values": enc(self.E_values),
            "R_values": enc(self.R_values),
            "tail_values": enc(self.tail_values),
            "f_values": enc(self.f_values),
            "identity_residual": decimal_string(self.identity_residual),
            "budget": decimal_string(self.budget),
            "precision_bits": self.precision_bits,
        }


class _Prepared:
    """Per-request data shared by E_N and R_N: nodes, line coefficients, weights."""

    def __init__(self, req, bits):
        self.bits = bits
        seq = req.seq.at_precision(bits)
        with working_precision(bits):
            self.nodes = list(seq.values[: req.N])
            gap_floor = mpfr(2) ** (-(bits // 2))
            for a in range(len(self.nodes)):
                for b in range(a + 1, len(self.nodes)):
                    if abs(self.nodes[a] - self.nodes[b]) < gap_floor:
                        raise DuplicateNode(f"eta_{a + 1} and eta_{b + 1} are closer than 2^-{bits // 2}")
            tri = req.f.coeff_triangle(req.M)
            self.triangle = tri
            self.line = [kernels.line_sums(tri, e) for e in self.nodes]
            self._weights = None
        self.f = req.f
        self.N = req.N
        self.M = req.M

    @property
    def weights(self):
        if self._weights is None:
            with working_precision(self.bits):
                self._weights = kernels.en_weights(self.nodes)
        return self._weights

    def line_tail(self, q, x, s):
        """Bound on sum_{m>M} |c_q(m)| |x|^(m-s), from |c_q(m)| <= ||f||_R (m+1) (max(1,|eta_q|)/R)^m."""
        if self.f.degree is not None and self.f.degree <= self.M:
            return mpfr(0)
        ax = abs(x)
        if ax == 0:
            return mpfr(0)
        spread = max(mpfr(1), abs(self.nodes[q]))
        R = 8 * max(mpfr(1), spread * ax)
        y = spread * ax / R
        return _cauchy_tail(self.f.sup_norm_bound(R), y, self.M + 1) / ax ** s


def _xs(nodes, z1, z2):
    return [(z2 + e.conjugate() * z1) / (1 + gmpy2.norm(e)) for e in nodes]


def _en_truncation(prep, z1, z2):
    n = len(prep.nodes)
    xs = _xs(prep.nodes, z1, z2)
    total = mpfr(0)
    pref = mpfr(1)
    for p in range(n - 1, -1, -1):
        s = n - 1 - p
        inner = mpfr(0)
        for q in range(p, n):
            inner += abs(prep.weights[p][q]) * prep.line_tail(q, xs[q], s)
        total += pref * inner
        pref *= abs(z1 - prep.nodes[p] * z2)
    return total


def _rn_truncation(prep, z1, z2):
    n = len(prep.nodes)
    xs = _xs(prep.nodes, z1, z2)
    total = mpfr(0)
    for p in range(n):
        lag = mpfr(1)
        for j in range(n):
            if j != p:
                lag *= abs(z1 - prep.nodes[j] * z2) / abs(prep.nodes[p] - prep.nodes[j])
        total += lag * abs(xs[p]) * prep.line_tail(p, xs[p], n)
    return total


def _points(req, bits):
    with working_precision(bits):
        return [(to_mpc(a, bits), to_mpc(b, bits)) for a, b in req.eval_points]


def _wrap(vals, bits):
    return [PrecisionComplex.from_mpc(v, bits) for v in vals]


def _eval_EN_raw(prep, pts):
    with working_precision(prep.bits):
        vals = [kernels.en_eval(prep.nodes, prep.weights, prep.line, a, b) for a, b in pts]
        errs = [_en_truncation(prep, a, b) for a, b in pts]
    return vals, errs


def _eval_RN_raw(prep, pts):
    with working_precision(prep.bits):
        vals = [kernels.rn_eval(prep.nodes, prep.line, a, b) for a, b in pts]
        errs = [_rn_truncation(prep, a, b) for a, b in pts]
    return vals, errs


def _tail_raw(f, N, z1, z2, M):
    with working_precision():
        parts = kernels.homogeneous_parts(f.coeff_triangle(M), z1, z2)
        val = sum(parts[N:], mpc(0))
        rho = max(abs(z1), abs(z2))
        return val, f.tail_bound(rho, M + 1)


def eval_EN(req):
    """E_N(f; eta) at every evaluation point, with truncation bounds."""
    prep = _Prepared(req, req.precision_bits)
    vals, errs = _eval_EN_raw(prep, _points(req, prep.bits))
    return Evaluated(_wrap(vals, prep.bits), errs)


def eval_RN(req):
    """R_N(f; eta) at every evaluation point, with truncation bounds."""
    prep = _Prepared(req, req.precision_bits)
    vals, errs = _eval_RN_raw(prep, _points(req, prep.bits))
    return Evaluated(_wrap(vals, prep.bits), errs)


def eval_tail(f, N, z, M, precision_bits=None):
    """Partial sum over N <= k+l <= M of a_{k,l} z1^k z2^l and the bound for k+l > M."""
    if M < N - 1:
        raise ValueError("M must be >= N - 1")
    bits = precision_bits or max(
        [x.precision_bits for x in z if isinstance(x, PrecisionComplex)] or [256]
    )
    with working_precision(bits):
        z1, z2 = to_mpc(z[0], bits), to_mpc(z[1], bits)
        val, err = _tail_raw(f, N, z1, z2, M)
    return PrecisionComplex.from_mpc(val, bits), err


def _f_value(f, z1, z2, M):
    exact = f.exact(z1, z2)
    if exact is not None:
        return exact, mpfr(0)
    return eval_taylor_raw(f, z1, z2, 2 * M), f.tail_bound(max(abs(z1), abs(z2)), 2 * M + 1)


def _identity_at(req, bits):
    prep = _Prepared(req, bits)
    pts = _points(req, bits)
    E, _ = _eval_EN_raw(prep, pts)
    R, _ = _eval_RN_raw(prep, pts)
    with working_precision(bits):
        T, F = [], []
        residual, budget, ok = mpfr(0), mpfr(0), True
        eps = mpfr(2) ** (-(bits - 24))
        for (a, b), e, r in zip(pts, E, R):
            t, _ = _tail_raw(req.f, req.N, a, b, req.M)
            fv, ferr = _f_value(req.f, a, b, req.M)
            T.append(t)
            F.append(fv)
            res = abs(fv - (e - r + t))
            # E - R + tail is exactly the degree-M truncation of f, so only the
            # neglected degrees and rounding separate it from f
            trunc = req.f.tail_bound(max(abs(a), abs(b)), req.M + 1) + ferr
            scale = abs(e) + abs(r) + abs(t) + abs(fv) + 1
            allowed = trunc + eps * scale * (req.N + req.M) ** 2
            residual = max(residual, res)
            budget = max(budget, allowed)
            ok = ok and res <= allowed
    return E, R, T, F, residual, budget, ok


def verify_identity(req, tolerance=None, max_bits=MAX_PRECISION):
    """Check f = E_N - R_N + tail at every evaluation point.

    The budget is the truncation bound plus a rounding allowance (and at
    most ``tolerance`` when given). A violation is retried at doubled
    precision; IdentityViolation is raised once ``max_bits`` is reached.
    """
    bits = req.precision_bits
    while True:
        E, R, T, F, residual, budget, ok = _identity_at(req, bits)
        if tolerance is not None:
            ok = ok and residual <= tolerance
            budget = min(budget, mpfr(tolerance))
        if ok:
            return ReconstructionResult(
                _wrap(E, bits), _wrap(R, bits), _wrap(T, bits), _wrap(F, bits), residual, budget, bits
            )
        if 2 * bits > max_bits:
            raise IdentityViolation(
                f"|f - (E_N - R_N + tail)| = {float(residual):.3g} exceeds budget {float(budget):.3g} at {bits} bits"
            )
        bits *= 2


# --------------------------------------------------------------------------
# Convergence experiments
# --------------------------------------------------------------------------

@dataclass
class CurveRow:
    N: int
    sup_error: object
    mean_error: object
    precision_bits: int
    M: int
    wall_time_ms: int


@dataclass
class ConvergenceCurve:
    rows: list
    f: dict
    sequence: dict
    K: dict

    def errors(self):
        return [float(r.sup_error) for r in self.rows]

    def classification(self):
        return classify_curve(self.errors())

    def to_csv(self, include_time=True):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "sup_error", "mean_error", "precision_bits", "M", "wall_time_ms"])
        for r in self.rows:
            w.writerow([
                r.N,
                decimal_string(r.sup_error),
                decimal_string(r.mean_error),
                r.precision_bits,
                r.M,
                r.wall_time_ms if include_time else 0,
            ])
        return buf.getvalue()


DECREASING = "DECREASING"
NOT_DECREASING = "NOT-DECREASING"


def classify_curve(errors):
    """NOT-DECREASING when the last error exceeds half the first or any error exceeds 10x the first."""
    if len(errors) < 2:
        return DECREASING
    first = errors[0]
    if errors[-1] > 0.5 * first or any(e > 10 * first for e in errors[1:-1]):
        return NOT_DECREASING
    return DECREASING


def convergence_experiment(f, seq, N_list, K=None, M=None, precision_bits=None):
    """sup and mean of |E_N(f; eta) - f| over the polydisc grid, for each N."""
    K = K or Polydisc()
    bits = precision_bits or seq.precision_bits
    grid = K.grid(bits)
    rows = []
    for N in N_list:
        start = time.perf_counter()
        req = ReconstructionRequest(f, seq, N, grid, M, bits)
        prep = _Prepared(req, bits)
        E, _ = _eval_EN_raw(prep, grid)
        with working_precision(bits):
            errs = [abs(e - _f_value(f, a, b, req.M)[0]) for (a, b), e in zip(grid, E)]
            sup = max(errs)
            mean = sum(errs, mpfr(0)) / len(errs)
        ms = int(round(1000 * (time.perf_counter() - start)))
        rows.append(CurveRow(N, sup, mean, bits, req.M, ms))
    return ConvergenceCurve(rows, f.describe(), seq.provenance, K.to_json())


def remainder_curve(f, seq, N_list, K=None, M=None, precision_bits=None):
    """sup over the grid of |R_N(f; eta)| for each N."""
    K = K or Polydisc()
    bits = precision_bits or seq.precision_bits
    grid = K.grid(bits)
    out = []
    for N in N_list:
        prep = _Prepared(ReconstructionRequest(f, seq, N, grid, M, bits), bits)
        R, _ = _eval_RN_raw(prep, grid)
        with working_precision(bits):
            out.append(max(abs(r) for r in R))
    return out
