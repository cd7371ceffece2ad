"""Numerical checks of the quantitative bounds behind the convergence results.

Constants that the theory only asserts to exist are fitted from data; each
check then tests the functional form of its bound with the fitted constant.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpfr
from scipy import integrate

from . import kernels
from .directions.generators import homography, reciprocal
from .directions.sigma_c import annulus_counts, annulus_index, induc1_holds
from .divided_differences import BOUNDED, GROWING, INCONCLUSIVE, MAX_PRECISION, criterion_matrix
from .errors import PoleTooClose
from .numerics import working_precision


@dataclass
class BoundCheckReport:
    name: str
    range: list
    observed_min: float
    observed_max: float
    fitted_constant: float
    passed: bool
    margin: float
    details: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "name": self.name,
            "range": list(self.range),
            "observed_min": self.observed_min,
            "observed_max": self.observed_max,
            "fitted_constant": self.fitted_constant,
            "pass": self.passed,
            "margin": self.margin,
            "details": self.details,
        }

    def table(self):
        rows = [
            ("name", self.name),
            ("range", f"{self.range[0]}..{self.range[-1]}" if self.range else "-"),
            ("observed_min", f"{self.observed_min:.6g}"),
            ("observed_max", f"{self.observed_max:.6g}"),
            ("fitted_constant", f"{self.fitted_constant:.6g}"),
            ("margin", f"{self.margin:.6g}"),
            ("pass", "yes" if self.passed else "no"),
        ]
        for key in sorted(self.details):
            val = self.details[key]
            if isinstance(val, (int, float, str, bool)):
                rows.append((key, f"{val:.6g}" if isinstance(val, float) else str(val)))
            else:
                rows.append((key, json.dumps(val, sort_keys=True)))
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def _log(x):
    return float(gmpy2.log(x))


def check_product_lower_bound(seq, p_max=80, rate=16):
    """min_q prod_{j<=p+1, j!=q} |eta_q - eta_j| >= exp(-rate p), from the first p where it starts to hold.

    The margin is min over the verified range of log(product) + rate p.
    """
    if p_max > len(seq) - 1:
        raise ValueError(f"p_max = {p_max} needs {p_max + 1} points, sequence has {len(seq)}")
    with working_precision(seq.precision_bits):
        mins = kernels.prefix_min_products(list(seq.values[: p_max + 1]))
    slack = [_log(mins[p]) + rate * p for p in range(1, p_max + 1)]
    p_eta = None
    for start in range(1, p_max + 1):
        if all(s >= 0 for s in slack[start - 1 :]):
            p_eta = start
            break
    verified = slack[p_eta - 1 :] if p_eta is not None else slack
    logs = [_log(mins[p]) for p in range(1, p_max + 1)]
    return BoundCheckReport(
        name="node-product-lower-bound",
        range=[1, p_max],
        observed_min=min(logs),
        observed_max=max(logs),
        fitted_constant=float(p_eta) if p_eta is not None else math.inf,
        passed=p_eta is not None,
        margin=min(verified),
        details={"p_eta": p_eta, "rate": rate, "log_min_products": [round(v, 6) for v in logs]},
    )


def _products(seq, N):
    with working_precision(seq.precision_bits):
        return kernels.abs_products(list(seq.values[:N]))


def fit_annulus_constants(seq, N_list):
    """B with min_p prod >= 1/(3B)^N, and D with prod >= r^N/(B D)^N for points of C_r, r >= 3."""
    B = 0.0
    per_N = {}
    prods = {}
    for N in N_list:
        pr = _products(seq, N)
        prods[N] = pr
        b = math.exp(-min(_log(x) for x in pr) / N) / 3
        per_N[N] = b
        B = max(B, b)
    D = 0.0
    for N in N_list:
        for p, v in enumerate(seq.values[:N]):
            r = annulus_index(v)
            if r >= 3:
                D = max(D, r / (B * math.exp(_log(prods[N][p]) / N)))
    return B, D, per_N, prods


def check_annulus_products(seq, N_list, stability=0.10):
    """Fit the product envelopes on a sigma_c sequence and check they do not drift with N."""
    N_list = sorted(N_list)
    B, D, per_N, prods = fit_annulus_constants(seq, N_list)
    half = N_list[: max(1, (len(N_list) + 1) // 2)]
    B_half, D_half, _, _ = fit_annulus_constants(seq, half)
    # re-verify both envelopes with the fitted constants
    slack = []
    for N in N_list:
        lo = -N * math.log(3 * B)
        for p, v in enumerate(seq.values[:N]):
            lp = _log(prods[N][p])
            slack.append(lp - lo)
            r = annulus_index(v)
            if r >= 3 and D > 0:
                slack.append(lp - N * (math.log(r) - math.log(B * D)))
    drift_B = abs(B - B_half) / B if B else 0.0
    drift_D = abs(D - D_half) / D if D else 0.0
    margin = min(slack) if slack else 0.0
    return BoundCheckReport(
        name="annulus-node-products",
        range=N_list,
        observed_min=min(_log(min(prods[N])) for N in N_list),
        observed_max=max(_log(max(prods[N])) for N in N_list),
        fitted_constant=B,
        passed=margin >= -1e-9 and drift_B < stability and drift_D < stability,
        margin=margin,
        details={
            "B_hat": B,
            "D_hat": D,
            "B_hat_half_range": B_half,
            "D_hat_half_range": D_half,
            "B_per_N": {str(N): b for N, b in per_N.items()},
        },
    )


def check_net_statistics(seq, N_list, tolerance=0.25, r_check=5, log_slack=2):
    """Annulus counts against N/2^r, r_N against log2 N, and the halving invariant at every prefix."""
    N_list = sorted(N_list)
    worst_dev = 0.0
    per_N = {}
    ok = True
    for N in N_list:
        counts = annulus_counts(seq, N)
        r_N = max(counts)
        devs = {}
        for r in range(1, r_check + 1):
            target = N / 2 ** r
            if target >= 8:
                devs[str(r)] = abs(counts.get(r, 0) - target) / target
        dev = max(devs.values(), default=0.0)
        if N >= 2 ** (r_check + 3):
            worst_dev = max(worst_dev, dev)
            ok = ok and dev <= tolerance and abs(r_N - math.log2(N)) <= log_slack
        per_N[str(N)] = {
            "counts": {str(r): c for r, c in sorted(counts.items())},
            "r_N": r_N,
            "log2_N": math.log2(N),
            "max_relative_deviation": dev,
        }
    first_bad = None
    running = {}
    for j, v in enumerate(seq.values[: N_list[-1]], 1):
        r = annulus_index(v)
        running[r] = running.get(r, 0) + 1
        if not induc1_holds(running):
            first_bad = j
            break
    ok = ok and first_bad is None
    return BoundCheckReport(
        name="annulus-net-statistics",
        range=N_list,
        observed_min=min(p["max_relative_deviation"] for p in per_N.values()),
        observed_max=max(p["max_relative_deviation"] for p in per_N.values()),
        fitted_constant=tolerance,
        passed=ok,
        margin=tolerance - worst_dev,
        details={"per_N": per_N, "halving_invariant_first_failure": first_bad},
    )


@dataclass
class HomographyCriterion:
    reports: list
    labels: list
    combined_verdict: str
    skipped: list

    def to_json(self):
        return {
            "combined_verdict": self.combined_verdict,
            "maps": [{"map": lab, "report": rep.to_json()} for lab, rep in zip(self.labels, self.reports)],
            "skipped": self.skipped,
        }


def combine_verdicts(verdicts):
    if any(v == GROWING for v in verdicts):
        return GROWING
    if verdicts and all(v == BOUNDED for v in verdicts):
        return BOUNDED
    return INCONCLUSIVE


def criterion_under_homography(seq, u_list, P, Q, delta=None, include_reciprocal=True, max_bits=MAX_PRECISION):
    """criterion_matrix on seq itself, on h_u(seq) for each u, and on 1/seq.

    A pole too close to the points raises PoleTooClose for an explicit u;
    the reciprocal map is skipped (and recorded) when 0 is among the points.
    """
    reports = [criterion_matrix(seq, P, Q, max_bits=max_bits, label="identity")]
    labels = ["identity"]
    skipped = []
    for u in u_list:
        image = homography(seq, u, delta)
        lab = f"h_u u={complex(u)}"
        reports.append(criterion_matrix(image, P, Q, max_bits=max_bits, label=lab))
        labels.append(lab)
    if include_reciprocal:
        try:
            image = reciprocal(seq, delta)
        except PoleTooClose as exc:
            skipped.append({"map": "reciprocal", "reason": str(exc)})
        else:
            reports.append(criterion_matrix(image, P, Q, max_bits=max_bits, label="reciprocal"))
            labels.append("reciprocal")
    return HomographyCriterion(reports, labels, combine_verdicts([r.verdict for r in reports]), skipped)


def riemann_constant_check(tol=1e-12, levels=range(4, 16, 2)):
    """Integrals of t ln t and t ln(t/3) over [0, 1] against -1/4 and -(1/4 + ln(3)/2)."""
    targets = {
        "t ln t": (lambda t: t * math.log(t) if t > 0 else 0.0, -0.25),
        "t ln(t/3)": (lambda t: t * math.log(t / 3) if t > 0 else 0.0, -(0.25 + math.log(3) / 2)),
    }
    errs = {}
    riemann = {}
    for name, (g, exact) in targets.items():
        val, _ = integrate.quad(g, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)
        errs[name] = abs(val - exact)
        seq = []
        for r in levels:
            n = 2 ** r
            s = sum(g((i + 0.5) / n) for i in range(n)) / n
            seq.append(abs(s - exact))
        riemann[name] = seq
    converging = all(all(b < a for a, b in zip(s, s[1:])) for s in riemann.values())
    worst = max(errs.values())
    return BoundCheckReport(
        name="riemann-integral-anchors",
        range=[2 ** r for r in levels],
        observed_min=min(errs.values()),
        observed_max=worst,
        fitted_constant=0.25 + math.log(3) / 2,
        passed=worst <= tol and converging,
        margin=tol - worst,
        details={"quadrature_error": errs, "midpoint_sum_errors": riemann},
    )
