"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--bits 256]

Both implementations run on identical inputs; results are also compared so a
speedup never hides a disagreement.
"""
import argparse
import time

import gmpy2

from holorecon import kernels
from holorecon.directions import gen_kappa, gen_square_net_sequence
from holorecon.numerics import builtin_catalog, line_derivative_sum_raw, working_precision


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _same(a, b):
    if isinstance(a, (list, tuple)):
        return len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))
    return a == b


def cases(bits):
    nodes40 = list(gen_square_net_sequence(41, bits).values)
    nodes16 = list(gen_kappa(16, bits).values)
    with working_precision(bits):
        rows = [[v ** q for v in nodes40] for q in range(9)]
        f = builtin_catalog()[3]
        coeffs = [[line_derivative_sum_raw(f, v, m) for m in range(41)] for v in nodes16]
        z1, z2 = gmpy2.mpc("0.3+0.1j"), gmpy2.mpc("-0.2+0.25j")
    return {
        "newton_deltas (n=41)": lambda k: k.newton_deltas(nodes40, rows[3]),
        "closed_form_table (41x9)": lambda k: k.closed_form_table(nodes40, rows),
        "prefix_min_products (n=41)": lambda k: k.prefix_min_products(nodes40),
        "abs_products (n=41)": lambda k: k.abs_products(nodes40),
        "en_weights (n=16)": lambda k: k.en_weights(nodes16),
        "rn_eval (N=16, M=40)": lambda k: k.rn_eval(nodes16, coeffs, z1, z2),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--bits", type=int, default=256)
    args = ap.parse_args()
    if kernels.compiled_kernels is None:
        raise SystemExit("compiled kernels not built; run `pip install -e . --no-build-isolation` first")
    print(f"{'kernel':<28} {'python ms':>10} {'cython ms':>10} {'speedup':>8}  agree")
    for name, call in cases(args.bits).items():
        with working_precision(args.bits):
            tp, rp = _best(lambda: call(kernels.python_kernels), args.repeat)
            tc, rc = _best(lambda: call(kernels.compiled_kernels), args.repeat)
        print(f"{name:<28} {tp * 1e3:>10.2f} {tc * 1e3:>10.2f} {tp / tc:>8.2f}  {_same(rp, rc)}")


if __name__ == "__main__":
    main()
