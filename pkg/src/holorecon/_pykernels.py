"""Pure-Python hot loops. ``_ckernels.pyx`` is a compiled copy of this module.

All functions operate on gmpy2 ``mpc``/``mpfr`` objects and round at the
caller's active gmpy2 context. Keep the two files in lock step.
"""
from gmpy2 import mpc, mpfr, norm

from .errors import DuplicateNode

IMPLEMENTATION = "python"


def newton_deltas(nodes, values):
    """d[p] = Delta_p(h)(eta_{p+1}) by the two-point recursion."""
    n = len(nodes)
    d = list(values)
    for p in range(1, n):
        xp = nodes[p - 1]
        dp = d[p - 1]
        for i in range(p, n):
            diff = nodes[i] - xp
            if diff == 0:
                raise DuplicateNode(f"nodes {p} and {i + 1} coincide")
            d[i] = (d[i] - dp) / diff
    return d


def closed_form_table(nodes, value_rows):
    """out[r][p] = sum_{a<=p} h_r(eta_a) / prod_{j<=p, j!=a} (eta_a - eta_j).

    Denominators are updated incrementally, so the whole table costs
    O(n^2 * len(value_rows)).
    """
    n = len(nodes)
    dens = []
    out = [[] for _ in value_rows]
    for p in range(n):
        x = nodes[p]
        newden = mpc(1)
        for a in range(p):
            diff = nodes[a] - x
            if diff == 0:
                raise DuplicateNode(f"nodes {a + 1} and {p + 1} coincide")
            dens[a] = dens[a] * diff
            newden = newden * (-diff)
        dens.append(newden)
        for r in range(len(value_rows)):
            vals = value_rows[r]
            s = mpc(0)
            for a in range(p + 1):
                s = s + vals[a] / dens[a]
            out[r].append(s)
    return out


def prefix_min_products(nodes):
    """m[p] = min_{q<=p+1} prod_{j<=p+1, j!=q} |eta_q - eta_j| for p = 0..n-1."""
    n = len(nodes)
    prods = []
    out = []
    for p in range(n):
        x = nodes[p]
        newp = mpfr(1)
        for a in range(p):
            d = abs(nodes[a] - x)
            prods[a] = prods[a] * d
            newp = newp * d
        prods.append(newp)
        out.append(min(prods))
    return out


def abs_products(nodes):
    """prod_{j!=q} |eta_q - eta_j| for every q."""
    n = len(nodes)
    out = []
    for q in range(n):
        x = nodes[q]
        acc = mpfr(1)
        for j in range(n):
            if j != q:
                acc = acc * abs(x - nodes[j])
        out.append(acc)
    return out


def line_sums(triangle, eta):
    """c[m] = sum_k triangle[m][k] eta^k for every row m."""
    out = []
    for row in triangle:
        acc = mpc(0)
        for k in range(len(row) - 1, -1, -1):
            acc = acc * eta + row[k]
        out.append(acc)
    return out


def en_weights(nodes):
    """w[p][q] = (1 + eta_p conj(eta_q)) / (1 + |eta_q|^2) / prod_{j=p..N-1, j!=q} (eta_q - eta_j).

    Zero-based; only q >= p entries are meaningful.
    """
    n = len(nodes)
    w = [[mpc(0)] * n for _ in range(n)]
    for q in range(n):
        xq = nodes[q]
        cq = xq.conjugate()
        nq = 1 + norm(xq)
        t = mpc(1)
        for j in range(q + 1, n):
            diff = xq - nodes[j]
            if diff == 0:
                raise DuplicateNode(f"nodes {q + 1} and {j + 1} coincide")
            t = t * diff
        for p in range(q, -1, -1):
            if p < q:
                diff = xq - nodes[p]
                if diff == 0:
                    raise DuplicateNode(f"nodes {p + 1} and {q + 1} coincide")
                t = t * diff
            w[p][q] = (1 + nodes[p] * cq) / nq / t
    return w


def _shifted_sums(c, x, smin):
    # s[k] = sum_{m >= smin + k} c[m] x^{m - smin - k}, backward Horner
    M = len(c) - 1
    acc = mpc(0)
    out = [mpc(0)] * (max(M - smin, -1) + 1)
    for m in range(M, smin - 1, -1):
        acc = acc * x + c[m]
        out[m - smin] = acc
    return out


def en_eval(nodes, weights, line_coeffs, z1, z2):
    """E_N(f; eta)(z1, z2) with inner series truncated at len(line_coeffs[q]) - 1."""
    n = len(nodes)
    xs = []
    shifted = []
    for q in range(n):
        eq = nodes[q]
        x = (z2 + eq.conjugate() * z1) / (1 + norm(eq))
        xs.append(x)
        shifted.append(_shifted_sums(line_coeffs[q], x, 0))
    total = mpc(0)
    pref = mpc(1)
    for p in range(n - 1, -1, -1):
        s = n - 1 - p
        inner = mpc(0)
        wp = weights[p]
        for q in range(p, n):
            sh = shifted[q]
            if s < len(sh):
                inner = inner + wp[q] * sh[s]
        total = total + pref * inner
        pref = pref * (z1 - nodes[p] * z2)
    return total


def rn_eval(nodes, line_coeffs, z1, z2):
    """R_N(f; eta)(z1, z2) with the k+l >= N series truncated at len(line_coeffs[p]) - 1."""
    n = len(nodes)
    total = mpc(0)
    for p in range(n):
        ep = nodes[p]
        y = (z2 + ep.conjugate() * z1) / (1 + norm(ep))
        c = line_coeffs[p]
        acc = mpc(0)
        for m in range(len(c) - 1, n - 1, -1):
            acc = acc * y + c[m]
        inner = acc * y
        lag = mpc(1)
        for j in range(n):
            if j != p:
                diff = ep - nodes[j]
                if diff == 0:
                    raise DuplicateNode(f"nodes {p + 1} and {j + 1} coincide")
                lag = lag * (z1 - nodes[j] * z2) / diff
        total = total + lag * inner
    return total


def homogeneous_parts(triangle, z1, z2):
    """H[m] = sum_{k+l=m} a_{k,l} z1^k z2^l."""
    M = len(triangle) - 1
    p1 = [mpc(1)]
    p2 = [mpc(1)]
    for _ in range(M):
        p1.append(p1[-1] * z1)
        p2.append(p2[-1] * z2)
    out = []
    for m in range(M + 1):
        row = triangle[m]
        acc = mpc(0)
        for k in range(m + 1):
            a = row[k]
            if a != 0:
                acc = acc + a * p1[k] * p2[m - k]
        out.append(acc)
    return out
