"""Numeration of a dense sequence by square annuli and nested perturbed nets.

Annulus C_1 is the closed square of half-side 1 and C_r (r >= 2) is the
square ring r - 1 < max(|Re|, |Im|) <= r, so boundary points belong to the
inner annulus. Inside each annulus the points are ordered level by level
along nested nets of spacing 2^-k; the annuli are then interleaved so that
C_{r+1} always holds about half as many points as C_r.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import gmpy2
import numpy as np

from ..errors import DensityError, IndexOverflow
from .permutation import Permutation

FIRST_LEVEL = 3


def sup_norm(z):
    return max(abs(z.real), abs(z.imag))


def annulus_index(z):
    """r with z in C_r."""
    s = sup_norm(z)
    if s <= 1:
        return 1
    return int(gmpy2.ceil(s))


def check_density(seq, half_width=2.0, cell=0.5):
    """True when the points hit every cell of a ``cell``-sided grid over the square of half-width ``half_width``."""
    z = seq.as_complex()
    m = int(round(2 * half_width / cell))
    inside = (np.abs(z.real) < half_width) & (np.abs(z.imag) < half_width)
    ix = np.floor((z.real[inside] + half_width) / cell).astype(int)
    iy = np.floor((z.imag[inside] + half_width) / cell).astype(int)
    hit = set(zip(ix.tolist(), iy.tolist()))
    return len(hit) == m * m


@dataclass
class NetPlan:
    """Per-level membership of nested nets; level k has spacing 2^-k."""

    region: dict
    levels: list = field(default_factory=list)  # [(k, [point indices added at level k])]

    def members(self, k):
        out = []
        for lev, idx in self.levels:
            if lev <= k:
                out.extend(idx)
        return out

    def separation_ok(self, coords, slack=1):
        """Members up to level k pairwise >= 2^-(k+slack) apart, for every recorded level."""
        for k, _ in self.levels:
            pts = np.array([coords[i] for i in self.members(k)])
            if len(pts) < 2:
                continue
            d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
            np.fill_diagonal(d, np.inf)
            if d.min() < 2.0 ** -(k + slack) * (1 - 1e-12):
                return False
        return True

    def nested(self):
        seen = set()
        for _, idx in self.levels:
            if seen & set(idx):
                return False
            seen.update(idx)
        return True

    def to_json(self):
        return {"region": self.region, "levels": [[k, list(idx)] for k, idx in self.levels]}


class _Grid:
    """Spatial hash of member coordinates for radius queries at one spacing."""

    def __init__(self, cell):
        self.cell = cell
        self.buckets = {}

    def key(self, x, y):
        return (math.floor(x / self.cell), math.floor(y / self.cell))

    def add(self, x, y):
        self.buckets.setdefault(self.key(x, y), []).append((x, y))

    def any_within(self, x, y, radius):
        cx, cy = self.key(x, y)
        reach = int(math.ceil(radius / self.cell))
        r2 = radius * radius
        for i in range(cx - reach, cx + reach + 1):
            for j in range(cy - reach, cy + reach + 1):
                for px, py in self.buckets.get((i, j), ()):
                    if (px - x) ** 2 + (py - y) ** 2 < r2:
                        return True
        return False


class AnnulusNumeration:
    """sigma^(r): the points of one annulus ordered along nested perturbed nets.

    Each level k adds, for every node of the 2^-k lattice lying in the
    region with no member within 2^-(k+1), the closest unused point within
    2^-(k+2) of the node that keeps 2^-(k+1) separation from all members.
    The first natural-order point not yet taken is forced into the level
    where it first fits, so every point is eventually reached.
    """

    def __init__(self, r, indices, coords, sup):
        self.r = r
        self.indices = list(indices)  # global 1-based indices, natural order
        self.coords = coords  # global index -> (x, y)
        self.sup = sup  # global index -> sup norm
        self.plan = NetPlan({"kind": "annulus", "r": r})
        self._used = set()
        self._members = []
        self._level = 0
        self._cursor = 0  # first natural-order position possibly unused

    def _inner_margin(self, i):
        return math.inf if self.r == 1 else self.sup[i] - (self.r - 1)

    def _in_region(self, i, k):
        return self.r == 1 or self.sup[i] - (self.r - 1) >= 2.0 ** -k

    def _next_forced(self):
        while self._cursor < len(self.indices) and self.indices[self._cursor] in self._used:
            self._cursor += 1
        if self._cursor == len(self.indices):
            return None
        return self.indices[self._cursor]

    def _needed_level(self, i):
        x, y = self.coords[i]
        dist = min([self._inner_margin(i)] + [math.hypot(x - a, y - b) for a, b in self._members_xy()])
        floor = max(self._level + 1, FIRST_LEVEL if not self._members else 1)
        if dist == math.inf:
            return floor
        if dist <= 0:
            raise DensityError(f"point {i} sits on a member or on the inner boundary")
        return max(floor, math.ceil(-math.log2(dist)))

    def _members_xy(self):
        return [self.coords[i] for i in self._members]

    def _build_level(self, k, forced, place_forced):
        eps = 2.0 ** -k
        grid = _Grid(eps / 2)
        for a, b in self._members_xy():
            grid.add(a, b)
        phantom = self.coords[forced] if forced is not None else None
        # candidate points grouped by their nearest lattice node
        nodes = {}
        for i in self.indices:
            if i in self._used or i == forced or not self._in_region(i, k):
                continue
            x, y = self.coords[i]
            nx, ny = round(x / eps), round(y / eps)
            d = math.hypot(x - nx * eps, y - ny * eps)
            if d <= eps / 4:
                nodes.setdefault((nx, ny), []).append((d, i))
        added = []
        for node in sorted(nodes):
            px, py = node[0] * eps, node[1] * eps
            if grid.any_within(px, py, eps / 2):
                continue
            for d, i in sorted(nodes[node]):
                x, y = self.coords[i]
                if grid.any_within(x, y, eps / 2):
                    continue
                if phantom is not None and math.hypot(x - phantom[0], y - phantom[1]) < eps / 2:
                    continue
                grid.add(x, y)
                added.append(i)
                self._used.add(i)
                break
        if place_forced:
            added.append(forced)
            self._used.add(forced)
        added.sort(key=lambda i: (self.coords[i], i))
        self._members.extend(added)
        self.plan.levels.append((k, added))
        return added

    def levels(self):
        """Yield (k, new member indices) level by level until the pool is used up."""
        while True:
            forced = self._next_forced()
            if forced is None:
                return
            target = self._needed_level(forced)
            while self._level + 1 < target:
                self._level += 1
                # lower levels only complete the net, keeping room around ``forced``
                yield self._level, self._build_level(self._level, forced, False)
            self._level = target
            yield target, self._build_level(target, forced, True)

    def __iter__(self):
        for _, added in self.levels():
            yield from added


def interleave_counts_step(counts):
    """Annulus that receives the next point under the three-case rule, given current counts by r."""
    if not counts or counts.get(1, 0) == 0:
        return 1
    r_top = max(r for r, c in counts.items() if c > 0)
    if counts[r_top] == 2:
        return r_top + 1
    for s in range(r_top, 1, -1):
        if counts.get(s - 1, 0) == 2 * counts.get(s, 0) + 2:
            return s
    return 1


def induc1_holds(counts):
    """c_r/2 - 1 <= c_{r+1} <= c_r/2 for every r (integer form)."""
    top = max((r for r, c in counts.items() if c > 0), default=0)
    for r in range(1, top + 1):
        c, nxt = counts.get(r, 0), counts.get(r + 1, 0)
        if not (c - 2 <= 2 * nxt <= c):
            return False
    return True


class SigmaC:
    """Pulls from the per-annulus numerations according to the three-case rule."""

    def __init__(self, seq):
        vals = seq.values
        self.coords = {j: (float(v.real), float(v.imag)) for j, v in enumerate(vals, 1)}
        self.sup = {j: float(sup_norm(v)) for j, v in enumerate(vals, 1)}
        self.annulus_of = {j: annulus_index(v) for j, v in enumerate(vals, 1)}
        by_r = {}
        for j in range(1, len(vals) + 1):
            by_r.setdefault(self.annulus_of[j], []).append(j)
        self.numerations = {
            r: AnnulusNumeration(r, idx, self.coords, self.sup) for r, idx in sorted(by_r.items())
        }
        self._iters = {}
        self.counts = {}

    def _pull(self, r):
        if r not in self.numerations:
            raise IndexOverflow(f"no materialized points in annulus C_{r}; materialize a longer dense prefix")
        it = self._iters.setdefault(r, iter(self.numerations[r]))
        try:
            return next(it)
        except StopIteration:
            raise IndexOverflow(f"annulus C_{r} exhausted; materialize a longer dense prefix") from None

    def __iter__(self):
        while True:
            r = interleave_counts_step(self.counts)
            j = self._pull(r)
            self.counts[r] = self.counts.get(r, 0) + 1
            yield j

    def plans(self):
        return {r: num.plan for r, num in self.numerations.items()}


def build_sigma_c(seq, n=None, require_density=True):
    """sigma_c over a materialized dense prefix; the first ``n`` values are pulled eagerly."""
    if require_density and not check_density(seq):
        raise DensityError("sequence misses a cell of the coarse grid over [-2,2]^2; pass require_density=False to override")
    engine = SigmaC(seq)
    sigma = Permutation(lambda: iter(engine), {"kind": "sigma_c", "pool": len(seq)})
    sigma.engine = engine
    if n is not None:
        sigma.prefix(n)
    return sigma


def annulus_counts(seq, N=None):
    """{r: number of the first N points lying in C_r}."""
    counts = {}
    for v in seq.values[: N if N is not None else len(seq)]:
        r = annulus_index(v)
        counts[r] = counts.get(r, 0) + 1
    return counts


def pool_size_for(n):
    """Dense prefix length comfortably covering the annuli and net levels reached by n points."""
    return max(2000, 16 * n)
