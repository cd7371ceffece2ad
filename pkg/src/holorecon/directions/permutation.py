"""Lazily materialized permutations of the positive integers."""
from __future__ import annotations

import threading

from ..errors import IndexOverflow


class Permutation:
    """sigma: {1, 2, ...} -> {1, 2, ...}, pulled on demand from a generator.

    ``source`` is a zero-argument callable returning an iterator of the
    values sigma(1), sigma(2), ...; a finite iterator means only that many
    values can ever be materialized.  Injectivity is enforced while
    materializing. The memo is guarded by a lock so a shared instance is
    safe, but materialized prefixes are the intended thing to share.
    """

    def __init__(self, source, description=None):
        self._iter = iter(source())
        self._prefix = []
        self._seen = set()
        self._exhausted = False
        self._lock = threading.Lock()
        self.description = dict(description or {})

    def _pull(self, n):
        with self._lock:
            while len(self._prefix) < n and not self._exhausted:
                try:
                    v = int(next(self._iter))
                except StopIteration:
                    self._exhausted = True
                    break
                if v < 1:
                    raise ValueError(f"permutation produced non-positive index {v}")
                if v in self._seen:
                    raise ValueError(
                        f"permutation is not injective: {v} repeated at position {len(self._prefix) + 1}"
                    )
                self._seen.add(v)
                self._prefix.append(v)
        if len(self._prefix) < n:
            raise IndexOverflow(f"permutation can only be materialized to length {len(self._prefix)}")

    def __call__(self, j):
        self._pull(j)
        return self._prefix[j - 1]

    forward = __call__

    def prefix(self, n):
        """[sigma(1), ..., sigma(n)] as a fresh list."""
        self._pull(n)
        return list(self._prefix[:n])

    @property
    def materialized_prefix(self):
        return list(self._prefix)

    def frontier(self):
        """Largest m with {1..m} contained in the materialized values (surjectivity witness)."""
        m = 0
        while m + 1 in self._seen:
            m += 1
        return m

    def __repr__(self):
        return f"Permutation({self.description or ''}, materialized={len(self._prefix)})"


def identity():
    def gen():
        j = 1
        while True:
            yield j
            j += 1

    return Permutation(gen, {"kind": "identity"})


def from_list(values, extend_identity=True):
    """Finite rearrangement; beyond its length it continues as the identity."""
    values = [int(v) for v in values]
    if sorted(values) != list(range(1, len(values) + 1)) and extend_identity:
        raise ValueError("a finitely supported permutation must rearrange 1..n")

    def gen():
        yield from values
        if extend_identity:
            j = len(values) + 1
            while True:
                yield j
                j += 1

    return Permutation(gen, {"kind": "explicit", "values": values})


def transposition(a, b):
    n = max(a, b)
    vals = list(range(1, n + 1))
    vals[a - 1], vals[b - 1] = vals[b - 1], vals[a - 1]
    perm = from_list(vals)
    perm.description = {"kind": "transposition", "pair": [a, b]}
    return perm
