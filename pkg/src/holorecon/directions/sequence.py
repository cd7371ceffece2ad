"""Direction sequences and their JSON-lines serialization."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr
from scipy.spatial import cKDTree

from ..errors import DuplicateNode, IndexOverflow
from ..numerics import (
    PrecisionComplex,
    decimal_string,
    default_precision,
    to_mpc,
    working_precision,
)


@dataclass(frozen=True, eq=False)
class DirectionSequence:
    """Materialized prefix (eta_1, ..., eta_n) of a sequence of line directions.

    ``values`` holds raw gmpy2 ``mpc`` numbers rounded at ``precision_bits``.
    ``provenance`` is a JSON-able descriptor of how the points were made;
    when ``rebuild`` is set, :meth:`at_precision` regenerates the points from
    scratch instead of just re-rounding them.
    """

    values: tuple
    precision_bits: int
    provenance: dict = field(default_factory=dict)
    rebuild: object = field(default=None, repr=False)

    def __post_init__(self):
        vals = tuple(self.values)
        object.__setattr__(self, "values", vals)
        for j, v in enumerate(vals, 1):
            if not (gmpy2.is_finite(v.real) and gmpy2.is_finite(v.imag)):
                raise ValueError(f"eta_{j} is not a finite direction")
        seen = {}
        for j, v in enumerate(vals, 1):
            key = (v.real, v.imag)
            if key in seen:
                raise DuplicateNode(f"eta_{seen[key]} and eta_{j} coincide")
            seen[key] = j

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def eta(self, j):
        """1-based access, matching the mathematical indexing."""
        if not 1 <= j <= len(self.values):
            raise IndexOverflow(f"eta_{j} requested but only {len(self.values)} points are materialized")
        return self.values[j - 1]

    @property
    def points(self):
        return tuple(PrecisionComplex.from_mpc(v, self.precision_bits) for v in self.values)

    def prefix(self, n):
        if n > len(self.values):
            raise IndexOverflow(f"prefix of length {n} requested, {len(self.values)} materialized")
        return DirectionSequence(self.values[:n], self.precision_bits, {**self.provenance, "prefix": n}, None)

    def at_precision(self, bits):
        if bits == self.precision_bits:
            return self
        if self.rebuild is not None:
            fresh = self.rebuild(bits)
            if len(fresh) != len(self):
                raise RuntimeError("rebuild changed the sequence length")
            return fresh
        with working_precision(bits):
            vals = tuple(mpc(v, precision=bits) for v in self.values)
        return DirectionSequence(vals, bits, self.provenance, None)

    def as_complex(self):
        return np.array([complex(v) for v in self.values], dtype=complex)

    @cached_property
    def distinctness_gap(self):
        """Minimum pairwise distance over the materialized prefix (inf for n < 2)."""
        n = len(self.values)
        if n < 2:
            return mpfr("inf")
        with working_precision(self.precision_bits):
            if n <= 400:
                return min(
                    abs(self.values[a] - self.values[b]) for a in range(n) for b in range(a + 1, n)
                )
            # float nearest-neighbour candidates, then exact distances
            xy = np.column_stack([self.as_complex().real, self.as_complex().imag])
            tree = cKDTree(xy)
            _, idx = tree.query(xy, k=2)
            return min(abs(self.values[a] - self.values[int(idx[a, 1])]) for a in range(n))

    def bounding_box(self):
        z = self.as_complex()
        if len(z) == 0:
            return None
        return [float(z.real.min()), float(z.real.max()), float(z.imag.min()), float(z.imag.max())]

    def summary(self):
        gap = self.distinctness_gap
        return {
            "count": len(self),
            "min_gap": decimal_string(gap) if gmpy2.is_finite(gap) else "inf",
            "bounding_box": self.bounding_box(),
            "precision_bits": self.precision_bits,
        }

    def __eq__(self, other):
        if not isinstance(other, DirectionSequence):
            return NotImplemented
        return self.values == other.values

    def __hash__(self):
        return hash(self.values)


def from_points(points, precision_bits=None, provenance=None):
    """Build a sequence from numbers, strings, (re, im) pairs or PrecisionComplex."""
    bits = default_precision() if precision_bits is None else precision_bits
    with working_precision(bits):
        vals = tuple(to_mpc(p, bits) for p in points)
    return DirectionSequence(vals, bits, provenance or {"generator": "explicit"})


def point_records(seq):
    for j, v in enumerate(seq.values, 1):
        yield {
            "index": j,
            "re": decimal_string(v.real),
            "im": decimal_string(v.imag),
            "precision_bits": seq.precision_bits,
        }


def dumps_jsonl(seq, meta=None):
    """JSON lines: an optional leading ``{"meta": ...}`` record, then one record per point."""
    lines = []
    if meta is not None:
        lines.append(json.dumps({"meta": meta}, sort_keys=True))
    lines.extend(json.dumps(rec, sort_keys=True) for rec in point_records(seq))
    return "\n".join(lines) + "\n"


def loads_jsonl(text):
    """Inverse of :func:`dumps_jsonl`; returns ``(sequence, meta)``."""
    meta = None
    recs = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        if "meta" in obj:
            meta = obj["meta"]
            continue
        recs.append(obj)
    recs.sort(key=lambda r: r["index"])
    if [r["index"] for r in recs] != list(range(1, len(recs) + 1)):
        raise ValueError("sequence file indices must be 1..n without gaps")
    bits = max((int(r["precision_bits"]) for r in recs), default=default_precision())
    with working_precision(bits):
        vals = tuple(mpc(mpfr(r["re"], bits), mpfr(r["im"], bits)) for r in recs)
    prov = (meta or {}).get("provenance", {"generator": "file"})
    return DirectionSequence(vals, bits, prov), meta


def read_jsonl(path):
    with open(path) as fh:
        return loads_jsonl(fh.read())
