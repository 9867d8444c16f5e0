"""Finite unions of half-open real intervals.

Every piece is stored as ``[lo, hi)`` with ``lo < hi`` and endpoints that may
be ``-inf``/``+inf``.  Half-open pieces make the family closed under
complement, so membership of ``x`` in a set and in its complement are always
mutually exclusive.  The partition sets ``(-inf, 0)`` and ``[0, inf)`` map to
``[-inf, 0)`` and ``[0, inf)`` exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

INF = math.inf


def _normalize(pairs: Iterable[Sequence[float]]) -> tuple[tuple[float, float], ...]:
    cleaned = []
    for lo, hi in pairs:
        lo, hi = float(lo), float(hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval endpoints must not be NaN")
        if lo < hi:
            cleaned.append((lo, hi))
    cleaned.sort()
    merged: list[tuple[float, float]] = []
    for lo, hi in cleaned:
        if merged and lo <= merged[-1][1]:
            plo, phi = merged[-1]
            merged[-1] = (plo, max(phi, hi))
        else:
            merged.append((lo, hi))
    return tuple(merged)


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted, disjoint union of half-open intervals ``[lo, hi)``.

    Degenerate pieces (``lo >= hi``) are dropped and touching pieces merged, so
    two unions describing the same set compare equal.
    """

    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "intervals", _normalize(self.intervals))

    # constructors -----------------------------------------------------------
    @classmethod
    def of(cls, *pairs: Sequence[float]) -> "IntervalUnion":
        return cls(tuple(tuple(p) for p in pairs))

    @classmethod
    def full(cls) -> "IntervalUnion":
        return cls(((-INF, INF),))

    @classmethod
    def empty(cls) -> "IntervalUnion":
        return cls(())

    @classmethod
    def below(cls, x: float) -> "IntervalUnion":
        """The half-line ``(-inf, x)``."""
        return cls(((-INF, x),))

    @classmethod
    def above(cls, x: float) -> "IntervalUnion":
        """The half-line ``[x, inf)``."""
        return cls(((x, INF),))

    # queries ----------------------------------------------------------------
    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def lo(self) -> float:
        return self.intervals[0][0] if self.intervals else INF

    @property
    def hi(self) -> float:
        return self.intervals[-1][1] if self.intervals else -INF

    @property
    def length(self) -> float:
        return sum(hi - lo for lo, hi in self.intervals)

    @property
    def is_bounded(self) -> bool:
        return bool(self.intervals) and math.isfinite(self.lo) and math.isfinite(self.hi)

    def contains(self, x):
        """Membership test; vectorized over numpy arrays."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.intervals:
            out |= (x >= lo) & (x < hi)
        return out if out.ndim else bool(out)

    def __contains__(self, x) -> bool:
        return bool(self.contains(float(x)))

    def issubset(self, other: "IntervalUnion") -> bool:
        return self.difference(other).is_empty

    def breakpoints(self) -> list[float]:
        """Finite endpoints of all pieces, ascending."""
        pts = {e for piece in self.intervals for e in piece if math.isfinite(e)}
        return sorted(pts)

    # set algebra ------------------------------------------------------------
    def complement(self) -> "IntervalUnion":
        pieces = []
        cursor = -INF
        for lo, hi in self.intervals:
            if cursor < lo:
                pieces.append((cursor, lo))
            cursor = hi
        if cursor < INF:
            pieces.append((cursor, INF))
        return IntervalUnion(tuple(pieces))

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        return IntervalUnion(self.intervals + other.intervals)

    def intersect(self, other: "IntervalUnion") -> "IntervalUnion":
        pieces = []
        for alo, ahi in self.intervals:
            for blo, bhi in other.intervals:
                lo, hi = max(alo, blo), min(ahi, bhi)
                if lo < hi:
                    pieces.append((lo, hi))
        return IntervalUnion(tuple(pieces))

    def difference(self, other: "IntervalUnion") -> "IntervalUnion":
        return self.intersect(other.complement())

    def clip(self, lo: float, hi: float) -> "IntervalUnion":
        return self.intersect(IntervalUnion(((lo, hi),)))

    def reflect(self) -> "IntervalUnion":
        """The mirror image ``{-x : x in self}`` (endpoint convention kept half-open)."""
        return IntervalUnion(tuple((-hi, -lo) for lo, hi in self.intervals))

    __or__ = union
    __and__ = intersect
    __sub__ = difference

    def __invert__(self) -> "IntervalUnion":
        return self.complement()

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def __str__(self) -> str:
        if not self.intervals:
            return "{}"
        return " u ".join(f"[{lo:g}, {hi:g})" for lo, hi in self.intervals)

    def to_list(self) -> list[list[float | str]]:
        """JSON-friendly form; infinities become the strings ``"-inf"``/``"inf"``."""
        def enc(v):
            return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")
        return [[enc(lo), enc(hi)] for lo, hi in self.intervals]

    @classmethod
    def from_list(cls, data) -> "IntervalUnion":
        return cls(tuple((float(lo), float(hi)) for lo, hi in data))
