"""Partitions of the line into modes with nested interior regions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..intervals import IntervalUnion


@dataclass(frozen=True)
class Mode:
    """One piece ``S`` of a partition with ``G <= W <= S`` and a privileged point in ``G``.

    ``G`` is the deep interior, ``W`` a buffer around it; the tail ``S - W``
    is derived on demand and never stored.
    """

    S: IntervalUnion
    G: IntervalUnion
    W: IntervalUnion
    privileged_point: float

    def __post_init__(self):
        if not self.G.issubset(self.W):
            raise ConfigError(f"G = {self.G} is not contained in W = {self.W}")
        if not self.W.issubset(self.S):
            raise ConfigError(f"W = {self.W} is not contained in S = {self.S}")
        if self.privileged_point not in self.G:
            raise ConfigError(f"privileged point {self.privileged_point} is not in G = {self.G}")

    @property
    def tail(self) -> IntervalUnion:
        return self.S.difference(self.W)

    def to_dict(self) -> dict:
        return {
            "S": self.S.to_list(),
            "G": self.G.to_list(),
            "W": self.W.to_list(),
            "privileged_point": self.privileged_point,
        }


@dataclass(frozen=True)
class Partition:
    """Disjoint modes covering the whole line."""

    modes: tuple[Mode, ...]

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.modes:
            raise ConfigError("a partition needs at least one mode")
        cover = IntervalUnion.empty()
        for m in self.modes:
            if not cover.intersect(m.S).is_empty:
                raise ConfigError("partition modes overlap")
            cover = cover.union(m.S)
        if cover != IntervalUnion.full():
            raise ConfigError(f"partition modes cover {cover}, not the whole line")

    @property
    def k(self) -> int:
        return len(self.modes)

    def locate(self, x):
        """Index of the mode containing ``x``; vectorized over arrays."""
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, -1, dtype=int)
        for i, m in enumerate(self.modes):
            out = np.where(m.S.contains(x), i, out)
        return int(out) if out.ndim == 0 else out

    def union_G(self) -> IntervalUnion:
        out = IntervalUnion.empty()
        for m in self.modes:
            out = out.union(m.G)
        return out

    def union_W(self) -> IntervalUnion:
        out = IntervalUnion.empty()
        for m in self.modes:
            out = out.union(m.W)
        return out

    def to_dict(self) -> dict:
        return {"k": self.k, "modes": [m.to_dict() for m in self.modes]}


def two_mode_partition(cut: float = 0.0, g_depth: float = 3.0, w_depth: float = 4.0,
                       centers: tuple[float, float] = (-1.0, 1.0)) -> Partition:
    """Split the line at ``cut`` into ``(-inf, cut)`` and ``[cut, inf)``.

    Each side gets ``G`` reaching ``g_depth`` and ``W`` reaching ``w_depth``
    away from the cut.  The privileged point is the mixture centre on that
    side when it lies in ``G``, otherwise the middle of ``G``.
    """
    if not 0 < g_depth <= w_depth:
        raise ConfigError("need 0 < g_depth <= w_depth")
    left_G = IntervalUnion.of((cut - g_depth, cut))
    right_G = IntervalUnion.of((cut, cut + g_depth))

    def point(G, c):
        return float(c) if c in G else 0.5 * (G.lo + G.hi)

    left = Mode(IntervalUnion.below(cut), left_G,
                IntervalUnion.of((cut - w_depth, cut)), point(left_G, centers[0]))
    right = Mode(IntervalUnion.above(cut), right_G,
                 IntervalUnion.of((cut, cut + w_depth)), point(right_G, centers[1]))
    return Partition((left, right))


def symmetric_partition() -> Partition:
    """Default partition: ``S = (-inf, 0)``, ``G = [-3, 0)``, ``W = [-4, 0)`` and its mirror image."""
    return two_mode_partition(0.0, 3.0, 4.0)


def literal_partition(sigma: float, g_exponent: float = 9.0, w_exponent: float = 10.0) -> Partition:
    """Regions at their asymptotic widths ``G = (-sigma^-9, 0)``, ``W = (-sigma^-10, 0)``.

    These are astronomically wide for small ``sigma``; the widths are capped
    at 1e300 so the endpoints stay finite.
    """
    g = min(sigma ** -g_exponent, 1e300)
    w = min(sigma ** -w_exponent, 1e300)
    if not math.isfinite(g) or not math.isfinite(w):
        raise ConfigError("region widths overflow")
    return two_mode_partition(0.0, g, w)
