"""Target densities on the real line.

All densities are normalized and evaluated in log space.  The two-mode
Gaussian mixture has closed-form interval masses and an exact sampler; a
restriction of it to an :class:`IntervalUnion` keeps both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import CapabilityError
from .intervals import IntervalUnion
from .quadrature import DEFAULT_TOL, integrate

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

#: Infinite limits are truncated this many widths beyond the outermost mode.
DEFAULT_TAIL_SIGMAS = 12.0


def normal_logpdf(x, loc, scale):
    z = (np.asarray(x, dtype=float) - loc) / scale
    return -0.5 * z * z - math.log(scale) - LOG_SQRT_2PI


def normal_interval_prob(a, b):
    """P[a <= Z < b] for standard normal Z, accurate in both tails."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    upper = a > 0
    lo = np.where(upper, ndtr(-b), ndtr(a))
    hi = np.where(upper, ndtr(-a), ndtr(b))
    return np.maximum(hi - lo, 0.0)


def truncated_normal_ppf(u, a, b):
    """Inverse CDF of the standard normal truncated to [a, b]."""
    u = np.asarray(u, dtype=float)
    a = np.broadcast_to(np.asarray(a, dtype=float), u.shape)
    b = np.broadcast_to(np.asarray(b, dtype=float), u.shape)
    # work in the lower tail for accuracy; mirror intervals lying above 0
    flip = (a + b) > 0
    lo = np.where(flip, -b, a)
    hi = np.where(flip, -a, b)
    plo = ndtr(lo)
    phi = ndtr(hi)
    z = ndtri(plo + u * (phi - plo))
    z = np.clip(z, lo, hi)
    return np.where(flip, -z, z)


class TargetDensity:
    """Interface shared by all targets."""

    def log_density(self, x):
        raise NotImplementedError

    def density(self, x):
        return np.exp(self.log_density(x))

    def support(self) -> IntervalUnion:
        return IntervalUnion.full()

    def window(self) -> tuple[float, float]:
        """Finite interval carrying all but a negligible tail of the mass."""
        raise NotImplementedError

    def interval_mass(self, interval: IntervalUnion, tol: float = DEFAULT_TOL) -> float:
        res = integrate(self.density, interval, tol, window=self.window())
        return float(min(max(res.value, 0.0), 1.0))

    def cell_masses(self, edges) -> np.ndarray:
        """Masses of consecutive cells ``[edges[i], edges[i+1])``."""
        edges = np.asarray(edges, dtype=float)
        return np.array([
            self.interval_mass(IntervalUnion.of((lo, hi)))
            for lo, hi in zip(edges[:-1], edges[1:])
        ])

    def sample(self, rng: np.random.Generator, size=None):
        raise CapabilityError(f"{type(self).__name__} has no exact sampler")


@dataclass(frozen=True)
class GaussianMixtureTarget(TargetDensity):
    """Equal-width Gaussian mixture, by default 0.5 N(-1, s^2) + 0.5 N(1, s^2).

    ``sigma`` is both the component width and, by convention, the proposal
    scale of the random-walk kernel; the inverse temperature is ``1/sigma``.
    """

    sigma: float
    centers: tuple[float, ...] = (-1.0, 1.0)
    weights: tuple[float, ...] = (0.5, 0.5)
    tail_sigmas: float = DEFAULT_TAIL_SIGMAS
    _logw: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if len(self.centers) != len(self.weights) or not self.centers:
            raise ValueError("centers and weights must have equal nonzero length")
        w = np.asarray(self.weights, dtype=float)
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be positive and sum to 1")
        object.__setattr__(self, "centers", tuple(float(c) for c in self.centers))
        object.__setattr__(self, "weights", tuple(float(v) for v in w))
        object.__setattr__(self, "_logw", np.log(w))

    @property
    def beta(self) -> float:
        return 1.0 / self.sigma

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        terms = [lw + normal_logpdf(x, c, self.sigma) for lw, c in zip(self._logw, self.centers)]
        out = terms[0]
        for t in terms[1:]:
            out = np.logaddexp(out, t)
        return out if out.ndim else float(out)

    def window(self):
        r = self.tail_sigmas * self.sigma
        return (min(self.centers) - r, max(self.centers) + r)

    def _piece_mass(self, lo, hi):
        s = self.sigma
        return sum(
            w * normal_interval_prob((lo - c) / s, (hi - c) / s)
            for w, c in zip(self.weights, self.centers)
        )

    def interval_mass(self, interval, tol=DEFAULT_TOL):
        total = sum(float(self._piece_mass(lo, hi)) for lo, hi in interval)
        return min(max(total, 0.0), 1.0)

    def cell_masses(self, edges):
        edges = np.asarray(edges, dtype=float)
        return np.asarray(self._piece_mass(edges[:-1], edges[1:]), dtype=float)

    def sample(self, rng, size=None):
        n = 1 if size is None else size
        comp = rng.choice(len(self.centers), size=n, p=self.weights)
        x = np.asarray(self.centers)[comp] + self.sigma * rng.standard_normal(n)
        return float(x[0]) if size is None else x


@dataclass(frozen=True)
class RestrictedTarget(TargetDensity):
    """``base`` conditioned on ``support``: density base(x)/base(support) on the support."""

    base: TargetDensity
    support_set: IntervalUnion
    normalization: float = field(init=False)

    def __post_init__(self):
        z = self.base.interval_mass(self.support_set)
        if not 0.0 < z <= 1.0:
            raise ValueError(f"support has mass {z!r} under the base target")
        object.__setattr__(self, "normalization", z)

    def support(self):
        return self.support_set

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        inside = self.support_set.contains(x)
        with np.errstate(divide="ignore"):
            lp = np.asarray(self.base.log_density(x)) - math.log(self.normalization)
        out = np.where(inside, lp, -np.inf)
        return out if out.ndim else float(out)

    def window(self):
        lo, hi = self.base.window()
        return (max(lo, self.support_set.lo), min(hi, self.support_set.hi))

    def interval_mass(self, interval, tol=DEFAULT_TOL):
        m = self.base.interval_mass(interval.intersect(self.support_set), tol)
        return min(m / self.normalization, 1.0)

    def cell_masses(self, edges):
        edges = np.asarray(edges, dtype=float)
        out = np.zeros(len(edges) - 1)
        for lo, hi in self.support_set:
            # clipping keeps the edges monotone; cells outside collapse to width 0
            out += self.base.cell_masses(np.clip(edges, lo, hi))
        return out / self.normalization

    def sample(self, rng, size=None):
        if not isinstance(self.base, GaussianMixtureTarget):
            raise CapabilityError("exact sampling needs a Gaussian-mixture base")
        base = self.base
        s = base.sigma
        choices = []
        probs = []
        for w, c in zip(base.weights, base.centers):
            for lo, hi in self.support_set:
                p = w * float(normal_interval_prob((lo - c) / s, (hi - c) / s))
                if p > 0:
                    choices.append((c, (lo - c) / s, (hi - c) / s))
                    probs.append(p)
        probs = np.asarray(probs) / np.sum(probs)
        n = 1 if size is None else size
        pick = rng.choice(len(choices), size=n, p=probs)
        u = rng.random(n)
        table = np.asarray(choices)
        c, a, b = table[pick, 0], table[pick, 1], table[pick, 2]
        x = c + s * truncated_normal_ppf(u, a, b)
        # half-open convention: nudge draws that round onto an excluded right end
        x = np.where(self.support_set.contains(x), x, np.nextafter(x, -np.inf))
        return float(x[0]) if size is None else x


def mixture(sigma: float, **kwargs) -> GaussianMixtureTarget:
    return GaussianMixtureTarget(sigma, **kwargs)
