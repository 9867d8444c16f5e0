"""Numerical drift and minorization certificates.

Drift
    ``V(x) = exp(V_scale * min_i |x - s_i|)`` for centres ``s_i``.  The ratio
    ``h(x) = (KV)(x) / V(x)`` is computed as

        h(x) = 1 + int phi_s(y - x) a(x, y) (V(y)/V(x) - 1) dy,

    with ``a`` the acceptance probability, so the rejected mass never has to be
    integrated separately.  The condition ``KV <= (1 - alpha) V + C`` holds at
    ``x`` iff ``V(x) (h(x) - 1 + alpha) <= C``.

Minorization
    ``K(x, J) >= eps |J| / |I|`` for every ``x`` in ``I`` and every cell ``J``
    of a partition of ``I``, using only the accepted-move density (the
    rejection atom is dropped, which can only lower the bound).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import CertificateError, DomainError
from ..intervals import IntervalUnion
from ..quadrature import integrate
from ..targets import LOG_SQRT_2PI

DEFAULT_ALPHAS = (1.0, 0.5, 0.25, 0.1, 0.05, 0.02, 0.01)
PROPOSAL_RADIUS = 12.0


@dataclass(frozen=True)
class DriftCertificate:
    alpha: float
    C: float
    region: IntervalUnion
    V_scale: float
    grid_points: int
    max_violation: float
    centers: tuple[float, ...] = ()
    #: largest V(x) (h(x) - 1 + alpha) seen for each candidate alpha, in grid order
    attempts: tuple[tuple[float, float], ...] = ()

    @property
    def valid(self) -> bool:
        return self.max_violation <= 0.0


@dataclass(frozen=True)
class MinorizationCertificate:
    interval: IntervalUnion
    epsilon: float
    grid_points: int
    cells: int
    worst_start: float
    worst_cell: tuple[float, float]


def _distance(x, centers):
    x = np.asarray(x, dtype=float)
    return np.min(np.abs(x[..., None] - np.asarray(centers, dtype=float)), axis=-1)


def lyapunov(x, V_scale: float, centers) -> np.ndarray:
    """``exp(V_scale * min_i |x - s_i|)``."""
    return np.exp(V_scale * _distance(x, centers))


def _kinks(centers, support: IntervalUnion):
    c = sorted(float(v) for v in centers)
    mids = [0.5 * (a + b) for a, b in zip(c[:-1], c[1:])]
    return c + mids + support.breakpoints()


def drift_ratio(kernel, x, V_scale: float, centers) -> np.ndarray:
    """``(KV)(x) / V(x)`` at each ``x`` by adaptive quadrature over the proposal."""
    target = kernel.target
    support = target.support()
    s = kernel.step_sigma
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lf = np.asarray(target.log_density(x), dtype=float)
    dx = _distance(x, centers)
    kinks = _kinks(centers, support)
    out = np.empty(x.size)
    for i, (xi, lxi, di) in enumerate(zip(x, lf, dx)):
        if lxi == -np.inf:
            raise DomainError(f"{xi!r} is outside the support")

        def integrand(y, xi=xi, lxi=lxi, di=di):
            ly = np.asarray(target.log_density(y), dtype=float)
            with np.errstate(invalid="ignore"):
                acc = np.minimum(0.0, ly - lxi)
            acc = np.where(np.isnan(acc), -np.inf, acc)
            base = -0.5 * ((y - xi) / s) ** 2 - math.log(s) - LOG_SQRT_2PI + acc
            return np.exp(base) * np.expm1(V_scale * (_distance(y, centers) - di))

        win = (xi - PROPOSAL_RADIUS * s, xi + PROPOSAL_RADIUS * s)
        res = integrate(integrand, support, 1e-13, rtol=1e-11, window=win,
                        breakpoints=[xi, *kinks])
        out[i] = 1.0 + res.value
    return out


def region_points(region: IntervalUnion, n: int) -> np.ndarray:
    """``n`` evenly spread points covering a bounded region, endpoints included."""
    if not region.is_bounded:
        raise DomainError(f"region {region} must be bounded")
    lengths = np.array([hi - lo for lo, hi in region])
    counts = np.maximum(2, np.round(n * lengths / lengths.sum()).astype(int))
    pts = []
    for (lo, hi), m in zip(region, counts):
        p = np.linspace(lo, hi, m)
        p[-1] = np.nextafter(hi, -np.inf)  # the right end is excluded from [lo, hi)
        pts.append(p)
    return np.concatenate(pts)


def drift_check(kernel, V_scale: float, region: IntervalUnion, alpha_grid=DEFAULT_ALPHAS,
                x_grid_size: int = 2000, centers=(-1.0, 1.0), C_cap: float = 10.0,
                ratios=None) -> DriftCertificate:
    """Search ``alpha_grid`` (descending) for ``KV <= (1 - alpha) V + C`` on ``region``.

    For each ``alpha`` the smallest ``C >= 0`` that works at every grid point
    is computed; the first ``alpha`` whose ``C`` is at most ``C_cap`` is
    returned.  Raises :class:`CertificateError` carrying the attempt with the
    smallest ``C`` when no candidate qualifies.
    """
    xs = region_points(region, x_grid_size)
    V = lyapunov(xs, V_scale, centers)
    h = drift_ratio(kernel, xs, V_scale, centers) if ratios is None else np.asarray(ratios)
    attempts = []
    for alpha in sorted(alpha_grid, reverse=True):
        if not 0 < alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        excess = V * (h - 1.0 + alpha)
        C = max(0.0, float(np.max(excess)))
        attempts.append((float(alpha), C))
        if C <= C_cap:
            return DriftCertificate(float(alpha), C, region, V_scale, xs.size,
                                    float(np.max(excess - C)), tuple(centers), tuple(attempts))
    best = min(attempts, key=lambda t: t[1])
    raise CertificateError(f"no alpha in {tuple(alpha_grid)} gives C <= {C_cap}", best)


def drift_violation(kernel, cert: DriftCertificate, x) -> np.ndarray:
    """``(KV)(x) - (1 - alpha) V(x) - C`` at arbitrary points, for re-auditing a certificate."""
    x = np.asarray(x, dtype=float)
    V = lyapunov(x, cert.V_scale, cert.centers)
    h = drift_ratio(kernel, x, cert.V_scale, cert.centers)
    return V * (h - 1.0 + cert.alpha) - cert.C


def reaudit(kernel, cert: DriftCertificate, factor: int = 10) -> tuple[bool, float]:
    """Re-check a certificate on a ``factor`` times finer grid.

    Passes when no point violates the inequality by more than ``1e-6 V(x)``;
    returns the verdict and the worst violation relative to ``V``.
    """
    xs = region_points(cert.region, factor * cert.grid_points)
    rel = drift_violation(kernel, cert, xs) / lyapunov(xs, cert.V_scale, cert.centers)
    worst = float(np.max(rel))
    return worst <= 1e-6, worst


def minorization_interval(sigma: float, kappa: float = 2.0, center: float = -1.0) -> IntervalUnion:
    """``[center - kappa sigma, center + kappa sigma)``."""
    return IntervalUnion.of((center - kappa * sigma, center + kappa * sigma))


def minorization_check(kernel, interval: IntervalUnion, cells: int = 16,
                       x_points: int = 33) -> MinorizationCertificate:
    """Uniform minorization constant of ``kernel`` on a bounded interval ``I``.

    ``eps = cells * min_{x, J} K(x, J)`` over ``x_points`` starts spread over
    ``I`` (endpoints included) and the ``cells`` equal cells ``J`` of ``I``.
    """
    if len(interval) != 1 or not interval.is_bounded:
        raise DomainError("the minorization set must be a single bounded interval")
    if not interval.issubset(kernel.target.support()):
        raise DomainError(f"{interval} is not inside the support {kernel.target.support()}")
    target = kernel.target
    s = kernel.step_sigma
    lo, hi = interval.lo, interval.hi
    edges = np.linspace(lo, hi, cells + 1)
    xs = region_points(interval, x_points)
    lf = np.asarray(target.log_density(xs), dtype=float)
    worst = (math.inf, float(xs[0]), (float(edges[0]), float(edges[1])))
    for xi, lxi in zip(xs, lf):
        def integrand(y, xi=xi, lxi=lxi):
            ly = np.asarray(target.log_density(y), dtype=float)
            with np.errstate(invalid="ignore"):
                acc = np.minimum(0.0, ly - lxi)
            acc = np.where(np.isnan(acc), -np.inf, acc)
            return np.exp(-0.5 * ((y - xi) / s) ** 2 - math.log(s) - LOG_SQRT_2PI + acc)

        for a, b in zip(edges[:-1], edges[1:]):
            p = integrate(integrand, (a, b), 0.0, rtol=1e-10, breakpoints=[xi]).value
            if p < worst[0]:
                worst = (p, float(xi), (float(a), float(b)))
    eps = cells * worst[0]
    if not eps > 0:
        raise CertificateError(f"minorization constant {eps!r} is not positive", worst)
    return MinorizationCertificate(interval, eps, xs.size, cells, worst[1], worst[2])
