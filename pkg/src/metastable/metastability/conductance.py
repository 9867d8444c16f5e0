"""Conductance of a set under a Metropolis kernel, exactly and by simulation.

For a reversible kernel the stationary flow out of ``S`` is

    Q(S, S^c) = int_S int_{S^c} phi_s(y - x) min(f(x), f(y)) dy dx,

and the conductance is ``Q(S, S^c) / pi(S)``.  Writing the flow with
``min(f(x), f(y))`` keeps every factor finite in log space and makes the
symmetry ``Q(S, S^c) = Q(S^c, S)`` exact in the integrand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateError
from ..intervals import IntervalUnion
from ..quadrature import integrate
from ..targets import LOG_SQRT_2PI

QUADRATURE = "quadrature"
MONTE_CARLO = "monte-carlo"

PROPOSAL_RADIUS = 12.0


@dataclass(frozen=True)
class ConductanceValue:
    phi: float
    method: str
    stderr: float
    set: IntervalUnion
    #: quadrature error estimate (quadrature) or retained sample count (Monte Carlo)
    error: float = 0.0
    samples: int = 0

    def __post_init__(self):
        if self.phi < 0 or self.stderr < 0:
            raise ValueError("conductance and its standard error must be non-negative")


def _log_proposal(d, s):
    return -0.5 * (d / s) ** 2 - math.log(s) - LOG_SQRT_2PI


def exit_flow_density(kernel, S: IntervalUnion, x, rtol: float = 1e-12) -> np.ndarray:
    """``f(x) P(x, S^c)`` for each ``x``: stationary flow density out of ``S`` at ``x``."""
    target = kernel.target
    s = kernel.step_sigma
    out_set = S.complement().intersect(target.support())
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lfx = np.asarray(target.log_density(x), dtype=float)
    vals = np.zeros(x.size)
    for i, (xi, lxi) in enumerate(zip(x, lfx)):
        if lxi == -np.inf:
            continue
        win = (xi - PROPOSAL_RADIUS * s, xi + PROPOSAL_RADIUS * s)

        def integrand(y, xi=xi, lxi=lxi):
            ly = np.asarray(target.log_density(y), dtype=float)
            return np.exp(_log_proposal(y - xi, s) + np.minimum(lxi, ly))

        vals[i] = integrate(integrand, out_set, 0.0, rtol=rtol, window=win).value
    return vals


def conductance_quadrature(kernel, S: IntervalUnion, tol: float = 1e-10) -> ConductanceValue:
    """Deterministic conductance of ``S`` by nested adaptive quadrature.

    ``tol`` is relative: the outer integral stops once its error estimate is
    below ``tol`` times the flow.
    """
    target = kernel.target
    mass = target.interval_mass(S)
    if not 0.0 < mass < 1.0:
        raise DegenerateError(f"set {S} has stationary mass {mass!r}; need 0 < mass < 1")
    inner_rtol = min(1e-13, 0.001 * tol)
    res = integrate(lambda x: exit_flow_density(kernel, S, x, inner_rtol),
                    S.intersect(target.support()), 0.0, rtol=tol, window=target.window(),
                    breakpoints=S.breakpoints())
    phi = res.value / mass
    return ConductanceValue(phi, QUADRATURE, 0.0, S, res.error / mass)


def conductance_mc(kernel, S: IntervalUnion, N: int, rng: np.random.Generator) -> ConductanceValue:
    """One-step Monte-Carlo conductance from ``N`` exact stationary draws.

    Draws ``X_0`` from the target, keeps those in ``S``, takes one kernel
    step and reports the exit fraction with a binomial standard error.  The
    estimate may be exactly zero when no retained draw leaves ``S``.
    """
    if N <= 0:
        raise ValueError("need a positive sample size")
    x0 = np.asarray(kernel.target.sample(rng, N), dtype=float)
    x0 = x0[S.contains(x0)]
    n = x0.size
    if n == 0:
        raise DegenerateError(f"no stationary draw landed in {S}")
    z = rng.standard_normal(n)
    u = rng.random(n)
    x1, _ = kernel.advance(x0, kernel.target.log_density(x0), z, u)
    exits = int(np.count_nonzero(~S.contains(x1)))
    p = exits / n
    return ConductanceValue(p, MONTE_CARLO, math.sqrt(p * (1.0 - p) / n), S, 0.0, n)


def cheeger_statistic(phi: float, sigma: float) -> float:
    """``-2 sigma^2 log(phi)``, whose small-sigma limit the sweep tracks."""
    return -2.0 * sigma * sigma * math.log(phi)


def cheeger_brackets(sigma: float) -> tuple[float, float]:
    """Finite-sigma bracket ``[1 + 9 sigma^2 log sigma, 1 - 61 sigma^2 log sigma]`` for the statistic.

    The bracket comes from the explicit prefactors of the flow bounds
    ``sigma^-4 e^{-1/(2 sigma^2)} / pi`` (upper) and
    ``sigma^30 e^{-1/(2 sigma^2)} / (32 pi)`` (lower).
    """
    ls = math.log(sigma)
    return 1.0 + 9.0 * sigma * sigma * ls, 1.0 - 61.0 * sigma * sigma * ls
