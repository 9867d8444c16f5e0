"""Finite-state approximations of a Metropolis kernel on a uniform grid.

The grid chain is the cell-lumped kernel: ``P[i, j]`` is the probability
that one step started from the target restricted to cell ``i`` lands in cell
``j``.  With ``m`` the exact cell masses this gives a symmetric flow matrix

    F[i, j] = m_i P[i, j] = int_{cell i} int_{cell j} phi(y - x) min(f(x), f(y)) dy dx,

so the grid chain is reversible with respect to ``m`` up to rounding, and a
threshold cut of the grid chain has the same conductance as the corresponding
half-line of the continuous chain.  Rejected mass, and accepted mass that
leaves the grid, stays on the diagonal.

Double integrals use a tensor Gauss-Legendre rule inside each cell pair; the
quadrature error is estimated by comparison with a rule of half the order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import eigh

from .errors import ConvergenceError, DegenerateError, GridLeakageError, QuadratureError
from .intervals import IntervalUnion
from .quadrature import gauss_legendre, integrate
from .targets import LOG_SQRT_2PI, normal_interval_prob

CELLS_PER_SIGMA = 40
MIN_CELLS = 400
LEAKAGE_LIMIT = 1e-9
PROPOSAL_RADIUS = 12.0  # proposal mass beyond 12 step widths is below e^-72


@dataclass(frozen=True)
class Grid:
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("grid needs lo < hi")
        if self.n < 2:
            raise ValueError("grid needs at least two cells")

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.n

    @property
    def edges(self) -> np.ndarray:
        return self.lo + self.width * np.arange(self.n + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.lo + (np.arange(self.n) + 0.5) * self.width

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.lo, self.hi, self.n * factor)

    def reversed_index(self, i):
        return self.n - 1 - np.asarray(i)


def grid_for(kernel, cells_per_sigma: int = CELLS_PER_SIGMA, min_cells: int = MIN_CELLS,
             lo: float | None = None, hi: float | None = None) -> Grid:
    """Default grid: the target's truncation window, at least 40 cells per step width.

    The cell count is rounded up to an even number so that a symmetric window
    has a cell edge at its midpoint.
    """
    wlo, whi = kernel.target.window()
    lo = wlo if lo is None else lo
    hi = whi if hi is None else hi
    n = max(min_cells, math.ceil(cells_per_sigma * (hi - lo) / kernel.step_sigma))
    n += n % 2
    return Grid(lo, hi, n)


@dataclass(frozen=True)
class DiscreteKernel:
    matrix: np.ndarray
    stationary: np.ndarray
    grid: Grid
    #: estimated max row-wise L1 error of ``matrix`` from the cell quadrature
    quad_error: float = 0.0
    #: largest stationary flow from one cell to off-grid states
    leakage: float = 0.0
    uncovered_mass: float = 0.0

    @classmethod
    def from_matrix(cls, matrix, stationary, grid: Grid | None = None) -> "DiscreteKernel":
        P = np.asarray(matrix, dtype=float)
        pi = np.asarray(stationary, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] != pi.size:
            raise ValueError("matrix must be square and match the stationary vector")
        if np.any(P < -1e-15) or np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("matrix is not row-stochastic")
        if np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-12:
            raise ValueError("stationary weights must be a probability vector")
        n = pi.size
        return cls(P, pi, grid or Grid(0.0, float(n), n))

    @property
    def n(self) -> int:
        return self.stationary.size

    def flows(self) -> np.ndarray:
        """Stationary flow matrix ``pi_i P_ij``."""
        return self.stationary[:, None] * self.matrix

    def detailed_balance_residual(self) -> float:
        Q = self.flows()
        return float(np.max(np.abs(Q - Q.T)))

    def row_sum_error(self) -> float:
        return float(np.max(np.abs(self.matrix.sum(axis=1) - 1.0)))


def _log_targets(kernel, x):
    """Normalized log density of the kernel's own target (restricted targets included)."""
    return np.asarray(kernel.target.log_density(x), dtype=float)


def _cell_flows(kernel, grid: Grid, q: int, chunk_nodes: int = 512) -> np.ndarray:
    """Symmetric cell-pair flows with a q x q Gauss rule per cell pair."""
    t, w = gauss_legendre(q)
    h = 0.5 * grid.width
    nodes = (grid.centers[:, None] + h * t[None, :]).ravel()
    weights = np.tile(h * w, grid.n)
    lf = _log_targets(kernel, nodes)
    s = kernel.step_sigma
    norm = -math.log(s) - LOG_SQRT_2PI
    n = grid.n
    F = np.zeros((n, n))
    cells_per_chunk = max(1, chunk_nodes // q)
    for c0 in range(0, n, cells_per_chunk):
        c1 = min(n, c0 + cells_per_chunk)
        a = slice(c0 * q, c1 * q)
        d = (nodes[None, :] - nodes[a, None]) / s
        with np.errstate(invalid="ignore"):
            expo = -0.5 * d * d + norm + np.minimum(lf[a, None], lf[None, :])
        E = np.exp(expo)
        E *= weights[a, None] * weights[None, :]
        F[c0:c1] = E.reshape(c1 - c0, q, n, q).sum(axis=(1, 3))
    return 0.5 * (F + F.T)


def _leakage(kernel, grid: Grid, masses: np.ndarray) -> float:
    """Largest stationary flow from a single cell to states off the grid."""
    off = kernel.support().difference(IntervalUnion.of((grid.lo, grid.hi)))
    if off.is_empty:
        return 0.0
    s = kernel.step_sigma
    t, w = gauss_legendre(8)
    h = 0.5 * grid.width
    worst = 0.0
    for i, (c, m) in enumerate(zip(grid.centers, masses)):
        if m == 0.0:
            continue
        # cheap bound first: proposal mass off the grid, acceptance ignored
        bound = sum(float(normal_interval_prob((lo - c - h) / s, (hi - c + h) / s))
                    for lo, hi in off)
        if m * bound <= LEAKAGE_LIMIT * 1e-3:
            continue
        xs = c + h * t
        lx = _log_targets(kernel, xs)
        total = 0.0
        for x, lxx, wx in zip(xs, lx, w):
            def integrand(y, x=x, lxx=lxx):
                ly = _log_targets(kernel, y)
                with np.errstate(invalid="ignore"):
                    acc = np.minimum(0.0, ly - lxx)
                acc = np.where(np.isnan(acc), -np.inf, acc)
                return np.exp(-0.5 * ((y - x) / s) ** 2 - math.log(s) - LOG_SQRT_2PI + acc)
            win = (x - PROPOSAL_RADIUS * s, x + PROPOSAL_RADIUS * s)
            res = integrate(integrand, off, 1e-14, rtol=1e-6, window=win)
            total += 0.5 * wx * res.value
        worst = max(worst, m * total)
    return worst


def build_grid_kernel(kernel, grid: Grid | None = None, tol: float = 1e-4,
                      q: int = 4, max_q: int = 16) -> DiscreteKernel:
    """Discretize ``kernel`` (unrestricted or restricted) on ``grid``.

    ``tol`` bounds the estimated row-wise L1 quadrature error of the matrix;
    the per-cell Gauss order doubles from ``q`` until the estimate meets it.
    Raises :class:`GridLeakageError` if more than 1e-9 of stationary flow
    leaves the grid from any cell.
    """
    grid = grid or grid_for(kernel)
    masses = np.asarray(kernel.target.cell_masses(grid.edges), dtype=float)
    covered = float(masses.sum())
    if not covered > 0:
        raise DegenerateError("grid carries no target mass")
    leak = _leakage(kernel, grid, masses)
    if leak > LEAKAGE_LIMIT:
        raise GridLeakageError(
            f"stationary flow {leak:.3e} leaves the grid [{grid.lo}, {grid.hi}]; widen the grid")
    F_lo = _cell_flows(kernel, grid, q)
    while True:
        F = _cell_flows(kernel, grid, 2 * q)
        with np.errstate(divide="ignore", invalid="ignore"):
            row_err = np.where(masses > 0, np.abs(F - F_lo).sum(axis=1) / masses, 0.0)
        err = float(np.max(row_err))
        if err <= tol:
            break
        q *= 2
        if 2 * q > max_q:
            raise QuadratureError("cell quadrature did not reach tolerance", None, err)
        F_lo = F
    pi = masses / covered
    F = F / covered
    live = pi > 0
    P = np.zeros_like(F)
    P[live] = F[live] / pi[live, None]
    # mass flowing into zero-weight cells is impossible; keep it on the diagonal
    P[:, ~live] = 0.0
    np.fill_diagonal(P, 0.0)
    P[np.diag_indices_from(P)] = 1.0 - P.sum(axis=1)
    return DiscreteKernel(P, pi, grid, err, leak, max(0.0, 1.0 - covered))


class SpectrumResult(NamedTuple):
    gap: float
    lambda2: float
    lambda_min: float
    iterations: int
    residual: float
    vector: np.ndarray  # lambda2 eigenvector of the symmetrized matrix


def _deflated_power(A, v1, tol, max_iter, restart):
    """Largest eigenpair of symmetric ``A`` on the complement of unit vector ``v1``.

    Iterates with ``A + I``, which is positive semidefinite when the spectrum
    of ``A`` lies in [-1, 1], so the wanted eigenvalue dominates.  Every
    ``restart`` iterations (0 disables) the iterate is replaced by the best
    Rayleigh-Ritz vector from the span of the iterates since the last restart.
    """
    n = A.shape[0]
    x = np.random.default_rng(20240611).standard_normal(n)
    x -= (v1 @ x) * v1
    x /= np.linalg.norm(x)
    history = []
    residual = math.inf
    for it in range(1, max_iter + 1):
        Ax = A @ x
        theta = float(x @ Ax)
        r = Ax - theta * x
        r -= (v1 @ r) * v1
        residual = float(np.linalg.norm(r))
        if residual <= tol:
            return theta, x, it, residual
        history.append(x)
        y = Ax + x
        y -= (v1 @ y) * v1
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return theta, x, it, residual
        x = y / nrm
        if restart and len(history) >= restart:
            history.append(x)
            x = _ritz_vector(A, v1, np.stack(history, axis=1))
            history = []
    raise ConvergenceError("power iteration exhausted its budget", residual)


def _ritz_vector(A, v1, basis):
    """Rayleigh-Ritz vector for the top of the spectrum within ``span(basis)``."""
    basis = basis - np.outer(v1, v1 @ basis)
    Qb, rr = np.linalg.qr(basis)
    keep = np.abs(np.diag(rr)) > 1e-6 * np.abs(rr[0, 0])
    Qb = Qb[:, keep]
    Qb -= np.outer(v1, v1 @ Qb)
    H = Qb.T @ (A @ Qb)
    vals, vecs = np.linalg.eigh(0.5 * (H + H.T))
    y = Qb @ vecs[:, int(np.argmax(vals))]
    y -= (v1 @ y) * v1
    return y / np.linalg.norm(y)


def _lowest_eigenvalue(A, v1) -> float:
    """Smallest eigenvalue of symmetric ``A`` on the complement of ``v1`` (dense LAPACK)."""
    shifted = A + 2.0 * np.outer(v1, v1)  # moves the top eigenvalue 1 to 3, out of the way
    return float(eigh(shifted, eigvals_only=True, subset_by_index=[0, 0])[0])


def spectral_gap(dk: DiscreteKernel, tol: float = 1e-11, max_iter: int = 10**6,
                 restart: int = 0) -> SpectrumResult:
    """Absolute spectral gap ``1 - max(|lambda_2|, |lambda_min|)`` of a reversible grid chain.

    The chain is symmetrized with the square roots of the stationary weights
    and the top eigenvector is deflated.  ``lambda_2`` comes from deflated
    power iteration solved to residual ``tol``.  The bottom of the spectrum
    of a Metropolis grid chain is tightly clustered, where power iteration
    stalls, so ``lambda_min`` is taken from a dense subset eigensolve.
    """
    pi = dk.stationary
    live = pi > 0
    if live.sum() < 2:
        raise DegenerateError("need at least two states with positive weight")
    P = dk.matrix[np.ix_(live, live)]
    s = np.sqrt(pi[live])
    A = s[:, None] * P / s[None, :]
    A = 0.5 * (A + A.T)
    v1 = s / np.linalg.norm(s)
    lam2, vec2, it2, res2 = _deflated_power(A, v1, tol, max_iter, restart)
    lam_min = _lowest_eigenvalue(A, v1)
    gap = 1.0 - max(abs(lam2), abs(lam_min))
    vector = np.zeros(pi.size)
    vector[live] = vec2
    return SpectrumResult(min(max(gap, 0.0), 1.0), lam2, lam_min, it2, res2, vector)


class ThresholdCut(NamedTuple):
    phi: float
    cut_index: int  # the cut separates cells <= cut_index from cells > cut_index
    lower_side: bool  # True when the minimizing set is {cells <= cut_index}
    cut_position: float


def threshold_conductance(dk: DiscreteKernel) -> ThresholdCut:
    """Minimal conductance over threshold sets with stationary mass at most 1/2."""
    pi = dk.stationary
    n = pi.size
    if n < 2:
        raise DegenerateError("need at least two cells")
    if np.max(pi) >= 1.0 - 1e-15:
        raise DegenerateError("all stationary mass sits in one cell")
    Q = dk.flows()
    # T[c, j] = sum_{i <= c} sum_{j' >= j} Q[i, j']
    T = np.cumsum(np.cumsum(Q[:, ::-1], axis=1)[:, ::-1], axis=0)
    # U[i, c] = sum_{i' >= i} sum_{j <= c} Q[i', j]
    U = np.cumsum(np.cumsum(Q, axis=1)[::-1], axis=0)[::-1]
    c = np.arange(n - 1)
    out_low = T[c, c + 1]
    out_high = U[c + 1, c]
    mass_low = np.cumsum(pi)[:-1]
    mass_high = np.cumsum(pi[::-1])[::-1][1:]
    half = 0.5 + 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_low = np.where((mass_low > 0) & (mass_low <= half), out_low / mass_low, np.inf)
        phi_high = np.where((mass_high > 0) & (mass_high <= half), out_high / mass_high, np.inf)
    kl, kh = int(np.argmin(phi_low)), int(np.argmin(phi_high))
    if not (np.isfinite(phi_low[kl]) or np.isfinite(phi_high[kh])):
        raise DegenerateError("no threshold set with mass in (0, 1/2]")
    edges = dk.grid.edges
    if phi_low[kl] <= phi_high[kh]:
        return ThresholdCut(float(phi_low[kl]), kl, True, float(edges[kl + 1]))
    return ThresholdCut(float(phi_high[kh]), kh, False, float(edges[kh + 1]))


class CheegerVerdict(NamedTuple):
    passed: bool
    lower_margin: float  # gap - phi^2/2
    upper_margin: float  # 2 phi - gap
    lower_ok: bool
    upper_ok: bool


def cheeger_check(gap: float, phi: float, slack: float = 1e-9) -> CheegerVerdict:
    """Check ``phi^2/2 <= gap <= 2 phi`` up to ``slack``."""
    lower = gap - 0.5 * phi * phi
    upper = 2.0 * phi - gap
    lo_ok = lower >= -slack
    up_ok = upper >= -slack
    return CheegerVerdict(lo_ok and up_ok, lower, upper, lo_ok, up_ok)


def write_matrix(path, dk: DiscreteKernel) -> None:
    """Dense row-major text dump, one row per line, 17 significant digits."""
    np.savetxt(path, dk.matrix, fmt="%.17g")


def read_matrix(path) -> np.ndarray:
    return np.loadtxt(path, ndmin=2)
