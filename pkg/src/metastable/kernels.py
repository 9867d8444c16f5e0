"""Random-walk Metropolis kernels, trajectories and hitting times.

Conventions
-----------
* One step from ``x`` draws ``z ~ N(0, 1)`` then ``u ~ Unif[0, 1)``, proposes
  ``y = x + sigma * z`` and moves iff ``log u < log f(y) - log f(x)``.
* Hitting times follow the infimum-over-``t >= 0`` convention: a chain that
  starts inside the target set has ``tau = 0``.
* Batched simulations run replicas in lockstep.  Each replica owns its stream
  and draws its randomness in chunks whose sizes depend only on the step
  counter, so a replica's path does not depend on which other replicas share
  the batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError
from .estimate import Estimate
from .intervals import IntervalUnion
from .streams import stream_seed
from .targets import RestrictedTarget, TargetDensity

DEFAULT_CAP = 10**8
_FIRST_CHUNK = 64
_MAX_CHUNK = 4096


@dataclass(frozen=True)
class RwmKernel:
    """Random-walk Metropolis with N(x, step_sigma^2) proposals."""

    step_sigma: float
    target: TargetDensity

    def __post_init__(self):
        if not self.step_sigma > 0:
            raise ValueError("step_sigma must be positive")

    @property
    def kernel_id(self) -> str:
        return f"rwm(step={self.step_sigma:g}, target={self.target!r})"

    def support(self) -> IntervalUnion:
        return self.target.support()

    def log_target(self, x):
        return self.target.log_density(x)

    def accept_log_ratio(self, lx, ly):
        """Log acceptance probability ``min(0, ly - lx)``; zero-density proposals give -inf."""
        with np.errstate(invalid="ignore"):
            d = ly - lx
        return np.minimum(0.0, np.where(np.isnan(d), -np.inf, d))

    def advance(self, x, lx, z, u):
        """Vectorized single step; returns new states and their log densities."""
        y = x + self.step_sigma * z
        ly = self.log_target(y)
        with np.errstate(divide="ignore", invalid="ignore"):
            move = np.log(u) < ly - lx
        return np.where(move, y, x), np.where(move, ly, lx)


@dataclass(frozen=True)
class RestrictedKernel:
    """Metropolis chain confined to ``support_set``.

    A full step of ``inner`` is proposed and kept only if it lands inside the
    support.  Because the inner proposal is symmetric, this is exactly the
    Metropolis chain for the inner target conditioned on the support.
    """

    inner: RwmKernel
    support_set: IntervalUnion
    _restricted: RestrictedTarget = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_restricted", RestrictedTarget(self.inner.target, self.support_set))

    @property
    def step_sigma(self) -> float:
        return self.inner.step_sigma

    @property
    def target(self) -> RestrictedTarget:
        return self._restricted

    @property
    def kernel_id(self) -> str:
        return f"restricted({self.inner.kernel_id}, support={self.support_set})"

    def support(self) -> IntervalUnion:
        return self.support_set

    def log_target(self, x):
        return self.inner.log_target(x)

    def accept_log_ratio(self, lx, ly):
        return self.inner.accept_log_ratio(lx, ly)

    def advance(self, x, lx, z, u):
        y, ly = self.inner.advance(x, lx, z, u)
        keep = self.support_set.contains(y)
        return np.where(keep, y, x), np.where(keep, ly, lx)


Kernel = RwmKernel | RestrictedKernel


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray
    start_index: int = 0
    kernel_id: str = ""
    seed: int = -1
    #: original time stamps when the trajectory is a trace of a longer one
    times: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class HittingResult:
    tau: int | None
    cap: int
    exit_state: float | None = None

    @property
    def censored(self) -> bool:
        return self.tau is None


def _one_step(kernel, x: float, rng: np.random.Generator) -> float:
    z = rng.standard_normal()
    u = rng.random()
    xs = np.array([x])
    nx, _ = kernel.advance(xs, kernel.log_target(xs), np.array([z]), np.array([u]))
    return float(nx[0])


def rwm_step(kernel: RwmKernel, x: float, rng: np.random.Generator) -> float:
    return _one_step(kernel, x, rng)


def restricted_step(kernel: RestrictedKernel, x: float, rng: np.random.Generator) -> float:
    if x not in kernel.support_set:
        raise DomainError(f"{x!r} is outside the support {kernel.support_set}")
    return _one_step(kernel, x, rng)


def _chunk_sizes(total: int):
    """Chunk schedule used by every simulation: 64, 128, ... up to 4096 draws.

    Yields ``(start, draws, steps)``.  The last chunk still draws its full
    size and only uses ``steps`` of it, so the draws behind step ``t`` do not
    depend on the step budget.
    """
    done = 0
    size = _FIRST_CHUNK
    while done < total:
        yield done, size, min(size, total - done)
        done += size
        size = min(2 * size, _MAX_CHUNK)


def simulate(kernel, x0: float, steps: int, rng: np.random.Generator) -> Trajectory:
    """Run ``steps`` transitions from ``x0``; ``states[0] == x0``."""
    if steps < 0:
        raise ValueError("steps must be non-negative")
    out = np.empty(steps + 1)
    out[0] = x0
    x = np.array([float(x0)])
    lx = kernel.log_target(x)
    for start, c, used in _chunk_sizes(steps):
        z = rng.standard_normal(c)
        u = rng.random(c)
        for s in range(used):
            x, lx = kernel.advance(x, lx, z[s:s + 1], u[s:s + 1])
            out[start + s + 1] = x[0]
    return Trajectory(out, 0, kernel.kernel_id, stream_seed(rng))


def hitting_times(
    kernel,
    x0: Sequence[float] | np.ndarray,
    target_set: IntervalUnion,
    cap: int,
    rngs: Sequence[np.random.Generator],
) -> list[HittingResult]:
    """First entrance times into ``target_set`` for a batch of replicas.

    Replica ``r`` starts at ``x0[r]`` and uses ``rngs[r]`` exclusively.
    Replicas still outside the set after ``cap`` steps are censored.
    """
    if cap < 0:
        raise ValueError("cap must be non-negative")
    x = np.array(x0, dtype=float).ravel()
    if len(rngs) != x.size:
        raise ValueError("need exactly one stream per replica")
    lx = np.asarray(kernel.log_target(x), dtype=float)
    tau = np.full(x.size, -1, dtype=np.int64)
    exits = np.full(x.size, np.nan)
    inside = target_set.contains(x)
    tau[inside] = 0
    exits[inside] = x[inside]
    alive = np.flatnonzero(~inside)
    if target_set.is_empty:
        # nothing can ever be entered; skip the simulation
        alive = np.array([], dtype=np.int64)
    for start, c, used in _chunk_sizes(cap):
        if alive.size == 0:
            break
        z = np.stack([rngs[r].standard_normal(c) for r in alive])
        u = np.stack([rngs[r].random(c) for r in alive])
        rows = np.arange(alive.size)
        xa, la = x[alive], lx[alive]
        for s in range(used):
            xa, la = kernel.advance(xa, la, z[rows, s], u[rows, s])
            hit = target_set.contains(xa)
            if hit.any():
                who = alive[hit]
                tau[who] = start + s + 1
                exits[who] = xa[hit]
                keep = ~hit
                alive, rows, xa, la = alive[keep], rows[keep], xa[keep], la[keep]
                if alive.size == 0:
                    break
        x[alive], lx[alive] = xa, la
    results = []
    for t, e in zip(tau, exits):
        if t < 0:
            results.append(HittingResult(None, cap, None))
        else:
            results.append(HittingResult(int(t), cap, float(e)))
    return results


def hitting_time(kernel, x0: float, target_set: IntervalUnion, cap: int,
                 rng: np.random.Generator) -> HittingResult:
    return hitting_times(kernel, [x0], target_set, cap, [rng])[0]


def trace_chain(traj: Trajectory, S: IntervalUnion) -> Trajectory:
    """Subsequence of states lying in ``S``, keeping their original time stamps.

    Indices follow ``c_0 = first t >= 0 with X_t in S``, ``c_{i+1}`` the next
    visit after ``c_i``; the result is empty if ``S`` is never visited.
    """
    times = traj.times if traj.times is not None else traj.start_index + np.arange(len(traj.states))
    mask = S.contains(traj.states)
    return Trajectory(traj.states[mask], traj.start_index, traj.kernel_id, traj.seed, times[mask])


@dataclass(frozen=True)
class ExitTally:
    """Destination-mode frequencies of the first exit from a home mode."""

    counts: tuple[int, ...]
    censored: int
    replicas: int

    @property
    def frequencies(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.replicas

    @property
    def stderr(self) -> np.ndarray:
        p = self.frequencies
        return np.sqrt(p * (1.0 - p) / self.replicas)

    def estimate(self, mode: int) -> Estimate:
        return Estimate(float(self.frequencies[mode]), float(self.stderr[mode]),
                        self.replicas, self.censored)


def exit_distribution(kernel, x0: float, home: IntervalUnion, partition, cap: int,
                      rngs: Sequence[np.random.Generator]) -> ExitTally:
    """Run each replica to its first exit from ``home`` and tally the mode it lands in.

    ``partition`` must provide ``locate(x) -> mode index`` and ``k``.
    """
    if x0 not in home:
        raise DomainError(f"start {x0!r} is not in the home set {home}")
    results = hitting_times(kernel, [x0] * len(rngs), home.complement(), cap, rngs)
    counts = [0] * partition.k
    censored = 0
    for res in results:
        if res.censored:
            censored += 1
        else:
            counts[partition.locate(res.exit_state)] += 1
    return ExitTally(tuple(counts), censored, len(rngs))


def geometric_mean_tau(results: Sequence[HittingResult]) -> float:
    """Geometric mean of uncensored hitting times (``tau = 0`` counts as 1)."""
    taus = [max(r.tau, 1) for r in results if not r.censored]
    if not taus:
        raise ValueError("all hitting times censored")
    return math.exp(float(np.mean(np.log(taus))))
