"""Finite-sigma audits of the metastability conditions for a partition.

Every condition is checked at the given step size only; the conditions
themselves are asymptotic in ``beta = 1/sigma``, so a report certifies
numerical surrogates and says so in its disclaimer.

Per-mode clauses (``S`` one mode, ``Phi`` its conductance):

``small-conductance``
    ``Phi <= exp(-c beta)`` for some ``c > 0``; tested by a least-squares fit
    of ``log Phi`` against ``beta`` over a local sweep of step sizes.
``rapid-mixing``
    ``sup_{x in G} TV(Khat^r1(x, .), pi|S) <= beta^-2 Phi`` via powers of the
    grid matrix of the restricted kernel.
``never-stuck``
    ``sup_{x in W - G} P[tau_{G u S^c} > r2] <= beta^-2 Phi`` by simulation.
``never-hitting``
    ``sup_{x in G} P[tau_{W^c} < min(r1 + r2 + 1, tau_{S^c})] <= Phi^4`` by
    simulation.

Partition clauses: ``meta-sets`` (the four above for every mode, with the
largest conductance in the first and the smallest in the others),
``lyapunov-tails``, ``never-hitting-union``, ``non-periodicity`` and
``connectedness``.

Monte-Carlo clauses use one-sided 95% binomial bounds: PASS when the upper
bound is below the requirement, FAIL when the lower bound is above it, and
INCONCLUSIVE otherwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..discretize import build_grid_kernel, grid_for
from ..errors import CertificateError, ConfigError
from ..estimate import lower_confidence, upper_confidence
from ..intervals import IntervalUnion
from ..kernels import RestrictedKernel, exit_distribution, hitting_times
from ..quadrature import integrate
from ..streams import name_code, stream
from ..targets import LOG_SQRT_2PI
from .certificates import drift_check, region_points
from .conductance import conductance_quadrature
from .partition import Mode, Partition

PASS = "PASS"
FAIL = "FAIL"
INCONCLUSIVE = "INCONCLUSIVE"
_SEVERITY = {PASS: 0, INCONCLUSIVE: 1, FAIL: 2}

SCHEMA = "metastable.assumption-report"
SCHEMA_VERSION = 1
DISCLAIMER = (
    "Numerical surrogates at a single finite step size. The conditions are "
    "asymptotic statements as sigma -> 0 and are not proved by this report."
)

MODE_CLAUSES = ("small-conductance", "rapid-mixing", "never-stuck", "never-hitting")
PARTITION_CLAUSES = ("meta-sets", "lyapunov-tails", "never-hitting-union",
                     "non-periodicity", "connectedness")


@dataclass(frozen=True)
class AuditBudget:
    """Sizes and knobs for an audit; the defaults finish in about a minute at sigma = 0.3."""

    r1_exponent: float = 6.0
    r2_exponent: float = 4.0
    r5_exponent: float = 2.0
    sweep_factors: tuple[float, ...] = (0.8, 0.9, 1.0, 1.12, 1.25)
    min_r_squared: float = 0.99
    #: replicas per start for never-stuck; None sizes it so 3/N resolves the bound
    stuck_replicas: int | None = None
    stuck_starts: int = 5
    max_replicas: int = 200_000
    hitting_replicas: int = 10_000
    hitting_starts: int = 3
    union_replicas: int = 64
    union_starts: int = 3
    horizon_cap: int = 10**7
    exit_replicas: int = 200
    exit_starts: int = 3
    stay_points: int = 200
    stay_threshold: float = 0.5
    drift_points: int = 2000
    m: float = 0.5
    M: float = 4.0


@dataclass(frozen=True)
class ClauseRecord:
    clause: str
    quantity: str
    bound: float
    achieved: float
    verdict: str
    method: str
    stderr: float = 0.0
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "clause": self.clause,
            "quantity": self.quantity,
            "bound": _jsonable(self.bound),
            "achieved": _jsonable(self.achieved),
            "stderr": _jsonable(self.stderr),
            "verdict": self.verdict,
            "method": self.method,
            "detail": _jsonable(self.detail),
        }


@dataclass(frozen=True)
class AssumptionReport:
    sigma: float
    partition: Partition
    clauses: tuple[ClauseRecord, ...]
    settings: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return worst_verdict(c.verdict for c in self.clauses)

    def clause(self, name: str) -> ClauseRecord:
        for c in self.clauses:
            if c.clause == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "version": SCHEMA_VERSION,
            "disclaimer": DISCLAIMER,
            "sigma": self.sigma,
            "partition": _jsonable(self.partition.to_dict()),
            "settings": _jsonable(self.settings),
            "verdict": self.verdict,
            "clauses": [c.to_dict() for c in self.clauses],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def worst_verdict(verdicts) -> str:
    worst = PASS
    for v in verdicts:
        if _SEVERITY[v] > _SEVERITY[worst]:
            worst = v
    return worst


def mc_verdict(hits: int, trials: int, bound: float) -> tuple[str, float, float]:
    """Verdict for ``P[event] <= bound`` from ``hits`` out of ``trials``; also returns the CI ends."""
    ucb = upper_confidence(hits, trials)
    lcb = lower_confidence(hits, trials)
    if ucb <= bound:
        return PASS, lcb, ucb
    if lcb > bound:
        return FAIL, lcb, ucb
    return INCONCLUSIVE, lcb, ucb


def polynomial_steps(sigma: float, exponent: float) -> int:
    """``ceil(sigma^-exponent)``, the step budgets r1, r2, ... as pure powers."""
    return max(1, math.ceil(sigma ** -exponent - 1e-9))


def mixture_family(kernel):
    """Map a step size to the kernel of the same family at that size."""
    def make(sigma):
        return type(kernel)(sigma, replace(kernel.target, sigma=sigma))
    return make


def _streams(seed, clause, mode_index, start_index, n):
    code = name_code(clause)
    return [stream(seed, code, mode_index, start_index, r) for r in range(n)]


def _bounded(region: IntervalUnion, target) -> IntervalUnion:
    lo, hi = target.window()
    return region.clip(lo, hi)


def transition_mass(kernel, x: float, A: IntervalUnion) -> float:
    """Accepted-move probability from ``x`` into ``A`` (the rejection atom is excluded)."""
    target = kernel.target
    s = kernel.step_sigma
    lx = float(target.log_density(x))

    def integrand(y):
        ly = np.asarray(target.log_density(y), dtype=float)
        with np.errstate(invalid="ignore"):
            acc = np.minimum(0.0, ly - lx)
        acc = np.where(np.isnan(acc), -np.inf, acc)
        return np.exp(-0.5 * ((y - x) / s) ** 2 - math.log(s) - LOG_SQRT_2PI + acc)

    win = (x - 12.0 * s, x + 12.0 * s)
    return integrate(integrand, A, 0.0, rtol=1e-9, window=win, breakpoints=[x]).value


def fit_decay(betas, phis) -> tuple[float, float, float]:
    """Least-squares ``log phi = a + slope * beta``; returns slope, intercept and R^2."""
    b = np.asarray(betas, dtype=float)
    lp = np.log(np.asarray(phis, dtype=float))
    A = np.column_stack([b, np.ones_like(b)])
    (slope, intercept), *_ = np.linalg.lstsq(A, lp, rcond=None)
    resid = lp - A @ np.array([slope, intercept])
    ss_tot = float(np.sum((lp - lp.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 0.0
    return float(slope), float(intercept), r2


def _matrix_power(P, r):
    out = None
    base = P
    while r:
        if r & 1:
            out = base if out is None else out @ base
        r >>= 1
        if r:
            base = base @ base
    return out


# ---------------------------------------------------------------------------
# per-mode clauses


def _small_conductance(kernel, mode, budget, phi_fit, family):
    sigma = kernel.step_sigma
    sigmas = [sigma * f for f in budget.sweep_factors]
    phis = [phi_fit(s) if phi_fit else conductance_quadrature(family(s), mode.S).phi
            for s in sigmas]
    slope, intercept, r2 = fit_decay([1.0 / s for s in sigmas], phis)
    ok = slope < 0 and r2 > budget.min_r_squared
    return ClauseRecord(
        "small-conductance", "slope of log(Phi) against beta", 0.0, slope,
        PASS if ok else FAIL, "quadrature",
        detail={"sigmas": sigmas, "phi": phis, "c": -slope, "intercept": intercept,
                "r_squared": r2, "min_r_squared": budget.min_r_squared},
    )


def _rapid_mixing(kernel, mode, budget, bound, r1):
    restricted = RestrictedKernel(kernel, mode.S)
    grid = grid_for(restricted)
    dk = build_grid_kernel(restricted, grid)
    Pr = _matrix_power(dk.matrix, r1)
    rows = np.flatnonzero(mode.G.contains(grid.centers) & (dk.stationary > 0))
    if rows.size == 0:
        return ClauseRecord("rapid-mixing", "sup TV distance after r1 steps", bound, 0.0,
                            PASS, "grid-matrix-power", detail={"r1": r1, "starts": 0})
    tv = 0.5 * np.abs(Pr[rows] - dk.stationary[None, :]).sum(axis=1)
    worst = int(np.argmax(tv))
    return ClauseRecord(
        "rapid-mixing", "sup TV distance after r1 steps", bound, float(tv[worst]),
        PASS if tv[worst] <= bound else FAIL, "grid-matrix-power",
        detail={"r1": r1, "grid_n": grid.n, "starts": int(rows.size),
                "worst_start": float(grid.centers[rows[worst]]),
                "quad_error": dk.quad_error},
    )


def _never_stuck(kernel, mode, budget, bound, r2, seed, mode_index):
    region = _bounded(mode.W.difference(mode.G), kernel.target)
    if region.is_empty:
        return ClauseRecord("never-stuck", "sup P[tau(G u S^c) > r2]", bound, 0.0, PASS,
                            "monte-carlo", detail={"r2": r2, "starts": [], "vacuous": True})
    n = budget.stuck_replicas or min(budget.max_replicas, math.ceil(1.25 * 3.0 / bound))
    target_set = mode.G.union(mode.S.complement())
    starts = region_points(region, budget.stuck_starts)
    return _worst_start_probability(
        kernel, "never-stuck", "sup P[tau(G u S^c) > r2]", starts, target_set, r2, n, bound,
        lambda res: res.censored, seed, mode_index, {"r2": r2})


def _never_hitting(kernel, mode, budget, bound, horizon, seed, mode_index):
    starts = region_points(_bounded(mode.G, kernel.target), budget.hitting_starts)
    W_out = mode.W.complement()
    # tau(W^c) < min(T, tau(S^c)): W^c is entered within T - 1 steps at a point still in S
    return _worst_start_probability(
        kernel, "never-hitting", "sup P[tau(W^c) < min(r1 + r2 + 1, tau(S^c))]", starts,
        W_out, horizon - 1, budget.hitting_replicas, bound,
        lambda res: not res.censored and res.exit_state in mode.S, seed, mode_index,
        {"horizon": horizon})


def _worst_start_probability(kernel, clause, quantity, starts, target_set, cap, n, bound,
                             event, seed, mode_index, extra):
    per_start = []
    for j, x0 in enumerate(starts):
        results = hitting_times(kernel, [float(x0)] * n, target_set, cap,
                                _streams(seed, clause, mode_index, j, n))
        hits = sum(1 for res in results if event(res))
        per_start.append((float(x0), hits))
    x_worst, hits = max(per_start, key=lambda t: t[1])
    verdict, lcb, ucb = mc_verdict(hits, n, bound)
    p = hits / n
    return ClauseRecord(
        clause, quantity, bound, p, verdict, "monte-carlo", math.sqrt(p * (1 - p) / n),
        detail={**extra, "replicas_per_start": n, "starts": [s for s, _ in per_start],
                "hits": [h for _, h in per_start], "worst_start": x_worst,
                "lower_95": lcb, "upper_95": ucb},
    )


def check_assumptions_1(kernel, mode: Mode, seed: int = 0, budget: AuditBudget = AuditBudget(),
                        phi_bound: float | None = None, phi_fit=None, family=None,
                        mode_index: int = 0) -> list[ClauseRecord]:
    """The four per-mode clauses for ``mode`` under ``kernel``.

    ``phi_bound`` replaces the mode's own conductance in the bounds of the
    last three clauses; ``phi_fit(sigma)`` replaces it in the decay fit.
    ``family(sigma)`` builds the kernel at another step size (default: same
    mixture family).
    """
    sigma = kernel.step_sigma
    beta = 1.0 / sigma
    family = family or mixture_family(kernel)
    phi = phi_bound if phi_bound is not None else conductance_quadrature(kernel, mode.S).phi
    r1 = polynomial_steps(sigma, budget.r1_exponent)
    r2 = polynomial_steps(sigma, budget.r2_exponent)
    records = [
        _small_conductance(kernel, mode, budget, phi_fit, family),
        _rapid_mixing(kernel, mode, budget, phi / beta**2, r1),
        _never_stuck(kernel, mode, budget, phi / beta**2, r2, seed, mode_index),
        _never_hitting(kernel, mode, budget, phi**4, r1 + r2 + 1, seed, mode_index),
    ]
    return [replace(r, detail={"mode": mode_index, "phi": phi, **r.detail}) for r in records]


# ---------------------------------------------------------------------------
# partition clauses


def _aggregate(name, per_mode):
    recs = [recs_i[MODE_CLAUSES.index(name)] for recs_i in per_mode]
    worst = max(recs, key=lambda r: (_SEVERITY[r.verdict], r.achieved - r.bound))
    return ClauseRecord(
        name, worst.quantity, worst.bound, worst.achieved, worst_verdict(r.verdict for r in recs),
        worst.method, worst.stderr, detail={"per_mode": [r.to_dict() for r in recs]},
    )


def _lyapunov_tails(kernel, partition, budget):
    sigma = kernel.step_sigma
    beta = 1.0 / sigma
    W = partition.union_W()
    G = partition.union_G()
    outer = W.issubset(IntervalUnion.of((-budget.M, math.nextafter(budget.M, math.inf))))
    inner = IntervalUnion.of((-budget.m, budget.m)).issubset(G)
    centers = tuple(m.privileged_point for m in partition.modes)
    cap = math.exp(budget.m * beta)
    detail = {"W_inside_ball_M": outer, "ball_m_inside_G": inner, "m": budget.m, "M": budget.M,
              "centers": list(centers), "V_scale": beta}
    region = IntervalUnion.of(kernel.target.window())
    try:
        cert = drift_check(kernel, beta, region, x_grid_size=budget.drift_points,
                           centers=centers, C_cap=cap)
    except CertificateError as err:
        return ClauseRecord("lyapunov-tails", "drift constant C", cap, err.best[1], FAIL,
                            "quadrature", detail={**detail, "best_alpha": err.best[0]})
    ok = outer and inner and cert.valid
    return ClauseRecord(
        "lyapunov-tails", "drift constant C", cap, cert.C, PASS if ok else FAIL, "quadrature",
        detail={**detail, "alpha": cert.alpha, "r3": 1.0 / cert.alpha,
                "ell": sigma * math.log(cert.C) if cert.C > 0 else 0.0,
                "max_violation": cert.max_violation, "grid_points": cert.grid_points,
                "region": region.to_list()},
    )


def _never_hitting_union(kernel, partition, budget, phi_min, seed):
    bound = phi_min**4
    full = math.ceil(phi_min**-2)
    horizon = min(full, budget.horizon_cap)
    starts = np.concatenate([region_points(_bounded(m.G, kernel.target), budget.union_starts)
                             for m in partition.modes])
    rec = _worst_start_probability(
        kernel, "never-hitting-union", "sup P[tau((u W)^c) < Phi_min^-2]", starts,
        partition.union_W().complement(), horizon - 1, budget.union_replicas, bound,
        lambda res: not res.censored, seed, 0,
        {"horizon": horizon, "uncapped_horizon": full, "capped": horizon < full})
    return rec


def _non_periodicity(kernel, partition, budget, phi_min):
    stay = []
    entry = []
    for i, mi in enumerate(partition.modes):
        xs = region_points(_bounded(mi.S, kernel.target), budget.stay_points)
        out = mi.S.complement()
        q = np.array([1.0 - transition_mass(kernel, float(x), out) for x in xs])
        stay.append((i, float(q.min()), float(xs[int(np.argmin(q))])))
        for j, mj in enumerate(partition.modes):
            if j == i:
                continue
            tail = mj.S.difference(mj.G)
            m = np.array([transition_mass(kernel, float(x), tail) for x in xs])
            entry.append((i, j, float(m.max()), float(xs[int(np.argmax(m))])))
    stay_min = min(s[1] for s in stay)
    entry_max = max(e[2] for e in entry)
    bound = phi_min**4
    stay_ok = stay_min >= budget.stay_threshold
    entry_ok = entry_max < bound
    return ClauseRecord(
        "non-periodicity", "sup one-step mass into another mode's S - G", bound, entry_max,
        PASS if stay_ok and entry_ok else FAIL, "quadrature",
        detail={
            "stay": {"quantity": "inf_x Q(x, own mode)", "bound": budget.stay_threshold,
                     "achieved": stay_min, "pass": stay_ok,
                     "per_mode": [{"mode": i, "min": v, "at": x} for i, v, x in stay]},
            "entry": {"quantity": "sup_x Q(x, S_j - G_j)", "bound": bound,
                      "achieved": entry_max, "pass": entry_ok,
                      "per_pair": [{"from": i, "to": j, "max": v, "at": x}
                                   for i, j, v, x in entry]},
        },
    )


def _connected(k, edges) -> bool:
    seen = {0}
    frontier = [0]
    while frontier:
        i = frontier.pop()
        for a, b in edges:
            for u, v in ((a, b), (b, a)):
                if u == i and v not in seen:
                    seen.add(v)
                    frontier.append(v)
    return len(seen) == k


def _connectedness(kernel, partition, budget, phis, seed):
    sigma = kernel.step_sigma
    r5 = sigma ** budget.r5_exponent
    k = partition.k
    n = budget.exit_replicas
    code = name_code("connectedness")
    lo = np.ones((k, k))
    hi = np.ones((k, k))
    point = np.ones((k, k))
    censored = 0
    for i, mode in enumerate(partition.modes):
        cap = math.ceil(100.0 / phis[i])
        for j, x0 in enumerate(region_points(_bounded(mode.G, kernel.target), budget.exit_starts)):
            rngs = [stream(seed, code, i, j, r) for r in range(n)]
            tally = exit_distribution(kernel, float(x0), mode.S, partition, cap, rngs)
            censored += tally.censored
            for d in range(k):
                if d == i:
                    continue
                c = tally.counts[d]
                lo[i, d] = min(lo[i, d], lower_confidence(c, n))
                hi[i, d] = min(hi[i, d], upper_confidence(c, n) if c < n else 1.0)
                point[i, d] = min(point[i, d], c / n)
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    sure = [(i, j) for i, j in pairs if min(lo[i, j], lo[j, i]) >= r5]
    maybe = [(i, j) for i, j in pairs if min(hi[i, j], hi[j, i]) >= r5]
    if _connected(k, sure):
        verdict = PASS
    elif not _connected(k, maybe):
        verdict = FAIL
    else:
        verdict = INCONCLUSIVE
    weakest = min(min(point[i, j], point[j, i]) for i, j in pairs)
    return ClauseRecord(
        "connectedness", "weakest two-way exit frequency", r5, weakest, verdict, "monte-carlo",
        detail={"edges": [list(e) for e in sure], "candidate_edges": [list(e) for e in maybe],
                "exit_frequency": point.tolist(), "replicas_per_start": n,
                "censored": censored},
    )


def check_assumptions_2(kernel, partition: Partition, seed: int = 0,
                        budget: AuditBudget = AuditBudget(), family=None) -> AssumptionReport:
    """Audit every per-mode and partition clause; one record per clause."""
    if partition.k < 2:
        raise ConfigError("the partition audit needs at least two modes")
    family = family or mixture_family(kernel)
    phis = [conductance_quadrature(kernel, m.S).phi for m in partition.modes]
    phi_min = min(phis)
    cache: dict[float, float] = {}

    def phi_max(sigma):
        if sigma not in cache:
            k = family(sigma)
            cache[sigma] = max(conductance_quadrature(k, m.S).phi for m in partition.modes)
        return cache[sigma]

    per_mode = [check_assumptions_1(kernel, m, seed, budget, phi_bound=phi_min, phi_fit=phi_max,
                                    family=family, mode_index=i)
                for i, m in enumerate(partition.modes)]
    mode_records = [_aggregate(name, per_mode) for name in MODE_CLAUSES]
    meta = ClauseRecord(
        "meta-sets", "worst per-mode clause", 0.0, 0.0,
        worst_verdict(r.verdict for r in mode_records), "composite",
        detail={"clauses": {r.clause: r.verdict for r in mode_records}},
    )
    clauses = (
        *mode_records,
        meta,
        _lyapunov_tails(kernel, partition, budget),
        _never_hitting_union(kernel, partition, budget, phi_min, seed),
        _non_periodicity(kernel, partition, budget, phi_min),
        _connectedness(kernel, partition, budget, phis, seed),
    )
    settings = {
        "seed": seed, "phi": phis, "phi_min": phi_min, "phi_max": max(phis),
        "budget": {k: v for k, v in budget.__dict__.items()},
    }
    return AssumptionReport(kernel.step_sigma, partition, clauses, settings)
