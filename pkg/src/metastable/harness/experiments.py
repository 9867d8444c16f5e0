"""Sigma sweeps, hitting-time runs, assumption audits and Cheeger audits.

Each experiment is split into one task per sigma.  A task is a pure function
of ``(config, sigma index)``: its random streams are keyed by
``(seed, experiment code, sigma index, replica)``, so results do not depend on
how tasks are scheduled, and adding replicas never changes existing ones.
Tasks run in a process pool whose size comes from ``METASTABLE_WORKERS``;
results are merged in sigma order.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from ..discretize import (
    Grid,
    build_grid_kernel,
    cheeger_check,
    grid_for,
    spectral_gap,
    threshold_conductance,
)
from ..errors import ConfigError, MetastableError
from ..intervals import IntervalUnion
from ..kernels import RwmKernel, geometric_mean_tau, hitting_times
from ..metastability.audit import FAIL, INCONCLUSIVE, PASS, check_assumptions_2, worst_verdict
from ..metastability.conductance import (
    cheeger_brackets,
    cheeger_statistic,
    conductance_mc,
    conductance_quadrature,
)
from ..metastability.partition import Mode, Partition, literal_partition, two_mode_partition
from ..metastability.ratios import metastability_ratios
from ..streams import name_code, stream
from ..targets import mixture
from .config import ExperimentConfig
from .output import ResultRow

ERROR = "ERROR"
LEFT = IntervalUnion.below(0.0)


@dataclass
class TaskResult:
    rows: list[ResultRow]
    status: str = PASS
    #: extra files to write, name -> text
    files: dict = field(default_factory=dict)


def worker_count() -> int:
    raw = os.environ.get("METASTABLE_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError as err:
        raise ConfigError(f"METASTABLE_WORKERS must be an integer, got {raw!r}") from err
    if n < 1:
        raise ConfigError("METASTABLE_WORKERS must be at least 1")
    return n


def kernel_for(sigma: float) -> RwmKernel:
    return RwmKernel(sigma, mixture(sigma))


def partition_for(config: ExperimentConfig, sigma: float) -> Partition:
    r = dict(config.regions)
    if "modes" in r:
        modes = []
        for m in r["modes"]:
            modes.append(Mode(IntervalUnion.from_list(m["S"]), IntervalUnion.from_list(m["G"]),
                              IntervalUnion.from_list(m["W"]), float(m["privileged_point"])))
        return Partition(tuple(modes))
    if r.get("literal"):
        return literal_partition(sigma)
    unknown = set(r) - {"cut", "g_depth", "w_depth"}
    if unknown:
        raise ConfigError(f"unknown region keys {sorted(unknown)}")
    return two_mode_partition(float(r.get("cut", 0.0)), float(r.get("g_depth", 3.0)),
                              float(r.get("w_depth", 4.0)))


def _grid(config, kernel):
    g = grid_for(kernel)
    return g if config.grid_n is None else Grid(g.lo, g.hi, config.grid_n)


class _Rows:
    def __init__(self, config, sigma, t0):
        self.config = config
        self.sigma = sigma
        self.t0 = t0
        self.rows = []

    def add(self, quantity, value, stderr=None, method="quadrature"):
        wall = (time.perf_counter() - self.t0) * 1e3 if self.config.timings else None
        self.rows.append(ResultRow(self.config.experiment, self.sigma, quantity, value, stderr,
                                   method, self.config.seed, wall))


# ---------------------------------------------------------------------------


def _conductance_task(config: ExperimentConfig, i: int, out: _Rows) -> str:
    sigma = config.sigmas[i]
    kernel = kernel_for(sigma)
    cv = conductance_quadrature(kernel, LEFT, config.tol("quad_rtol"))
    out.add("phi", cv.phi, 0.0)
    out.add("phi_quad_error", cv.error, None)
    if config.replicas > 0:
        code = name_code(config.experiment)
        exits = 0
        kept = 0
        for r in range(config.replicas):
            mc = conductance_mc(kernel, LEFT, config.mc_batch, stream(config.seed, code, i, r))
            exits += round(mc.phi * mc.samples)
            kept += mc.samples
        p = exits / kept
        out.add("phi", p, math.sqrt(p * (1.0 - p) / kept), "monte-carlo")
        out.add("phi_mc_samples", kept, None, "monte-carlo")
    stat = cheeger_statistic(cv.phi, sigma)
    lo, hi = cheeger_brackets(sigma)
    inside = lo <= stat <= hi
    out.add("statistic", stat, 0.0)
    out.add("bracket_lo", lo, None, "closed-form")
    out.add("bracket_hi", hi, None, "closed-form")
    out.add("in_bracket", inside, None, "check")
    return PASS if inside else FAIL


def _gap_task(config: ExperimentConfig, i: int, out: _Rows) -> str:
    sigma = config.sigmas[i]
    kernel = kernel_for(sigma)
    grid = _grid(config, kernel)
    dk = build_grid_kernel(kernel, grid, config.tol("grid_tol"))
    sp = spectral_gap(dk, config.tol("eig_tol"))
    cut = threshold_conductance(dk)
    verdict = cheeger_check(sp.gap, cut.phi, config.tol("cheeger_slack"))
    phi = conductance_quadrature(kernel, LEFT, config.tol("quad_rtol")).phi
    out.add("grid_n", grid.n, None, "grid")
    out.add("spectral_gap", sp.gap, None, "grid-power-iteration")
    out.add("relaxation_time", 1.0 / sp.gap if sp.gap > 0 else math.inf, None,
            "grid-power-iteration")
    out.add("lambda2", sp.lambda2, None, "grid-power-iteration")
    out.add("lambda_min", sp.lambda_min, None, "grid-power-iteration")
    out.add("eigen_residual", sp.residual, None, "grid-power-iteration")
    out.add("phi_threshold", cut.phi, None, "grid-threshold-cut")
    out.add("cut_position", cut.cut_position, None, "grid-threshold-cut")
    out.add("cheeger_lower_margin", verdict.lower_margin, None, "check")
    out.add("cheeger_upper_margin", verdict.upper_margin, None, "check")
    out.add("cheeger_pass", verdict.passed, None, "check")
    out.add("phi", phi, 0.0)
    ratio = metastability_ratios(sp.gap, phi, [], phi).gap_ratio
    ratio_ok = config.tol("gap_ratio_lo") <= ratio <= config.tol("gap_ratio_hi")
    out.add("log_gap_over_log_phi", ratio, None, "grid+quadrature")
    out.add("gap_ratio_in_band", ratio_ok, None, "check")
    if config.refine:
        fine = build_grid_kernel(kernel, grid.refined(2), config.tol("grid_tol"))
        gap2 = spectral_gap(fine, config.tol("eig_tol")).gap
        out.add("spectral_gap_refined", gap2, None, "grid-power-iteration")
        out.add("refinement_change", abs(gap2 - sp.gap) / sp.gap, None, "grid")
    return PASS if verdict.passed and ratio_ok else FAIL


def _hitting_task(config: ExperimentConfig, i: int, out: _Rows) -> str:
    sigma = config.sigmas[i]
    kernel = kernel_for(sigma)
    phi = conductance_quadrature(kernel, LEFT, config.tol("quad_rtol")).phi
    cap = config.cap or math.ceil(100.0 / phi)
    code = name_code(config.experiment)
    rngs = [stream(config.seed, code, i, r) for r in range(config.replicas)]
    results = hitting_times(kernel, [config.start] * config.replicas, LEFT.complement(), cap, rngs)
    out.add("phi", phi, 0.0)
    out.add("cap", cap, None, "config")
    for res in results:
        if res.censored:
            out.add("tau", math.inf, None, "censored")
        else:
            out.add("tau", res.tau, None, "monte-carlo")
    done = [r.tau for r in results if not r.censored]
    censored = len(results) - len(done)
    out.add("censored_fraction", censored / len(results), None, "monte-carlo")
    if not done:
        return FAIL
    eps = config.tol("ratio_epsilon")
    diag = metastability_ratios(0.5, 0.5, done, phi, eps)
    out.add("geometric_mean_tau", geometric_mean_tau([r for r in results if not r.censored]),
            None, "monte-carlo")
    out.add("median_ratio", diag.median_tau_ratio, None, "monte-carlo")
    out.add(f"fraction_ratio_above_{1 + eps:g}", diag.fraction_above, None, "monte-carlo")
    ok = (config.tol("ratio_median_lo") <= diag.median_tau_ratio <= config.tol("ratio_median_hi")
          and diag.fraction_above < config.tol("ratio_max_fraction"))
    out.add("ratio_check", ok, None, "check")
    return PASS if ok else FAIL


_VERDICT_CODE = {PASS: 0, INCONCLUSIVE: 1, FAIL: 2}


def _verify_task(config: ExperimentConfig, i: int, out: _Rows):
    sigma = config.sigmas[i]
    kernel = kernel_for(sigma)
    report = check_assumptions_2(kernel, partition_for(config, sigma), config.seed,
                                 config.audit_budget())
    for c in report.clauses:
        out.add(f"{c.clause}:achieved", c.achieved, c.stderr, c.method)
        out.add(f"{c.clause}:bound", c.bound, None, c.method)
        out.add(f"{c.clause}:verdict", _VERDICT_CODE[c.verdict], None, c.verdict)
    return report.verdict, {f"assumptions_sigma{sigma:g}.json": report.to_json()}


def _cheeger_task(config: ExperimentConfig, i: int, out: _Rows) -> str:
    sigma = config.sigmas[i]
    kernel = kernel_for(sigma)
    grid = _grid(config, kernel)
    dk = build_grid_kernel(kernel, grid, config.tol("grid_tol"))
    sp = spectral_gap(dk, config.tol("eig_tol"))
    cut = threshold_conductance(dk)
    v = cheeger_check(sp.gap, cut.phi, config.tol("cheeger_slack"))
    out.add("grid_n", grid.n, None, "grid")
    out.add("detailed_balance_residual", dk.detailed_balance_residual(), None, "grid")
    out.add("spectral_gap", sp.gap, None, "grid-power-iteration")
    out.add("phi_threshold", cut.phi, None, "grid-threshold-cut")
    out.add("cheeger_lower_margin", v.lower_margin, None, "check")
    out.add("cheeger_upper_margin", v.upper_margin, None, "check")
    out.add("cheeger_pass", v.passed, None, "check")
    return PASS if v.passed else FAIL


_TASKS = {
    "conductance-sweep": _conductance_task,
    "gap-sweep": _gap_task,
    "hitting-times": _hitting_task,
    "verify-assumptions": _verify_task,
    "cheeger-audit": _cheeger_task,
}


def run_task(config: ExperimentConfig, i: int) -> TaskResult:
    """Run one sigma of an experiment; module errors become a flagged row, not a crash."""
    out = _Rows(config, config.sigmas[i], time.perf_counter())
    try:
        res = _TASKS[config.experiment](config, i, out)
    except ConfigError:
        raise
    except (MetastableError, ValueError, ArithmeticError) as err:
        out.add("error", math.nan, None, f"aborted:{type(err).__name__}:{err}")
        return TaskResult(out.rows, ERROR)
    if isinstance(res, tuple):
        return TaskResult(out.rows, res[0], res[1])
    return TaskResult(out.rows, res)


def _trend_rows(config, results):
    """Distance of the statistic to 1 must not grow as sigma decreases."""
    stats = {}
    for res in results:
        for row in res.rows:
            if row.quantity == "statistic":
                stats[row.sigma] = row.value
    order = sorted(stats, reverse=True)
    dist = [abs(stats[s] - 1.0) for s in order]
    ok = all(b <= a for a, b in zip(dist, dist[1:]))
    row = ResultRow(config.experiment, None, "trend_nonincreasing_distance", ok, None, "check",
                    config.seed)
    return [row], (PASS if ok else FAIL)


def run_experiment(config: ExperimentConfig, sink=None, workers: int | None = None):
    """Run every sigma of ``config``; rows go to ``sink(rows)`` in sigma order as they finish.

    Returns the task results and the overall status.
    """
    workers = worker_count() if workers is None else workers
    idx = range(len(config.sigmas))
    results = []
    if workers > 1 and len(config.sigmas) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(config.sigmas))) as pool:
            for res in pool.map(run_task, [config] * len(idx), idx):
                results.append(res)
                if sink:
                    sink(res.rows)
    else:
        for i in idx:
            res = run_task(config, i)
            results.append(res)
            if sink:
                sink(res.rows)
    statuses = [r.status for r in results]
    if config.experiment == "conductance-sweep" and len(config.sigmas) > 1:
        rows, st = _trend_rows(config, results)
        results.append(TaskResult(rows, st))
        statuses.append(st)
        if sink:
            sink(rows)
    if ERROR in statuses:
        status = FAIL
    else:
        status = worst_verdict(statuses)
    return results, status


__all__ = ["TaskResult", "run_experiment", "run_task", "worker_count", "kernel_for",
           "partition_for", "ERROR"]
