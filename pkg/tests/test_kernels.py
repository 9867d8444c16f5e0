import math

import numpy as np
import pytest

from metastable.discretize import Grid, build_grid_kernel
from metastable.errors import DomainError
from metastable.estimate import batch_means
from metastable.intervals import IntervalUnion
from metastable.kernels import (
    RestrictedKernel,
    RwmKernel,
    exit_distribution,
    geometric_mean_tau,
    hitting_time,
    hitting_times,
    restricted_step,
    rwm_step,
    simulate,
    trace_chain,
    Trajectory,
)
from metastable.metastability.audit import transition_mass
from metastable.metastability.conductance import conductance_quadrature
from metastable.metastability.partition import symmetric_partition
from metastable.streams import stream
from metastable.targets import RestrictedTarget, mixture

from conftest import LEFT, RIGHT, rwm


def test_uphill_proposal_always_accepted():
    k = rwm(0.3)
    x = np.full(1000, -0.5)
    z = np.full(1000, -0.5 / 0.3)  # lands on the mode at -1
    u = np.random.default_rng(0).random(1000)
    y, _ = k.advance(x, k.log_target(x), z, u)
    assert np.all(y == -1.0)


def test_downhill_uses_log_ratio():
    k = rwm(0.3)
    x = np.array([-1.0, -1.0])
    z = np.array([1.0, 1.0])
    ratio = math.exp(k.log_target(-0.7) - k.log_target(-1.0))
    u = np.array([ratio * 0.999, ratio * 1.001])
    y, _ = k.advance(x, k.log_target(x), z, u)
    assert y[0] == pytest.approx(-0.7) and y[1] == -1.0


def test_acceptance_rate_at_mode_matches_quadrature():
    k = rwm(0.2)
    n = 10**5
    g = stream(1, 2)
    x = np.full(n, -1.0)
    y, _ = k.advance(x, k.log_target(x), g.standard_normal(n), g.random(n))
    rate = np.mean(y != x)
    oracle = transition_mass(k, -1.0, IntervalUnion.full())
    assert 0.5 <= oracle <= 0.9
    assert abs(rate - oracle) <= 4 * math.sqrt(oracle * (1 - oracle) / n)


def test_one_step_law_mirrors_between_modes():
    k = rwm(0.3)
    n = 10**5
    g1, g2 = stream(5, 1), stream(5, 2)
    x = np.full(n, -1.0)
    y1, _ = k.advance(x, k.log_target(x), g1.standard_normal(n), g1.random(n))
    y2, _ = k.advance(-x, k.log_target(-x), g2.standard_normal(n), g2.random(n))
    s1, s2 = np.sort(y1), np.sort(-y2)
    grid = np.linspace(-2.5, 0.5, 601)
    d = np.max(np.abs(np.searchsorted(s1, grid) - np.searchsorted(s2, grid))) / n
    assert d < 4 * 1.36 * math.sqrt(2 / n)


def test_restricted_with_full_support_matches_unrestricted():
    k = rwm(0.3)
    r = RestrictedKernel(k, IntervalUnion.full())
    assert rwm_step(k, -0.4, stream(3, 1)) == restricted_step(r, -0.4, stream(3, 1))


def test_restricted_never_leaves_support():
    s = 0.3
    r = RestrictedKernel(rwm(s), LEFT)
    n = 10**5
    g = stream(4, 0)
    x = np.full(n, -s / 10)
    y, _ = r.advance(x, r.log_target(x), g.standard_normal(n), g.random(n))
    assert np.all(y < 0)
    assert np.mean(y == x) > 0.4  # about half the proposals leave and are rejected


def test_restricted_step_outside_support_is_domain_error():
    r = RestrictedKernel(rwm(0.3), LEFT)
    with pytest.raises(DomainError):
        restricted_step(r, 0.5, stream(0))


def test_restriction_identity_on_grid():
    # restricting the kernel equals running Metropolis against the restricted target
    s = 0.3
    r = RestrictedKernel(rwm(s), LEFT)
    alt = RwmKernel(s, RestrictedTarget(mixture(s), LEFT))
    grid = Grid(-1 - 12 * s, 0.0, 400)
    a = build_grid_kernel(r, grid)
    b = build_grid_kernel(alt, grid)
    assert np.max(np.abs(a.matrix - b.matrix)) < 1e-12


def test_simulate_zero_steps():
    t = simulate(rwm(0.3), -1.0, 0, stream(0))
    assert len(t) == 1 and t.states[0] == -1.0


def test_simulate_replay_is_bitwise_identical():
    a = simulate(rwm(0.3), -1.0, 500, stream(9, 1))
    b = simulate(rwm(0.3), -1.0, 500, stream(9, 1))
    assert np.array_equal(a.states, b.states)


def test_long_run_occupies_each_half_equally():
    t = simulate(rwm(0.3), -1.0, 10**5, stream(11, 0))
    est = batch_means(t.states < 0, 50)
    assert abs(est.value - 0.5) <= 4 * est.stderr


def test_hitting_time_zero_when_starting_inside():
    res = hitting_time(rwm(0.3), 0.5, RIGHT, 10, stream(0))
    assert res.tau == 0 and res.exit_state == 0.5


def test_empty_target_set_is_censored():
    res = hitting_time(rwm(0.3), -1.0, IntervalUnion.empty(), 1000, stream(0))
    assert res.censored and res.cap == 1000


def test_hitting_results_respect_cap_and_target():
    results = hitting_times(rwm(0.4), [-1.0] * 50, RIGHT, 200,
                            [stream(2, r) for r in range(50)])
    for r in results:
        assert r.censored or (r.tau <= 200 and r.exit_state >= 0)


def test_geometric_mean_tau_near_inverse_conductance():
    s = 0.35
    k = rwm(s)
    phi = conductance_quadrature(k, LEFT).phi
    results = hitting_times(k, [-1.0] * 200, RIGHT, math.ceil(100 / phi),
                            [stream(21, r) for r in range(200)])
    g = geometric_mean_tau(results)
    assert 1 / 3 <= g * phi <= 3


def test_raising_cap_never_loses_uncensored_times():
    k = rwm(0.35)
    rngs = lambda: [stream(8, r) for r in range(100)]  # noqa: E731
    short = hitting_times(k, [-1.0] * 100, RIGHT, 50, rngs())
    long = hitting_times(k, [-1.0] * 100, RIGHT, 500, rngs())
    assert sum(not r.censored for r in long) >= sum(not r.censored for r in short)
    for a, b in zip(short, long):
        if not a.censored:
            assert a.tau == b.tau


def test_hitting_times_do_not_depend_on_batch_composition():
    k = rwm(0.4)
    alone = hitting_times(k, [-1.0], RIGHT, 10**4, [stream(5, 3)])[0]
    batch = hitting_times(k, [-1.0] * 4, RIGHT, 10**4, [stream(5, r) for r in range(4)])[3]
    assert alone == batch


def test_trace_chain_definition():
    t = Trajectory(np.array([-1.0, 0.5, -2.0, 0.7]))
    tr = trace_chain(t, LEFT)
    assert tr.states.tolist() == [-1.0, -2.0]
    assert tr.times.tolist() == [0, 2]


def test_trace_on_full_line_is_identity_and_idempotent():
    t = simulate(rwm(0.4), -1.0, 300, stream(1))
    assert np.array_equal(trace_chain(t, IntervalUnion.full()).states, t.states)
    once = trace_chain(t, LEFT)
    twice = trace_chain(once, LEFT)
    assert np.array_equal(once.states, twice.states) and np.array_equal(once.times, twice.times)


def test_trace_preserves_conditional_stationary_mass():
    k = rwm(0.3)
    t = simulate(k, -1.0, 10**5, stream(13, 0))
    tr = trace_chain(t, LEFT)
    A = IntervalUnion.of((-1.2, -0.8))
    target = k.target.interval_mass(A) / k.target.interval_mass(LEFT)
    est = batch_means(A.contains(tr.states), 50)
    assert abs(est.value - target) <= 4 * est.stderr


def test_exit_distribution_two_modes():
    part = symmetric_partition()
    k = rwm(0.4)
    tally = exit_distribution(k, -1.0, part.modes[0].S, part, 10**5,
                              [stream(6, r) for r in range(40)])
    assert tally.counts[1] + tally.censored == 40
    assert tally.counts[0] == 0
    assert tally.frequencies.sum() == pytest.approx(1 - tally.censored / 40)


def test_exit_distribution_start_must_be_home():
    part = symmetric_partition()
    with pytest.raises(DomainError):
        exit_distribution(rwm(0.4), 1.0, part.modes[0].S, part, 10, [stream(0)])
