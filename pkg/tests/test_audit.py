import json
import math

import pytest

from metastable.errors import ConfigError
from metastable.intervals import IntervalUnion
from metastable.metastability.audit import (
    DISCLAIMER,
    FAIL,
    INCONCLUSIVE,
    PASS,
    SCHEMA,
    AuditBudget,
    ClauseRecord,
    check_assumptions_1,
    check_assumptions_2,
    fit_decay,
    mc_verdict,
    polynomial_steps,
    worst_verdict,
)
from metastable.metastability.partition import Mode, Partition, symmetric_partition, two_mode_partition

from conftest import LEFT, rwm

SMALL = AuditBudget(stuck_replicas=200, max_replicas=2000, hitting_replicas=200, union_replicas=16,
                    exit_replicas=100, stay_points=40, drift_points=300,
                    sweep_factors=(0.9, 1.0, 1.1))


def test_worst_verdict_ordering():
    assert worst_verdict([]) == PASS
    assert worst_verdict([PASS, INCONCLUSIVE]) == INCONCLUSIVE
    assert worst_verdict([INCONCLUSIVE, FAIL, PASS]) == FAIL


@pytest.mark.parametrize("hits, n, bound, expected", [
    (0, 3000, 1e-2, PASS),
    (0, 100, 1e-6, INCONCLUSIVE),
    (50, 100, 0.1, FAIL),
    (10, 100, 0.1, INCONCLUSIVE),
])
def test_mc_verdict(hits, n, bound, expected):
    verdict, lo, hi = mc_verdict(hits, n, bound)
    assert verdict == expected and lo <= hits / n <= hi


def test_polynomial_steps_are_exact_powers():
    assert polynomial_steps(0.5, 6) == 64
    assert polynomial_steps(0.3, 4) == math.ceil(0.3 ** -4)
    assert polynomial_steps(2.0, 1) == 1


def test_fit_decay_recovers_exact_line():
    betas = [2.0, 2.5, 3.0, 4.0]
    phis = [math.exp(0.7 - 1.9 * b) for b in betas]
    slope, intercept, r2 = fit_decay(betas, phis)
    assert slope == pytest.approx(-1.9) and intercept == pytest.approx(0.7)
    assert r2 == pytest.approx(1.0)


def test_equal_G_and_W_makes_never_stuck_vacuous():
    G = IntervalUnion.of((-3.0, 0.0))
    mode = Mode(LEFT, G, G, -1.0)
    recs = check_assumptions_1(rwm(0.4), mode, 1, SMALL)
    stuck = recs[2]
    assert stuck.clause == "never-stuck" and stuck.verdict == PASS
    assert stuck.detail["vacuous"]


def test_cut_through_a_mode_fails_small_conductance():
    mode = two_mode_partition(cut=-1.0).modes[0]
    rec = check_assumptions_1(rwm(0.3), mode, 0, SMALL)[0]
    assert rec.clause == "small-conductance" and rec.verdict == FAIL
    assert rec.detail["r_squared"] < SMALL.min_r_squared


def test_partition_audit_needs_two_modes():
    full = IntervalUnion.full()
    p = Partition((Mode(full, IntervalUnion.of((-1.0, 1.0)), IntervalUnion.of((-2.0, 2.0)), 0.0),))
    with pytest.raises(ConfigError):
        check_assumptions_2(rwm(0.4), p, 0, SMALL)


@pytest.fixture(scope="module")
def report():
    return check_assumptions_2(rwm(0.4), symmetric_partition(), 7, SMALL)


def test_report_has_one_record_per_clause(report):
    names = [c.clause for c in report.clauses]
    assert names == ["small-conductance", "rapid-mixing", "never-stuck", "never-hitting",
                     "meta-sets", "lyapunov-tails", "never-hitting-union",
                     "non-periodicity", "connectedness"]
    assert FAIL not in {c.verdict for c in report.clauses}
    assert report.verdict in (PASS, INCONCLUSIVE)


def test_report_clause_details(report):
    assert report.clause("connectedness").detail["edges"] == [[0, 1]]
    stay = report.clause("non-periodicity").detail["stay"]
    assert stay["pass"] and stay["achieved"] >= 0.5
    assert report.clause("rapid-mixing").achieved <= report.clause("rapid-mixing").bound
    with pytest.raises(KeyError):
        report.clause("nope")


def test_report_json(report):
    d = json.loads(report.to_json())
    assert d["schema"] == SCHEMA and d["disclaimer"] == DISCLAIMER
    assert d["sigma"] == 0.4 and len(d["clauses"]) == 9
    assert d["partition"]["k"] == 2


def test_json_encodes_non_finite_values():
    rec = ClauseRecord("x", "q", math.inf, -math.inf, PASS, "m", detail={"v": math.nan})
    d = rec.to_dict()
    assert (d["bound"], d["achieved"], d["detail"]["v"]) == ("inf", "-inf", "nan")
    json.dumps(d, allow_nan=False)
