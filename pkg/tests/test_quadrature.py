import math

import numpy as np
import pytest

from metastable.errors import QuadratureError
from metastable.intervals import IntervalUnion
from metastable.quadrature import gauss_legendre, integrate
from metastable.targets import mixture


def test_linear_on_unit_interval():
    res = integrate(lambda x: x, (0.0, 1.0), 1e-12)
    assert res.value == pytest.approx(0.5, abs=1e-12)


def test_gaussian_normalization_over_real_line():
    s = 0.3
    res = integrate(lambda x: np.exp(-0.5 * (x / s) ** 2) / (s * math.sqrt(2 * math.pi)),
                    IntervalUnion.full(), 1e-12, window=(-12 * s, 12 * s))
    assert res.value == pytest.approx(1.0, abs=1e-11)


def test_first_moment_against_trapezoid_oracle():
    t = mixture(0.3)
    res = integrate(lambda x: x * t.density(x), IntervalUnion.below(0.0), 1e-12,
                    window=(-4.0, 4.0))
    # independent oracle: 10^7-point trapezoid on [-4, 0]; the tail below -4 is < e^-50
    x = np.linspace(-4.0, 0.0, 10**7)
    oracle = np.trapezoid(x * t.density(x), x)
    assert res.value == pytest.approx(oracle, abs=1e-8)


def test_halving_tolerance_never_increases_error():
    t = mixture(0.2)
    f = lambda x: t.density(x) * np.cos(3 * x)  # noqa: E731
    errs = [integrate(f, (-3.0, 3.0), tol).error for tol in (1e-4, 5e-5, 2.5e-5, 1.25e-5, 6e-6)]
    assert all(b <= a for a, b in zip(errs, errs[1:]))


def test_budget_exhaustion_carries_best_estimate():
    with pytest.raises(QuadratureError) as info:
        integrate(lambda x: 1.0 / np.sqrt(np.abs(x - 1 / math.pi)), (0.0, 1.0), 1e-14,
                  max_panels=20)
    assert info.value.value > 0 and info.value.error > 0


def test_union_of_pieces_adds_up():
    u = IntervalUnion.of((0.0, 1.0), (2.0, 3.0))
    assert integrate(lambda x: x, u, 1e-12).value == pytest.approx(0.5 + 2.5, abs=1e-12)


def test_empty_domain_is_zero():
    assert integrate(lambda x: x, IntervalUnion.empty()).value == 0.0


@pytest.mark.parametrize("q", [1, 2, 4, 8, 16])
def test_gauss_legendre_exact_for_polynomials(q):
    t, w = gauss_legendre(q)
    for k in range(2 * q):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert np.dot(w, t ** k) == pytest.approx(exact, abs=1e-13)
