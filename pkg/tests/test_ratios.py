import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metastable.metastability.ratios import metastability_ratios


def test_gap_equal_to_phi_gives_unit_ratio():
    d = metastability_ratios(0.01, 0.01, [], 0.01)
    assert d.gap_ratio == pytest.approx(1.0)
    assert math.isnan(d.median_tau_ratio) and math.isnan(d.fraction_above)


def test_tau_at_inverse_conductance_gives_unit_ratio():
    phi = 1e-3
    d = metastability_ratios(0.5, 0.5, [1 / phi, 1 / phi**1.5, 0], phi)
    np.testing.assert_allclose(d.tau_ratios, [1.0, 1.5, 0.0])
    assert d.median_tau_ratio == pytest.approx(1.0)
    assert d.fraction_above == pytest.approx(1 / 3)


def test_censored_samples_rejected():
    with pytest.raises(ValueError):
        metastability_ratios(0.5, 0.5, [10, None], 0.1)


@pytest.mark.parametrize("gap, phi_min, phi_S", [(0.0, 0.1, 0.1), (0.1, 1.0, 0.1), (0.1, 0.1, 1.5)])
def test_out_of_range_inputs_rejected(gap, phi_min, phi_S):
    with pytest.raises(ValueError):
        metastability_ratios(gap, phi_min, [1.0], phi_S)


@given(st.lists(st.floats(0.0, 1e12), min_size=1, max_size=20),
       st.floats(1e-12, 0.999))
def test_tau_ratios_are_non_negative(taus, phi):
    d = metastability_ratios(0.5, 0.5, taus, phi)
    assert np.all(d.tau_ratios >= 0)
    assert 0.0 <= d.fraction_above <= 1.0
