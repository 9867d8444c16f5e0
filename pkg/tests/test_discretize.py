import itertools

import numpy as np
import pytest

from metastable.discretize import (
    DiscreteKernel,
    Grid,
    build_grid_kernel,
    cheeger_check,
    grid_for,
    read_matrix,
    spectral_gap,
    threshold_conductance,
    write_matrix,
)
from metastable.errors import DegenerateError, GridLeakageError
from metastable.kernels import RestrictedKernel
from metastable.metastability.conductance import conductance_quadrature

from conftest import LEFT, rwm


# --- oracles -----------------------------------------------------------------


def jacobi_eigenvalues(A, tol=1e-15, max_sweeps=100):
    """All eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(A ** 2) - np.sum(np.diag(A) ** 2), 0.0))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
    return np.sort(np.diag(A))


def birth_death_chain(n, seed):
    """Random reversible nearest-neighbour chain with a two-humped stationary law."""
    g = np.random.default_rng(seed)
    x = np.linspace(-1.5, 1.5, n)
    pi = np.exp(-8 * (np.abs(x) - 1) ** 2) * g.uniform(0.5, 1.5, n)
    pi /= pi.sum()
    P = np.zeros((n, n))
    for i in range(n - 1):
        q = g.uniform(0.05, 0.45) * min(1.0, pi[i + 1] / pi[i])
        P[i, i + 1] = q
        P[i + 1, i] = q * pi[i] / pi[i + 1]
    np.fill_diagonal(P, 1.0 - P.sum(axis=1))
    assert np.all(np.diag(P) >= 0)
    return DiscreteKernel.from_matrix(P, pi)


def brute_force_conductance(dk):
    n = dk.n
    Q = dk.flows()
    masks = np.array(list(itertools.product([0.0, 1.0], repeat=n)))
    mass = masks @ dk.stationary
    cut = np.einsum("si,ij,sj->s", masks, Q, 1.0 - masks)
    ok = (mass > 0) & (mass <= 0.5 + 1e-12)
    return float(np.min(cut[ok] / mass[ok]))


# --- spectral gap --------------------------------------------------------------


@pytest.mark.parametrize("p", [0.1, 0.3, 0.45])
def test_two_state_gap(p):
    dk = DiscreteKernel.from_matrix([[1 - p, p], [p, 1 - p]], [0.5, 0.5])
    assert spectral_gap(dk).gap == pytest.approx(2 * p, abs=1e-12)


def test_identity_has_zero_gap():
    dk = DiscreteKernel.from_matrix(np.eye(4), np.full(4, 0.25))
    assert spectral_gap(dk).gap == 0.0


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gap_matches_jacobi_oracle(seed):
    dk = birth_death_chain(50, seed)
    s = np.sqrt(dk.stationary)
    A = s[:, None] * dk.matrix / s[None, :]
    ev = jacobi_eigenvalues(0.5 * (A + A.T))
    oracle = 1.0 - max(abs(ev[-2]), abs(ev[0]))
    res = spectral_gap(dk)
    assert res.gap == pytest.approx(oracle, abs=1e-10)
    assert res.lambda2 == pytest.approx(ev[-2], abs=1e-10)
    assert res.lambda_min == pytest.approx(ev[0], abs=1e-10)


def test_jacobi_oracle_itself_on_known_matrix():
    A = np.array([[2.0, 1.0], [1.0, 2.0]])
    assert jacobi_eigenvalues(A) == pytest.approx([1.0, 3.0], abs=1e-14)


def test_negative_lambda_min_sets_gap():
    # period-two flavour: lambda_min = -0.8 dominates lambda_2
    P = np.array([[0.1, 0.9], [0.9, 0.1]])
    res = spectral_gap(DiscreteKernel.from_matrix(P, [0.5, 0.5]))
    assert res.lambda_min == pytest.approx(-0.8)
    assert res.gap == pytest.approx(0.2)


def test_deflated_vector_is_orthogonal_to_stationary_root():
    dk = build_grid_kernel(rwm(0.4))
    res = spectral_gap(dk)
    assert abs(res.vector @ np.sqrt(dk.stationary)) < 1e-8


def test_gap_invariant_under_relabeling():
    dk = build_grid_kernel(rwm(0.4))
    flipped = DiscreteKernel.from_matrix(dk.matrix[::-1, ::-1], dk.stationary[::-1] / dk.stationary.sum())
    assert spectral_gap(dk).gap == pytest.approx(spectral_gap(flipped).gap, abs=1e-12)


@pytest.mark.parametrize("sigma", [0.4, 0.3, 0.2])
def test_grid_refinement_changes_gap_little(sigma):
    k = rwm(sigma)
    g = grid_for(k)
    a = spectral_gap(build_grid_kernel(k, g)).gap
    b = spectral_gap(build_grid_kernel(k, g.refined(2))).gap
    assert abs(a - b) / a < 0.05


# --- grid construction -----------------------------------------------------------


def test_rows_sum_to_one_and_balance():
    dk = build_grid_kernel(rwm(0.3), Grid(-3.0, 3.0, 400))
    assert dk.row_sum_error() < 1e-12
    assert dk.detailed_balance_residual() < 1e-8


def test_stationary_vector_is_left_eigenvector():
    k = rwm(0.3)
    dk = build_grid_kernel(k, Grid(-4.6, 4.6, 400))
    vals, vecs = np.linalg.eig(dk.matrix.T)
    v = np.real(vecs[:, np.argmin(np.abs(vals - 1.0))])
    v /= v.sum()
    masses = k.target.cell_masses(dk.grid.edges)
    assert np.abs(v - masses).sum() < 1e-6


def test_restricted_kernel_never_flows_out_of_support():
    s = 0.3
    r = RestrictedKernel(rwm(s), LEFT)
    dk = build_grid_kernel(r, Grid(-4.6, 3.0, 380))  # 0 is a cell edge
    right = dk.grid.centers > 0
    assert np.all(dk.matrix[~right][:, right] == 0.0)
    assert np.all(dk.stationary[right] == 0.0)
    assert dk.row_sum_error() < 1e-12


def test_narrow_grid_raises_leakage_error():
    with pytest.raises(GridLeakageError):
        build_grid_kernel(rwm(0.3), Grid(-1.5, 1.5, 400))


def test_grid_defaults():
    g = grid_for(rwm(0.3))
    assert g.n >= 400 and g.n % 2 == 0
    assert g.width <= 0.3 / 40 + 1e-12
    assert g.centers[0] == pytest.approx(g.lo + 0.5 * g.width)


def test_matrix_dump_round_trip(tmp_path):
    dk = birth_death_chain(8, 3)
    write_matrix(tmp_path / "m.txt", dk)
    assert np.array_equal(read_matrix(tmp_path / "m.txt"), dk.matrix)


# --- threshold conductance ------------------------------------------------------


@pytest.mark.parametrize("n", [6, 10, 14])
@pytest.mark.parametrize("sigma", [0.3, 0.5])
def test_threshold_matches_exhaustive_search_on_mixture_grids(n, sigma):
    k = rwm(sigma)
    lo, hi = k.target.window()
    # coarse cells: the matrix is inexact, but both searches see the same matrix
    dk = build_grid_kernel(k, Grid(lo, hi, n), tol=1.0)
    assert threshold_conductance(dk).phi == pytest.approx(brute_force_conductance(dk), rel=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_threshold_matches_exhaustive_search_on_birth_death(seed):
    dk = birth_death_chain(12, seed)
    assert threshold_conductance(dk).phi == pytest.approx(brute_force_conductance(dk), rel=1e-12)


def test_symmetric_mixture_cuts_at_midpoint():
    cut = threshold_conductance(build_grid_kernel(rwm(0.3)))
    assert cut.cut_position == pytest.approx(0.0, abs=1e-12)


def test_two_state_conductance_and_cheeger():
    p = 0.3
    dk = DiscreteKernel.from_matrix([[1 - p, p], [p, 1 - p]], [0.5, 0.5])
    phi = threshold_conductance(dk).phi
    assert phi == pytest.approx(p)
    assert cheeger_check(spectral_gap(dk).gap, phi).passed


def test_threshold_close_to_continuous_conductance():
    k = rwm(0.3)
    grid_phi = threshold_conductance(build_grid_kernel(k)).phi
    assert grid_phi == pytest.approx(conductance_quadrature(k, LEFT).phi, rel=0.02)


def test_single_cell_mass_is_degenerate():
    dk = DiscreteKernel.from_matrix(np.eye(3), [1.0, 0.0, 0.0])
    with pytest.raises(DegenerateError):
        threshold_conductance(dk)


@pytest.mark.parametrize("gap,phi,passed,which", [
    (0.6, 0.3, True, None),
    (0.7, 0.3, False, "upper"),
    (0.001, 0.3, False, "lower"),
])
def test_cheeger_check(gap, phi, passed, which):
    v = cheeger_check(gap, phi)
    assert v.passed is passed
    if which == "upper":
        assert not v.upper_ok and v.lower_ok
    if which == "lower":
        assert not v.lower_ok and v.upper_ok
