import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conecalc.errors import InvalidParameterError
from conecalc.kernel_estimates import (
    GreenKernelSpec,
    HARDY_COLUMNS,
    assemble_hardy_operator,
    conjugated_hardy_operator,
    hardy_grid,
    hardy_norm_check,
    hardy_slope,
    hardy_table,
    scaled_kernel_check,
)


def _spec(eps=0.5, R=8.0, N=200, n=0, p=2.0):
    return GreenKernelSpec(eps, n, hardy_grid(R, N, n, p))


@pytest.mark.parametrize("n", [0, 1, 3])
def test_one_node_hand_value(n):
    spec = _spec(0.3, 1.0, 1, n)
    g = assemble_hardy_operator(spec)
    t1, h = spec.grid.t[0], spec.grid.h
    # k(t1, t1) t1^n ds = t1^{-(n+1)} t1^n (t1 h)
    assert g.shape == (1, 1)
    assert g[0, 0] == pytest.approx(spec.kernel(t1, t1) * t1**n * t1 * h, rel=1e-14)


@pytest.mark.parametrize("n", [0, 2])
def test_matches_direct_kernel(n):
    spec = _spec(0.4, 3.0, 12, n)
    t, h = spec.grid.t, spec.grid.h
    direct = spec.kernel(t[:, None], t[None, :]) * (t**n * t * h)[None, :]
    np.testing.assert_allclose(assemble_hardy_operator(spec), direct, rtol=1e-12, atol=0)


def test_zero_and_support():
    spec = _spec(0.5, 4.0, 30)
    g = assemble_hardy_operator(spec)
    np.testing.assert_array_equal(g @ np.zeros(30), 0)
    t = spec.grid.t
    assert np.all(g[t[None, :] > t[:, None]] == 0)
    assert np.all(g >= 0)


def test_conjugation():
    spec = _spec(0.25, 4.0, 20, 2)
    w = spec.grid.weights
    np.testing.assert_allclose(
        conjugated_hardy_operator(spec), (w[:, None] * assemble_hardy_operator(spec)) / w[None, :], rtol=1e-12
    )


@pytest.mark.parametrize("grid", [(8.0, 200), (10.0, 400)])
def test_half_epsilon_passes(grid):
    res = hardy_norm_check(_spec(0.5, *grid))
    assert res.passed and res.norm_estimate <= 2 * 1.05 and res.bound == 2.0


def test_unit_epsilon_passes():
    res = hardy_norm_check(_spec(1.0))
    assert res.passed and res.norm_estimate <= 1.05


def test_refinement_monotone():
    a = hardy_norm_check(_spec(0.5, 8.0, 200)).norm_estimate
    b = hardy_norm_check(_spec(0.5, 10.0, 400)).norm_estimate
    assert b >= a - 1e-6


def test_random_search_is_lower_bound():
    spec = _spec(0.5, 6.0, 120)
    exact = hardy_norm_check(spec, 2.0).norm_estimate
    g = conjugated_hardy_operator(spec)
    assert exact == pytest.approx(np.linalg.norm(g, 2), rel=1e-12)
    for p in (1.5, 3.0):
        res = hardy_norm_check(spec, p, refine=False)
        assert res.method == "random_search"
        assert res.norm_estimate <= hardy_norm_check(spec, p).norm_estimate + 1e-12


def test_dual_exponents_agree():
    # the Toeplitz matrix is persymmetric, so ||G||_p = ||G^T||_q = ||G||_q
    spec = _spec(0.25, 8.0, 160)
    a = hardy_norm_check(spec, 1.5).norm_estimate
    b = hardy_norm_check(spec, 3.0).norm_estimate
    assert a == pytest.approx(b, rel=1e-6)


def test_transposed_partner_kernel():
    spec = _spec(0.5, 6.0, 100)
    g = conjugated_hardy_operator(spec)
    assert np.linalg.norm(g.T, 2) == pytest.approx(np.linalg.norm(g, 2), rel=1e-12)
    assert np.all(np.triu(g.T, 1) == 0)


@settings(max_examples=15)
@given(st.floats(0.1, 2.0), st.integers(10, 80), st.floats(2.0, 12.0))
def test_triangular_nonnegative(eps, N, R):
    for NN in (N, 2 * N):
        g = assemble_hardy_operator(_spec(eps, R, NN))
        assert np.all(g >= 0) and np.all(np.tril(g, -1) == 0)


def test_table_and_slope():
    res = hardy_table([0.25, 0.5, 1.0], [2.0], [(40.0, 400)])
    assert len(res) == 3 and len(res[0].row()) == len(HARDY_COLUMNS)
    assert 0.8 <= hardy_slope(res) <= 1.1
    with pytest.raises(InvalidParameterError):
        hardy_slope(res[:1])


def test_validation():
    with pytest.raises(InvalidParameterError):
        GreenKernelSpec(0.0, 0, hardy_grid(1.0, 4))
    with pytest.raises(InvalidParameterError):
        GreenKernelSpec(0.5, 1, hardy_grid(1.0, 4, 0))
    with pytest.raises(InvalidParameterError):
        hardy_norm_check(_spec(), 1.0)


def test_scaled_identity():
    rep = scaled_kernel_check(1.0, _spec(0.5, 6.0, 59))
    assert rep["shift"] == 0 and rep["defect"] == 0.0 and rep["clipped_mass"] == 0.0


@pytest.mark.parametrize("n", [0, 2])
def test_scaled_one_step(n):
    spec = _spec(0.5, 6.0, 59, n)
    rep = scaled_kernel_check(math.exp(spec.grid.h), spec)
    assert rep["shift"] == 1 and rep["defect"] <= 1e-10


def test_scaled_boundary_vector():
    spec = _spec(0.5, 6.0, 59)
    u = np.zeros(59)
    u[:3] = 1.0  # next to the base, where kappa^-1 pushes mass off the grid
    rep = scaled_kernel_check(math.exp(5 * spec.grid.h), spec, u)
    grid = spec.grid
    lost = np.sum((grid.weights[:3] * u[:3]) ** 2 * grid.h)
    # every node is dropped: the clipped mass is the whole norm, the
    # reachable rows stay exact and G u survives only on unreachable rows
    assert rep["clipped_mass"] == pytest.approx(lost, rel=1e-12)
    assert rep["defect"] == 0.0
    gu = assemble_hardy_operator(spec) @ u
    assert rep["clipped_rows"] == pytest.approx(math.sqrt(np.sum((grid.weights * gu) ** 2) * grid.h), rel=1e-12)


def test_scaled_incompatible():
    with pytest.raises(InvalidParameterError):
        scaled_kernel_check(1.37, _spec(0.5, 6.0, 59))
