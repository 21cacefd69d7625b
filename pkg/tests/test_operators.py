import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from conecalc.errors import SpectrumError
from conecalc.operators import (
    DenseOperator,
    DiagonalOperator,
    TridiagonalOperator,
    default_radii,
    lambda_resolvent_norms,
    matrix_from_json,
    sectoriality_scan,
    spectrum_in_sector,
)
from conecalc.sectors import Sector

seeds = st.integers(0, 2**32 - 1)


def _random_op(seed, n=5):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return DenseOperator(m), rng


def _far_point(op, rng):
    ev = op.eigenvalues()
    while True:
        lam = complex(*rng.uniform(-6, 6, 2))
        if np.min(np.abs(ev - lam)) > 0.3:
            return lam


@given(seeds)
def test_resolve_residual(seed):
    op, rng = _random_op(seed)
    lam = _far_point(op, rng)
    b = rng.standard_normal(op.dim) + 0j
    x = op.resolve(lam, b)
    assert np.linalg.norm(lam * x - op.apply(x) - b) <= 1e-10 * np.linalg.norm(b)


@given(seeds)
def test_resolvent_identity(seed):
    op, rng = _random_op(seed)
    lam, nu = _far_point(op, rng), _far_point(op, rng)
    eye = np.eye(op.dim)
    rl, rn = op.resolve(lam, eye), op.resolve(nu, eye)
    lhs, rhs = rl - rn, (nu - lam) * rl @ rn
    assert np.linalg.norm(lhs - rhs) <= 1e-9 * max(np.linalg.norm(lhs), 1e-300) + 1e-14


@given(st.lists(st.floats(0.1, 50.0), min_size=1, max_size=6), st.floats(-20, 20), st.floats(-20, 20))
def test_diagonal_matches_dense(eigs, x, y):
    lam = complex(x, y)
    d, m = DiagonalOperator(np.array(eigs)), DenseOperator(np.diag(eigs))
    if np.min(np.abs(np.array(eigs) - lam)) < 1e-3:
        return
    b = np.arange(1, len(eigs) + 1, dtype=complex)
    np.testing.assert_allclose(d.resolve(lam, b), m.resolve(lam, b), rtol=1e-12, atol=0)


def test_tridiagonal_matches_dense():
    rng = np.random.default_rng(3)
    lo, di, up = rng.standard_normal(6), rng.standard_normal(7) + 4, rng.standard_normal(6)
    t = TridiagonalOperator(lo, di, up)
    d = DenseOperator(t.to_dense())
    b = rng.standard_normal((7, 2)) + 0j
    np.testing.assert_allclose(t.resolve(-1 + 2j, b), d.resolve(-1 + 2j, b), rtol=1e-12)


def test_scan_spd_right_half_plane():
    res = sectoriality_scan(DiagonalOperator([1.0, 2.0]), Sector(math.pi / 2))
    assert res.m_r == pytest.approx(1.0, abs=1e-6)
    assert res.m_r <= 1.0 + 1e-12


def _scalar_oracle(theta):
    def neg(s, phi):
        lam = math.exp(s) * cmath.exp(1j * phi)
        return -abs(lam) / abs(lam - 1)

    best = 0.0
    for phi in np.linspace(theta, 2 * math.pi - theta, 201):
        res = minimize_scalar(lambda s: neg(s, phi), bounds=(-10, 14), method="bounded", options={"xatol": 1e-12})
        best = max(best, -res.fun)
    return best


@pytest.mark.parametrize("theta,expected", [(math.pi / 4, math.sqrt(2)), (3 * math.pi / 4, 1.0)])
def test_scan_scalar_against_oracle(theta, expected):
    oracle = _scalar_oracle(theta)
    assert oracle == pytest.approx(expected, abs=1e-6)
    assert sectoriality_scan(DiagonalOperator([1.0]), Sector(theta)).m_r == pytest.approx(oracle, abs=1e-4)


def test_scan_hits_spectrum():
    with pytest.raises(SpectrumError) as err:
        sectoriality_scan(DenseOperator(np.diag([2.0, -1.0])), Sector(math.pi / 4), angles=[math.pi])
    assert err.value.point is not None


def test_scan_grid_refinement_monotone():
    op = DenseOperator(np.array([[1.0, 3.0], [0.0, 2.0]]))
    s = Sector(1.0)
    coarse = sectoriality_scan(op, s, default_radii(per_decade=8), np.linspace(1.0, 2 * math.pi - 1.0, 9), polish=False)
    fine = sectoriality_scan(op, s, default_radii(per_decade=16), np.linspace(1.0, 2 * math.pi - 1.0, 17), polish=False)
    assert fine.m_r >= coarse.m_r


def test_weighted_norms():
    w = np.array([1.0, 10.0])
    op = DenseOperator(np.array([[1.0, 1.0], [0.0, 2.0]]), weights=w)
    lam = -1.0 + 0.5j
    r = np.linalg.inv(lam * np.eye(2) - op.to_dense())
    expect = abs(lam) * np.linalg.norm(np.diag(w) @ r @ np.diag(1 / w), 2)
    assert lambda_resolvent_norms(op, [lam])[0] == pytest.approx(expect, rel=1e-12)


def test_large_operator_uses_power_method():
    n = 80
    op = DiagonalOperator(np.linspace(1, 5, n))
    lam = 2j
    exact = np.max(abs(lam) / np.abs(lam - np.linspace(1, 5, n)))
    got = lambda_resolvent_norms(op, [lam])[0]
    # 50 power steps approach the top singular value from below
    assert exact * 0.99 <= got <= exact * (1 + 1e-12)


def test_spectrum_in_sector_examples():
    s = Sector(math.pi / 4)
    assert spectrum_in_sector(DiagonalOperator([1.0, 4.0]), s) == (True, [])
    ok, bad = spectrum_in_sector(DiagonalOperator([1.0, -4.0]), s)
    assert not ok and bad == [-4.0]
    assert spectrum_in_sector(DenseOperator(np.zeros((2, 2))), s, exclude_origin=True)[0]
    assert not spectrum_in_sector(DenseOperator(np.zeros((2, 2))), s)[0]


def test_matrix_json_round_trip():
    m = np.array([[1 + 2j, 0], [3, -1j]])
    op = DenseOperator(m)
    np.testing.assert_array_equal(DenseOperator.from_json(op.to_json()).matrix, m)
    assert matrix_from_json("[]").shape == (0, 0)
