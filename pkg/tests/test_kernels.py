"""numba kernels against their numpy twins, and the env switch."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conecalc import _kernels as K


@given(st.integers(0, 40), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_pairwise_sum_twins(k, m, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m))
    a, b = K.pairwise_sum_np(x), K.pairwise_sum_nb(x)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(a, x.sum(axis=0), atol=1e-12)


def test_pairwise_sum_keeps_trailing_shape():
    x = np.arange(24, dtype=complex).reshape(4, 3, 2)
    np.testing.assert_array_equal(K.pairwise_sum_nb(x), x.sum(axis=0))
    np.testing.assert_array_equal(K.pairwise_sum_np(x), x.sum(axis=0))


@given(st.integers(1, 30), st.floats(0.05, 3.0), st.floats(0.01, 0.5))
def test_hardy_twins(n, eps, h):
    r = h * np.arange(1, n + 1)
    np.testing.assert_allclose(K.hardy_conjugated_np(r, eps, h), K.hardy_conjugated_nb(r, eps, h), rtol=1e-14)


def test_hardy_matrix_upper_triangular():
    r = 0.1 * np.arange(1, 6)
    g = K.hardy_conjugated(r, 0.5, 0.1)
    assert np.all(np.tril(g, -1) == 0)
    np.testing.assert_allclose(np.diag(g), 0.1)


@given(st.integers(1, 15), st.integers(1, 6), st.sampled_from([1.5, 2.0, 3.0]), st.integers(0, 2**32 - 1))
def test_lp_ratio_twins(n, m, p, seed):
    rng = np.random.default_rng(seed)
    g, xs = rng.random((n, n)), rng.random((n, m)) + 0.1
    np.testing.assert_allclose(K.lp_ratios_np(g, xs, p), K.lp_ratios_nb(g, xs, p), rtol=1e-12)


@given(st.integers(1, 6), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_expmid_twins(n, k, seed):
    rng = np.random.default_rng(seed)
    e, eh, f = rng.random((n, n)) * 0.3, rng.random((n, n)) * 0.5, rng.standard_normal((k, n))
    np.testing.assert_allclose(K.expmid_march_np(e, eh, f, 0.1), K.expmid_march_nb(e, eh, f, 0.1), atol=1e-13)


def test_expmid_complex_falls_back():
    e = np.eye(2) * (0.5 + 0.1j)
    f = np.ones((3, 2))
    np.testing.assert_allclose(K.expmid_march_nb(e, e, f, 0.2), K.expmid_march_np(e, e, f, 0.2))


@given(st.integers(1, 20), st.integers(1, 5), st.floats(-30.0, 0.0), st.floats(0.5, 8.0))
def test_mode_stencil_twins(N, n, lam, R):
    h = R / (N + 1)
    r = h * np.arange(1, N + 1)
    for a, b in zip(K.mode_stencil_np(r, h, float(n), lam), K.mode_stencil_nb(r, h, float(n), lam)):
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=0)


def test_public_names_follow_switch():
    target = "_nb" if K.JIT_ENABLED else "_np"
    assert K.hardy_conjugated.__name__.endswith(target)


@pytest.mark.parametrize("flag,expect", [("1", "False"), ("0", "True")])
def test_env_flag_selects_path(flag, expect):
    env = dict(os.environ, CONECALC_DISABLE_JIT=flag)
    out = subprocess.run(
        [sys.executable, "-c", "import conecalc._kernels as K; print(K.JIT_ENABLED, K.mode_stencil.__name__)"],
        env=env, capture_output=True, text=True, check=True,
    ).stdout.split()
    assert out[0] == expect
    assert out[1].endswith("_nb" if expect == "True" else "_np")
