import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from conecalc.cone_laplacian import WeightedGrid, assemble_mode_operator, interval_spectrum, mode_operators
from conecalc.ellipticity import (
    ConormalQuadratic,
    check_E1_symbol,
    check_E4_numeric,
    check_strip_clear,
    conormal_roots,
    e2_assumption,
    strip_report,
    weight_window,
    window_report,
)
from conecalc.errors import InvalidParameterError
from conecalc.sectors import Sector

SQ2 = math.sqrt(2)


def _oracle(n, lam):
    return np.sort(np.roots([-1.0, n - 1.0, -lam]).real)


@pytest.mark.parametrize("n,lam,expected", [(1, -4.0, (-2, 2)), (3, -1.0, (1 - SQ2, 1 + SQ2)), (1, 0.0, (0, 0))])
def test_root_examples(n, lam, expected):
    lo, hi = conormal_roots(ConormalQuadratic(n, lam))
    assert (lo.real, hi.real) == pytest.approx(expected, abs=1e-12)
    np.testing.assert_allclose([lo.real, hi.real], _oracle(n, lam), atol=1e-7)


@given(st.integers(1, 6), st.floats(-50.0, 0.0))
def test_vieta(n, lam):
    q = ConormalQuadratic(n, lam)
    lo, hi = conormal_roots(q)
    assert lo.real <= hi.real
    assert (lo + hi).real == pytest.approx(n - 1, abs=1e-12)
    assert (lo * hi).real == pytest.approx(lam, abs=1e-12 * max(1, abs(lam)))
    assert abs(q(lo)) <= 1e-10 * max(1, abs(lam)) and abs(q(hi)) <= 1e-10 * max(1, abs(lam))


def test_window_examples():
    w = weight_window(3, -1.0)
    assert w.admissible and (w.lower, w.upper) == pytest.approx((1 - SQ2, SQ2 - 1))
    assert not weight_window(2, 0.0).admissible and weight_window(2, 0.0).s0 == 0.5
    w4 = weight_window(4, 0.0)
    assert w4.admissible and (w4.lower, w4.upper) == pytest.approx((-0.5, 0.5))


@pytest.mark.parametrize("n", range(1, 9))
def test_dirichlet_neumann_rule(n):
    assert weight_window(n, 0.0).admissible == (n > 3)
    if n >= 3:
        for lam in (-1e-6, -1.0, -40.0):
            assert weight_window(n, lam).admissible


def test_window_exact_for_tiny_dirichlet_eigenvalue():
    w = weight_window(3, -1e-200)
    assert w.admissible and w.lower < w.upper
    assert w.upper == pytest.approx(0.5e-200, rel=1e-12)


@given(st.integers(1, 6), st.floats(-50.0, 0.0), st.floats(0.0, 20.0))
def test_window_monotone(n, lam, extra):
    a, b = weight_window(n, lam), weight_window(n, lam - extra)
    assert b.s0 >= a.s0
    if a.admissible:
        assert b.admissible and b.lower <= a.lower and b.upper >= a.upper


def test_strip_examples():
    spec = interval_spectrum(math.pi, "Dirichlet", 3)
    res = check_strip_clear(spec, 3, 0.0)
    assert res and res.interval == (0.0, 2.0)
    # putting q_0^+ on the top edge of the closed strip
    gamma_top = 2 - (1 + SQ2)
    res = check_strip_clear(spec, 3, gamma_top)
    assert not res and res.offending[0] == 0
    assert check_strip_clear(spec, 3, gamma_top, strip="line")
    # the E3 line itself: (n+1)/2 - gamma - 2 = q_0^+
    gamma_line = 2 - 2 - (1 + SQ2)
    res = check_strip_clear(spec, 3, gamma_line, strip="line")
    assert not res and res.offending[1].real == pytest.approx(1 + SQ2)
    assert check_strip_clear([], 3, 0.0)
    with pytest.raises(InvalidParameterError):
        check_strip_clear(spec, 3, 0.0, strip="band")


@given(st.integers(1, 6), st.floats(-50.0, 0.0), st.floats(-1.0, 1.0))
def test_window_clears_strip(n, lam0, frac):
    w = weight_window(n, lam0)
    # windows thinner than the strip tolerance are a rounding corner case
    assume(w.admissible and w.upper > 1e-6)
    gamma = frac * (w.upper - 1e-9)
    eigs = [lam0] + [lam0 - k * 3.0 for k in (1, 2, 3)]
    assert check_strip_clear(eigs, n, gamma)
    assert w.lower + w.upper == pytest.approx(0.0, abs=1e-12)


@given(st.integers(1, 6), st.floats(-50.0, 0.0), st.floats(-1.0, 1.0))
def test_window_agrees_with_strip(n, lam0, frac):
    w = weight_window(n, lam0)
    span = 1 + w.s0
    gamma = frac * span
    assume(abs(abs(gamma) - (w.s0 - 1)) > 1e-9 and abs(abs(gamma) - span) > 1e-9)
    eigs = [lam0, lam0 - 2.0, lam0 - 7.0]
    assert w.contains(gamma) == bool(check_strip_clear(eigs, n, gamma))


def test_e1_examples():
    s = Sector(0.3)
    xi = [np.array([math.cos(a), math.sin(a)]) for a in np.linspace(0, 2 * math.pi, 16)]
    assert check_E1_symbol(lambda x: x @ x, s, xi)[0]
    ok, bad = check_E1_symbol({0: -1.0}, s, [0])
    assert not ok and bad[0]["eigenvalue"] == -1
    samples = [(tau, lam) for tau in np.linspace(-3, 3, 13) for lam in (-1.0, -4.0, -9.0)]
    assert check_E1_symbol(lambda x: x[0] ** 2 - x[1], Sector(1e-3), samples)[0]


def _two_levels(eigs, n=3, allow_positive=False):
    out = []
    for R, N in ((4.0, 60), (5.0, 120)):
        grid = WeightedGrid(R, N, 0.0, n)
        out += [assemble_mode_operator(n, 0.0, lam, grid, allow_positive=allow_positive) for lam in eigs]
    return out


def test_e4_examples():
    ok, rep = check_E4_numeric(_two_levels((-1.0, -4.0, -9.0)), Sector(math.pi / 4))
    assert ok and rep["violations"] == []
    ok, rep = check_E4_numeric(_two_levels((-1.0, 200.0), allow_positive=True), Sector(math.pi / 4))
    assert not ok and any("eigenvalues" in v for v in rep["violations"])
    assert check_E4_numeric([], Sector(1.0))[0]


def test_e4_needs_two_levels():
    modes = mode_operators(interval_spectrum(math.pi, "Dirichlet", 2), WeightedGrid(4.0, 40, 0.0, 3))
    with pytest.raises(InvalidParameterError):
        check_E4_numeric(modes, Sector(1.0))


def test_reports_shape():
    for rep in (window_report(3, -1.0), strip_report([-1.0], 3, 0.0), e2_assumption()):
        assert set(rep) == {"condition", "verdict", "violations", "parameters"}
    assert e2_assumption()["verdict"] == "assumed"
