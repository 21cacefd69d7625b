import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from conecalc.errors import DomainError, InvalidParameterError, UnsupportedError
from conecalc.hclass import (
    HFunction,
    from_callable,
    make_exponential,
    make_imaginary_power,
    make_power_quotient,
    make_shifted_rational,
    sup_norm_estimate,
    verify_membership,
)
from conecalc.sectors import Sector

RIGHT = Sector(math.pi / 2)


def test_power_quotient_values():
    f = make_power_quotient(0.5)
    assert complex(f(1.0)) == pytest.approx(0.5, abs=1e-15)
    assert complex(f(4.0)) == pytest.approx(0.4, abs=1e-15)


def test_power_quotient_decay():
    f = make_power_quotient(1.0)
    r = np.logspace(3, 8, 6) * cmath.exp(1e-3j)
    np.testing.assert_allclose(np.abs(f(r)) * np.abs(r), 1.0, rtol=1e-2)


@pytest.mark.parametrize("delta", [0.0, -0.1, 1.5])
def test_power_quotient_range(delta):
    with pytest.raises(InvalidParameterError):
        make_power_quotient(delta)


def test_imaginary_power_t0_is_power_quotient():
    lam = np.array([0.3, 1.0, 5.0 + 2j, 20j])
    np.testing.assert_allclose(make_imaginary_power(0.0, 0.5)(lam), make_power_quotient(0.5)(lam), rtol=1e-14)


def test_imaginary_power_modulus_on_positive_axis():
    e = 0.3
    f = make_imaginary_power(1.0, e)
    assert abs(complex(f(math.e))) == pytest.approx(math.exp(e) / (1 + math.e) ** (2 * e), rel=1e-14)


def test_interior_points_rejected():
    with pytest.raises(DomainError):
        make_imaginary_power(1.0, 0.5)(-1.0)
    with pytest.raises(InvalidParameterError):
        make_imaginary_power(1.0, 0.0)


def test_sup_norm_resolvent_function():
    f = from_callable(lambda lam: 1.0 / (1.0 + lam))
    assert sup_norm_estimate(f, RIGHT) == pytest.approx(1.0, abs=1e-6)


def _ray_oracle(fn, theta):
    """Dense 1-D maximization of |f| on arg = +-theta."""
    best = 0.0
    for sgn in (1, -1):
        res = minimize_scalar(lambda s: -abs(complex(fn(math.exp(s) * cmath.exp(sgn * 1j * theta)))),
                              bounds=(-15, 15), method="bounded", options={"xatol": 1e-10})
        best = max(best, -res.fun)
    return best


def test_sup_norm_power_quotient():
    # |sqrt(i r)/(1 + i r)| peaks at r = 1 with 1/sqrt(2)
    f = make_power_quotient(0.5)
    est = sup_norm_estimate(f, RIGHT)
    assert est == pytest.approx(_ray_oracle(f, math.pi / 2), abs=1e-3)
    assert est == pytest.approx(1 / math.sqrt(2), abs=1e-3)
    assert est <= 1 / math.sqrt(2) + 1e-15
    assert sup_norm_estimate(f, RIGHT, samples_per_decade=256) == pytest.approx(est, abs=1e-3)


def test_sup_norm_zero():
    assert sup_norm_estimate(from_callable(lambda lam: 0 * lam, 1.0, 1.0), RIGHT) == 0.0


def test_sup_norm_needs_certificate():
    with pytest.raises(UnsupportedError):
        sup_norm_estimate(make_exponential(1.0), RIGHT)


def test_membership_examples():
    ok, worst = verify_membership(make_power_quotient(0.5), RIGHT)
    assert ok and worst <= 1 + 1e-9
    pure = from_callable(lambda lam: np.exp(1j * np.log(lam)), 0.1, 10.0)
    assert not verify_membership(pure, RIGHT)[0]
    ok, worst = verify_membership(from_callable(lambda lam: 0 * lam, 1.0, 1.0), RIGHT)
    assert ok and worst == 0.0


def test_exponential_has_no_certificate():
    f = make_exponential(2.0)
    assert not f.certified and not f.max_principle
    with pytest.raises(InvalidParameterError):
        make_exponential(1.0, sector=Sector(2.0))
    with pytest.raises(UnsupportedError):
        verify_membership(f, RIGHT)


deltas = st.floats(0.05, 1.0)


@given(deltas, deltas, st.floats(0.3, 2.8))
def test_product_certificate(d1, d2, theta):
    s = Sector(theta)
    f, g = make_power_quotient(d1, sector=s), make_power_quotient(d2, sector=s)
    prod = f * g
    assert prod.delta == pytest.approx(d1 + d2)
    assert verify_membership(prod, s)[0]


@given(st.floats(0.05, 1.0), st.floats(0.01, 30.0), st.floats(-1.0, 1.0))
def test_conjugate_symmetry(delta, mod, frac):
    f = make_power_quotient(delta)
    lam = mod * cmath.exp(1j * frac * 1.5)
    assert complex(f(np.conj(lam))) == pytest.approx(np.conj(complex(f(lam))), abs=1e-14)


def test_exponential_conjugate_symmetry():
    f = make_exponential(0.7)
    lam = np.array([1 + 2j, 0.5 - 3j])
    np.testing.assert_allclose(f(np.conj(lam)), np.conj(f(lam)))


def test_regularisation_converges():
    lam = np.linspace(0.2, 5.0, 25)
    target = np.exp(1.5j * np.log(lam))
    errs = [np.max(np.abs(make_imaginary_power(1.5, e)(lam) - target)) for e in (1e-1, 1e-2, 1e-3)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 5e-3


def test_imaginary_power_certificate_growth():
    theta = 1.0
    f = make_imaginary_power(2.0, 0.5, sector=Sector(theta))
    assert verify_membership(f, Sector(theta))[0]
    # the bound has to absorb |l^{2i}| = exp(2 theta) on the lower ray
    assert f.c_bound >= math.exp(2 * theta) * 0.5


def test_shifted_rational_poles_inside():
    f = make_shifted_rational([-1.0, -1 + 2j], 0.5)
    assert verify_membership(f, RIGHT)[0]
    assert not f.real_coefficients
    with pytest.raises(InvalidParameterError):
        make_shifted_rational([1.0], 0.5)


def test_spec_round_trip():
    for f in (make_power_quotient(0.25), make_imaginary_power(-1.0, 0.1), make_shifted_rational([-2.0], 0.7)):
        g = HFunction.from_spec(f.spec())
        lam = np.array([0.5, 3 + 1j])
        np.testing.assert_allclose(g(lam), f(lam))
        assert g.c_bound == pytest.approx(f.c_bound)
    with pytest.raises(UnsupportedError):
        HFunction.from_spec(from_callable(lambda z: z).spec())


@given(st.floats(0.1, 10.0))
def test_rescaled_certificate(c):
    f = make_power_quotient(0.5).rescaled(c)
    assert complex(f(2.0)) == pytest.approx(complex(make_power_quotient(0.5)(2.0 * c)))
    assert verify_membership(f, RIGHT)[0]
