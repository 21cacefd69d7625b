"""Holomorphic functions on the complement of a sector, with decay certificates.

A function belongs to the H-class of ``Lambda(theta)`` if it is holomorphic
off the sector and ``|f(l)| <= c (|l|^d + |l|^-d)^-1`` for some ``d > 0``.
The pair ``(d, c)`` is the certificate. Built-ins evaluate through
``exp``/``log`` with the principal branch so they stay holomorphic on the
complement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, InvalidParameterError, UnsupportedError
from .sectors import Sector

KINDS = (
    "power_quotient",
    "shifted_rational",
    "imaginary_power_regularized",
    "exponential_bounded",
    "user_defined",
)

DEFAULT_SECTOR = Sector(math.pi / 2)

# relative slack added to sampled certificate constants
_CERT_SLACK = 1e-10


@dataclass(frozen=True)
class HFunction:
    """A holomorphic function on ``C \\ Lambda`` and its certificate.

    ``delta``/``c_bound`` are ``None`` for functions that are only bounded.
    ``max_principle`` says the supremum over the complement is attained
    (as a limit) on the boundary rays, which ``sup_norm_estimate`` relies on.
    """

    evaluator: Callable = field(repr=False, compare=False)
    delta: float | None
    c_bound: float | None
    kind: str
    sector: Sector | None = DEFAULT_SECTOR
    params: dict = field(default_factory=dict)
    max_principle: bool = True
    real_coefficients: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown function kind {self.kind!r}")

    @property
    def certified(self) -> bool:
        return self.delta is not None and self.c_bound is not None

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=complex)
        if self.sector is not None and np.any(self.sector.interior(lam)):
            raise DomainError("evaluation point inside the sector")
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.evaluator(lam)

    def __mul__(self, other: HFunction) -> HFunction:
        if self.sector != other.sector:
            raise InvalidParameterError("factors certified on different sectors")
        f, g = self.evaluator, other.evaluator
        delta = c = None
        if self.certified and other.certified:
            # (r^a + r^-a)(r^b + r^-b) >= r^(a+b) + r^-(a+b)
            delta = self.delta + other.delta
            c = self.c_bound * other.c_bound
        return HFunction(
            lambda lam: f(lam) * g(lam),
            delta,
            c,
            "user_defined",
            self.sector,
            {"product": [self.spec(), other.spec()]},
            self.max_principle and other.max_principle,
            self.real_coefficients and other.real_coefficients,
        )

    def rescaled(self, c: float) -> HFunction:
        """``l -> f(c l)`` for ``c > 0``; the certificate constant grows by ``max(c^d, c^-d)``."""
        if not c > 0:
            raise InvalidParameterError("rescaling factor must be positive")
        f = self.evaluator
        cb = None
        if self.certified:
            cb = self.c_bound * max(c**self.delta, c ** (-self.delta))
        return HFunction(
            lambda lam: f(c * lam), self.delta, cb, "user_defined", self.sector,
            {"rescaled": [c, self.spec()]}, self.max_principle, self.real_coefficients,
        )

    def spec(self) -> dict:
        """JSON-ready description; user-defined functions cannot be rebuilt from it."""
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "theta": None if self.sector is None else self.sector.theta,
            "delta": self.delta,
            "c_bound": self.c_bound,
        }

    @classmethod
    def from_spec(cls, spec: dict) -> HFunction:
        kind = spec["kind"]
        sector = Sector(spec["theta"]) if spec.get("theta") is not None else DEFAULT_SECTOR
        p = spec.get("params", {})
        if kind == "power_quotient":
            return make_power_quotient(p["delta"], sector=sector)
        if kind == "imaginary_power_regularized":
            return make_imaginary_power(p["t"], p["epsilon"], sector=sector)
        if kind == "exponential_bounded":
            return make_exponential(p["tau"], sector=sector)
        if kind == "shifted_rational":
            poles = [complex(*z) for z in p["poles"]]
            return make_shifted_rational(poles, p["delta"], sector=sector)
        raise UnsupportedError(f"functions of kind {kind!r} are not serializable")


def _log(lam):
    return np.log(lam)


def _sampled_bound(fn, delta, sector, decades=40.0, samples=4001):
    """sup of |f| (r^d + r^-d) over both boundary rays, refined locally."""
    th = sector.theta
    s = np.linspace(-decades * math.log(10), decades * math.log(10), samples)

    def ratio(s_val, sign):
        lam = np.exp(s_val + 1j * sign * th)
        r = np.exp(s_val)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return np.abs(fn(lam)) * (r**delta + r ** (-delta))

    best = 0.0
    for sign in (1.0, -1.0):
        vals = np.nan_to_num(ratio(s, sign), nan=0.0)
        k = int(np.argmax(vals))
        lo, hi = s[max(k - 1, 0)], s[min(k + 1, s.size - 1)]
        res = minimize_scalar(
            lambda x: -float(ratio(np.array(x), sign)), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-12},
        )
        best = max(best, float(vals[k]), -float(res.fun))
    return best * (1.0 + _CERT_SLACK)


def make_power_quotient(delta: float, *, sector: Sector = DEFAULT_SECTOR) -> HFunction:
    """``l^d / (1 + l)^(2 d)``, the canonical H-class member."""
    if not (0.0 < delta <= 1.0):
        raise InvalidParameterError(f"delta must lie in (0, 1], got {delta!r}")
    d = float(delta)

    def ev(lam):
        return np.exp(d * _log(lam) - 2.0 * d * _log(1.0 + lam))

    c = _sampled_bound(ev, d, sector)
    return HFunction(ev, d, c, "power_quotient", sector, {"delta": d}, True, True)


def make_imaginary_power(t: float, epsilon: float, *, sector: Sector = DEFAULT_SECTOR) -> HFunction:
    """Regularised imaginary power ``l^(i t) * l^e / (1 + l)^(2 e)``.

    On the complement ``|l^(i t)| = exp(-t arg l) <= exp(|t| theta)``, so the
    certificate constant carries that growth factor.
    """
    if epsilon <= 0:
        raise InvalidParameterError("regularisation exponent must be positive")
    t, e = float(t), float(epsilon)

    def ev(lam):
        lg = _log(lam)
        return np.exp((1j * t + e) * lg - 2.0 * e * _log(1.0 + lam))

    c = _sampled_bound(ev, e, sector)
    return HFunction(
        ev, e, c, "imaginary_power_regularized", sector, {"t": t, "epsilon": e}, True, t == 0.0
    )


def make_exponential(tau: float, *, sector: Sector = DEFAULT_SECTOR) -> HFunction:
    """``exp(-tau l)``: bounded on the complement only when ``theta <= pi/2``.

    It carries no decay certificate, so it is computed through the closed
    contour of an invertible operator rather than the sector contour.
    """
    if tau <= 0:
        raise InvalidParameterError("tau must be positive")
    if sector.theta > math.pi / 2 + 1e-15:
        raise InvalidParameterError("exp(-tau l) is unbounded off sectors with theta > pi/2")
    tau = float(tau)
    return HFunction(
        lambda lam: np.exp(-tau * lam), None, None, "exponential_bounded", sector,
        {"tau": tau}, False, True,
    )


def make_shifted_rational(poles, delta: float, *, sector: Sector = DEFAULT_SECTOR) -> HFunction:
    """``prod_k (l - p_k)^-1 * l^d * (1 + l)^(-2 d - K)`` with poles inside the sector."""
    poles = np.asarray(poles, dtype=complex).ravel()
    if poles.size and not np.all(sector.interior(poles)):
        raise InvalidParameterError("rational poles must lie in the open sector")
    if not (0.0 < delta <= 1.0):
        raise InvalidParameterError(f"delta must lie in (0, 1], got {delta!r}")
    d, k = float(delta), poles.size

    def ev(lam):
        out = np.exp(d * _log(lam) - (2.0 * d + k) * _log(1.0 + lam))
        for p in poles:
            out = out / (lam - p)
        return out

    c = _sampled_bound(ev, d, sector)
    real = bool(np.allclose(np.sort_complex(poles), np.sort_complex(np.conj(poles))))
    return HFunction(
        ev, d, c, "shifted_rational", sector,
        {"delta": d, "poles": [[z.real, z.imag] for z in poles.tolist()]}, True, real,
    )


def from_callable(
    fn,
    delta=None,
    c_bound=None,
    *,
    sector: Sector = DEFAULT_SECTOR,
    max_principle: bool = True,
    real_coefficients: bool = False,
) -> HFunction:
    """Wrap a vectorised user function; the caller vouches for holomorphy."""
    return HFunction(
        fn, delta, c_bound, "user_defined", sector, {}, max_principle, real_coefficients
    )


def boundary_grid(sector: Sector, samples_per_decade: int = 64, decades: int = 12):
    """Geometric grid on both rays, ``decades`` wide and centred at ``|l| = 1``."""
    n = int(samples_per_decade * decades) + 1
    r = np.logspace(-decades / 2.0, decades / 2.0, n)
    th = sector.theta
    return np.concatenate([r * np.exp(1j * th), r * np.exp(-1j * th)])


def sup_norm_estimate(
    f: HFunction, sector: Sector, samples_per_decade: int = 64, decades: int = 12
) -> float:
    """Largest ``|f|`` on a boundary grid: a lower bound for the sup over the complement.

    By the maximum principle the supremum sits on the rays once ``f`` has
    limits at 0 and infinity, so refining the grid converges from below.
    """
    if not (f.certified or (f.max_principle and f.kind == "user_defined")):
        raise UnsupportedError(f"{f.kind} has no decay certificate; supply an explicit bound")
    vals = np.abs(f(boundary_grid(sector, samples_per_decade, decades)))
    vals = vals[np.isfinite(vals)]
    return float(vals.max()) if vals.size else 0.0


def verify_membership(f: HFunction, sector: Sector, samples_per_decade: int = 64, decades: int = 12):
    """Check the certificate on the boundary grid; returns ``(ok, worst_ratio)``."""
    if not f.certified:
        raise UnsupportedError("membership needs a (delta, c) certificate")
    lam = boundary_grid(sector, samples_per_decade, decades)
    r = np.abs(lam)
    ratio = np.abs(f(lam)) * (r**f.delta + r ** (-f.delta)) / f.c_bound
    ratio = ratio[np.isfinite(ratio)]
    worst = float(ratio.max()) if ratio.size else 0.0
    return worst <= 1.0 + 1e-9, worst
