"""Sectors in the complex plane and quadrature contours along their boundary.

A sector ``Lambda(theta)`` is the closed set of ``r*exp(i*phi)`` with
``r >= 0`` and ``theta <= phi <= 2*pi - theta``; it straddles the negative
real axis. Holomorphic functions of a sectorial operator live on the
complement, so every power ``lambda**z`` here uses the principal branch of
the logarithm, whose cut (the negative real axis) lies inside the sector.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import pairwise_sum
from .errors import BudgetExceededError, InvalidParameterError, SpectrumError

TWO_PI = 2.0 * math.pi

# Empirical prefactor of the trapezoid discretisation error for H-class
# integrands (calibrated on lambda**d / (1 + lambda)**(2 d), d in [1/4, 1]).
_DISC_BASE = 10.0
_DISC_POWER = 2.6
# Largest |log r| a contour may reach before exp() overflows.
_S_CAP = 690.0


def _arg_2pi(lam):
    """Argument in [0, 2*pi)."""
    return np.mod(np.angle(lam), TWO_PI)


@dataclass(frozen=True)
class Sector:
    """The closed sector ``Lambda(theta)``, ``0 < theta < pi``."""

    theta: float

    def __post_init__(self):
        th = float(self.theta)
        if not (0.0 < th < math.pi):
            raise InvalidParameterError(f"sector angle must lie in (0, pi), got {th!r}")
        object.__setattr__(self, "theta", th)

    def contains(self, lam):
        """Closed membership; works elementwise on arrays."""
        lam = np.asarray(lam, dtype=complex)
        phi = _arg_2pi(lam)
        inside = (phi >= self.theta) & (phi <= TWO_PI - self.theta)
        out = inside | (lam == 0)
        return bool(out) if out.ndim == 0 else out

    def interior(self, lam, atol=1e-12):
        """Strict interior membership, with angular slack ``atol`` at the rays."""
        lam = np.asarray(lam, dtype=complex)
        phi = _arg_2pi(lam)
        out = (phi > self.theta + atol) & (phi < TWO_PI - self.theta - atol) & (lam != 0)
        return bool(out) if out.ndim == 0 else out

    def angular_distance(self, lam):
        """Angle between ``lam`` and the nearest boundary ray (0 inside the sector)."""
        phi = np.abs(np.angle(np.asarray(lam, dtype=complex)))
        return np.maximum(self.theta - phi, 0.0)

    @property
    def sin_factor(self):
        """Lower bound ``s`` with ``|lambda + 1| >= s*|lambda|`` on the rays."""
        return 1.0 if self.theta <= math.pi / 2 else math.sin(self.theta)


def contains(sector: Sector, lam) -> bool:
    return sector.contains(lam)


@dataclass(frozen=True)
class RootSector:
    """``Sigma(theta, mu)``: arguments in ``[theta/mu, (2 pi - theta)/mu]``.

    Its ``mu``-th power is ``Lambda(theta)``. The converse ``eta**mu in
    Lambda => eta in Sigma`` holds for ``arg eta`` in the principal wedge
    ``[0, 2 pi/mu)``; other wedges are rotated copies.
    """

    theta: float
    mu: int

    @property
    def alpha_min(self):
        return self.theta / self.mu

    @property
    def alpha_max(self):
        return (TWO_PI - self.theta) / self.mu

    def contains(self, eta):
        eta = np.asarray(eta, dtype=complex)
        alpha = _arg_2pi(eta)
        out = ((alpha >= self.alpha_min) & (alpha <= self.alpha_max)) | (eta == 0)
        return bool(out) if out.ndim == 0 else out

    def power(self, eta):
        """``eta**mu`` evaluated through the polar form (exact argument bookkeeping)."""
        eta = np.asarray(eta, dtype=complex)
        return np.abs(eta) ** self.mu * np.exp(1j * self.mu * _arg_2pi(eta))


def mu_root_sector(sector: Sector, mu: int) -> RootSector:
    if int(mu) != mu or mu < 1:
        raise InvalidParameterError(f"root order must be an integer >= 1, got {mu!r}")
    return RootSector(sector.theta, int(mu))


@dataclass(frozen=True)
class Contour:
    """Trapezoid rule in ``s = log r`` on both boundary rays of a sector.

    Nodes run from ``r_max*exp(i theta)`` in to ``r_min*exp(i theta)``, then
    from ``r_min*exp(-i theta)`` out to ``r_max*exp(-i theta)``; this encircles
    the complement of the sector positively. ``weights`` already contain
    ``d lambda / (2 pi i)``. ``half_weights`` is the step-``2h`` rule on the
    same node set (odd nodes carry weight 0) and drives the Richardson
    error estimate.

    ``shift`` is a point in the interior of the sector; integrands are
    compensated by subtracting ``1/(lambda - shift)``, whose contour
    integral against any H-class function vanishes.
    """

    theta: float
    delta: float
    tol: float
    r_min: float
    r_max: float
    step: float
    n_per_ray: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    half_weights: np.ndarray = field(repr=False)
    truncation_error: float
    error_estimate: float
    c_bound: float = 1.0
    resolvent_bound: float = 1.0
    scale: tuple | None = None
    spectral_angle: float = 0.0
    strip_bound: float | None = None
    shift: float = -1.0
    orientation: int = 1

    @property
    def sector(self) -> Sector:
        return Sector(self.theta)

    @property
    def size(self) -> int:
        return self.nodes.size

    def compensator(self):
        """Scalar ``1/(lambda_k - shift)`` at every node."""
        return 1.0 / (self.nodes - self.shift)

    def apply_scalar(self, f, a):
        """Quadrature of ``f(a)`` for a scalar ``a`` off the sector.

        Returns ``(value, estimate)`` where ``estimate`` is the truncation
        bound plus ``|Q_N - Q_{N/2}|``.
        """
        a = complex(a)
        if self.sector.contains(a):
            raise SpectrumError("scalar lies in the sector", a)
        g = f(self.nodes) * (1.0 / (self.nodes - a) - self.compensator())
        full = pairwise_sum(self.weights * g)
        half = pairwise_sum(self.half_weights * g)
        return complex(full), self.truncation_error + abs(full - half)

    def refined(self) -> Contour:
        """Same truncation, step halved (node count roughly doubled)."""
        return _build(
            self.sector, self.delta, self.tol, math.log(self.r_min), math.log(self.r_max),
            self.step / 2.0, self.truncation_error, self.c_bound, self.resolvent_bound,
            self.scale, self.spectral_angle, self.strip_bound,
        )

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "delta": self.delta,
            "tol": self.tol,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "step": self.step,
            "nodes": [[z.real, z.imag] for z in self.nodes.tolist()],
            "weights": [[z.real, z.imag] for z in self.weights.tolist()],
            "error_estimate": self.error_estimate,
            "truncation_error": self.truncation_error,
            "c_bound": self.c_bound,
            "strip_bound": self.strip_bound,
            "resolvent_bound": self.resolvent_bound,
            "scale": None if self.scale is None else list(self.scale),
            "spectral_angle": self.spectral_angle,
            "orientation": self.orientation,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> Contour:
        log_lo, log_hi = math.log(d["r_min"]), math.log(d["r_max"])
        scale = None if d.get("scale") is None else tuple(d["scale"])
        c = _build(
            Sector(d["theta"]), d["delta"], d["tol"], log_lo, log_hi, d["step"],
            d.get("truncation_error", 0.0), d.get("c_bound", 1.0),
            d.get("resolvent_bound", 1.0), scale, d.get("spectral_angle", 0.0),
            d.get("strip_bound"),
        )
        nodes = np.array([complex(*z) for z in d["nodes"]])
        if nodes.shape != c.nodes.shape or not np.allclose(nodes, c.nodes, rtol=1e-12, atol=0):
            raise InvalidParameterError("serialized nodes do not match the recorded rule")
        return c

    @classmethod
    def from_json(cls, text: str) -> Contour:
        return cls.from_dict(json.loads(text))


def _disc_error(c_bound, m_r, delta, d, h):
    pref = _DISC_BASE * max(1.0, 4.0 * delta) ** _DISC_POWER * c_bound * max(m_r, 1.0)
    return pref * math.exp(-TWO_PI * d / h)


def _tail_radii(sector, delta, budget, c_bound, m_r, scale):
    """Truncation radii (log scale) so that each end's tail stays below ``budget``."""
    s_th = sector.sin_factor
    pref = c_bound / math.pi
    if scale is None:
        # |f| <= c r^-delta and ||R|| <= M/r, |1/(l+1)| <= 1/(s r) at infinity
        k_inf = pref * (m_r + 1.0 / s_th) / delta
        log_hi = math.log(k_inf / budget) / delta
        k0 = pref * (m_r / delta + 1.0 / ((1.0 + delta) * s_th))
        log_lo = -math.log(k0 / budget) / delta
        log_lo = min(log_lo, 0.0)
    else:
        lo, hi = scale
        # compensated integrand: f R(l)(A + 1)/(l + 1) decays one order faster
        k_inf = pref * m_r * (1.0 + hi) / (s_th * (1.0 + delta))
        log_hi = math.log(k_inf / budget) / (1.0 + delta)
        k0 = pref * (2.0 / lo + 2.0) / (1.0 + delta)
        log_lo = -math.log(k0 / budget) / (1.0 + delta)
        log_lo = min(log_lo, math.log(min(lo, 1.0) / 2.0))
        log_hi = max(log_hi, math.log(max(hi, 1.0)) + 1.0)
    return log_lo, log_hi


def _tail_value(sector, delta, log_lo, log_hi, c_bound, m_r, scale):
    s_th = sector.sin_factor
    pref = c_bound / math.pi
    r_lo, r_hi = math.exp(log_lo), math.exp(log_hi)
    if scale is None:
        t_inf = pref * (m_r + 1.0 / s_th) * r_hi ** (-delta) / delta
        t0 = pref * (m_r * r_lo**delta / delta + r_lo ** (1.0 + delta) / ((1.0 + delta) * s_th))
    else:
        lo, hi = scale
        t_inf = pref * m_r * (1.0 + hi) / (s_th * (1.0 + delta)) * r_hi ** (-1.0 - delta)
        t0 = pref * (2.0 / lo + 2.0) * r_lo ** (1.0 + delta) / (1.0 + delta)
    return t_inf + t0


def _build(sector, delta, tol, log_lo, log_hi, h, trunc, c_bound, m_r, scale, spectral_angle,
           strip_bound=None):
    span = log_hi - log_lo
    m = max(1, int(math.ceil(span / (2.0 * h))))
    n = 2 * m + 1  # odd so the step-2h rule keeps both end points
    s = np.linspace(log_lo, log_hi, n)
    h = span / (n - 1)
    tw = np.full(n, h)
    tw[0] = tw[-1] = h / 2.0
    tw_half = np.zeros(n)
    tw_half[::2] = 2.0 * h
    tw_half[0] = tw_half[-1] = h

    th = sector.theta
    upper = np.exp(s[::-1] + 1j * th)
    lower = np.exp(s - 1j * th)
    nodes = np.concatenate([upper, lower])
    # inward along the upper ray: d lambda = -lambda ds
    jac = np.concatenate([-upper, lower]) / (2j * math.pi)
    weights = jac * np.concatenate([tw[::-1], tw])
    half_weights = jac * np.concatenate([tw_half[::-1], tw_half])

    d = min(th - spectral_angle, math.pi - th)
    est = trunc + _disc_error(c_bound if strip_bound is None else strip_bound, m_r, delta, d, h)
    return Contour(
        theta=th, delta=float(delta), tol=float(tol),
        r_min=math.exp(log_lo), r_max=math.exp(log_hi), step=h, n_per_ray=n,
        nodes=nodes, weights=weights, half_weights=half_weights,
        truncation_error=trunc, error_estimate=est,
        c_bound=float(c_bound), resolvent_bound=float(m_r),
        strip_bound=None if strip_bound is None else float(strip_bound),
        scale=None if scale is None else (float(scale[0]), float(scale[1])),
        spectral_angle=float(spectral_angle),
    )


def boundary_contour(
    sector: Sector,
    delta: float,
    tol: float,
    max_nodes: int = 2000,
    *,
    c_bound: float = 1.0,
    resolvent_bound: float = 1.0,
    scale: tuple | None = None,
    spectral_angle: float = 0.0,
    strip_bound: float | None = None,
) -> Contour:
    """Fit a boundary contour for integrands of decay ``delta`` to tolerance ``tol``.

    Without ``scale`` the truncation radii come from the generic bound for
    ``|f| <= c (|l|^d + |l|^-d)^-1`` and ``||l R(l)|| <= M``. With
    ``scale = (1/||A^-1||, ||A||)`` of an invertible operator the
    compensated integrand decays like ``|l|^(-1-d)`` at both ends and the
    contour becomes much shorter.

    ``spectral_angle`` is the largest ``|arg|`` of the spectrum; it narrows
    the analyticity strip of the integrand and so the admissible step.
    ``strip_bound`` is the certificate constant of ``f`` on the edges of
    that strip when it exceeds ``c_bound`` (``l^(it)`` grows off the rays).
    """
    if delta <= 0:
        raise InvalidParameterError("decay exponent must be positive")
    if tol <= 0:
        raise InvalidParameterError("tolerance must be positive")
    d = min(sector.theta - spectral_angle, math.pi - sector.theta)
    if d <= 0:
        raise SpectrumError("spectrum reaches the sector boundary", spectral_angle)
    if scale is not None and not (scale[0] > 0 and np.isfinite(scale[1])):
        scale = None

    log_lo, log_hi = _tail_radii(sector, delta, tol / 4.0, c_bound, resolvent_bound, scale)
    log_lo = max(log_lo, -_S_CAP)
    log_hi = min(log_hi, _S_CAP)
    trunc = _tail_value(sector, delta, log_lo, log_hi, c_bound, resolvent_bound, scale)

    c_strip = c_bound if strip_bound is None else max(strip_bound, c_bound)
    pref = _disc_error(c_strip, resolvent_bound, delta, d, 1.0) / math.exp(-TWO_PI * d)
    h = TWO_PI * d / math.log(pref / (tol / 2.0)) if pref > tol / 2.0 else 1.0
    needed = 2 * (2 * int(math.ceil((log_hi - log_lo) / (2.0 * h))) + 1)
    if needed > max_nodes or trunc > tol:
        n_ray = max(3, max_nodes // 2)
        h_best = (log_hi - log_lo) / (n_ray - 1)
        achievable = trunc + _disc_error(c_strip, resolvent_bound, delta, d, h_best)
        raise BudgetExceededError(
            f"{needed} nodes needed for tol={tol:g}, budget is {max_nodes}", achievable
        )
    return _build(
        sector, delta, tol, log_lo, log_hi, h, trunc, c_bound, resolvent_bound, scale, spectral_angle,
        c_strip,
    )
