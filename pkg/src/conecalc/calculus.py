"""Functions of sectorial matrices by contour quadrature.

Two paths are used. Decaying H-class functions are integrated along the
boundary of the sector, with the resolvent compensated by ``1/(l + 1)``.
Functions that are only bounded (``exp(-tau l)``, ``l^(it)``) are
integrated along a contour that encloses the spectrum without reaching
the sector: a hyperbola for the semigroup, a log-plane ellipse for
imaginary powers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ._kernels import expmid_march, pairwise_sum
from .errors import (
    BudgetExceededError,
    CertificateError,
    ConecalcError,
    InvalidParameterError,
    SpectrumError,
    StepSizeError,
    UnsupportedError,
)
from .hclass import (
    HFunction,
    _sampled_bound,
    make_imaginary_power,
    make_power_quotient,
    make_shifted_rational,
    sup_norm_estimate,
)
from .operators import (
    _EXPLICIT_LIMIT,
    EIG_LIMIT,
    ResolventProvider,
    _stacked_resolvents,
    lambda_resolvent_norms,
    sectoriality_scan,
)
from .sectors import Contour, Sector, boundary_contour

DEFAULT_SEED = 0x5EED
REGULARIZATION_EPS = (1e-1, 1e-2, 1e-3)
_THREADS = 1


def set_threads(n: int) -> None:
    """Cap the worker pool used for per-node solves of large operators."""
    global _THREADS
    if n < 1:
        raise InvalidParameterError("thread count must be >= 1")
    _THREADS = int(n)


@dataclass
class CalcResult:
    value: np.ndarray = field(repr=False)
    error_estimate: float
    nodes_used: int
    contour_params: dict
    path: str = "sector_contour"

    def to_dict(self):
        return {
            "error_estimate": self.error_estimate,
            "nodes_used": self.nodes_used,
            "contour_params": self.contour_params,
            "path": self.path,
        }


# ------------------------------------------------------------------ helpers


def _map_ordered(fn, items):
    if _THREADS > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=_THREADS) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _is_normal(m, rtol=1e-10):
    if m.size == 0:
        return True
    mh = m.conj().T
    scale = max(np.linalg.norm(m, 2) ** 2, 1e-300)
    return np.linalg.norm(m @ mh - mh @ m) <= rtol * scale


def boundary_resolvent_bound(provider: ResolventProvider, sector: Sector, per_decade: int = 16) -> float:
    """Upper estimate of ``||l (l - A)^-1||`` on the two boundary rays.

    Normal operators use the eigenvalue formula; otherwise the norm is
    sampled on a geometric grid covering the spectral scale. A 5% margin
    covers the sampling.
    """
    if provider.dim == 0:
        return 1.0
    lo, hi = provider.norm_bounds()
    lo = lo if lo > 0 else hi * 1e-8
    r = np.logspace(math.log10(lo) - 3, math.log10(max(hi, lo)) + 3,
                    int(per_decade * (math.log10(max(hi, lo) / lo) + 6)) + 1)
    th = sector.theta
    lams = np.concatenate([r * np.exp(1j * th), r * np.exp(-1j * th)])
    a = provider._conj(provider.to_dense().astype(complex)) if provider.dim <= EIG_LIMIT else None
    if a is not None and _is_normal(a):
        ev = np.linalg.eigvals(a)
        vals = np.abs(lams)[:, None] / np.abs(lams[:, None] - ev[None, :])
        return 1.05 * float(vals.max())
    if provider.dim > _EXPLICIT_LIMIT:
        lams = lams[::4]
    return 1.05 * float(np.max(lambda_resolvent_norms(provider, lams)))


def fit_contour(
    provider: ResolventProvider,
    f: HFunction,
    tol: float = 1e-8,
    max_nodes: int = 400,
    theta: float | None = None,
) -> Contour:
    """Boundary contour sized for ``f`` and the spectral scale of ``provider``."""
    if not f.certified:
        raise CertificateError(f"{f.kind} has no decay certificate")
    th = f.sector.theta if theta is None else theta
    sector = Sector(th)
    angle = provider.spectral_angle() if provider.dim else 0.0
    lo, hi = provider.norm_bounds() if provider.dim else (1.0, 1.0)
    m_r = boundary_resolvent_bound(provider, sector)
    d = min(th - angle, math.pi - th)
    strip = max(f.c_bound, *(_ray_bound(f, th + s * 0.95 * d) for s in (-1.0, 1.0))) if d > 0 else None
    return boundary_contour(
        sector, f.delta, tol, max_nodes,
        c_bound=f.c_bound, resolvent_bound=m_r,
        scale=(lo, hi) if lo > 0 else None, spectral_angle=angle, strip_bound=strip,
    )


def _ray_bound(f: HFunction, angle: float) -> float:
    """Certificate constant of ``f`` on the rays ``arg l = +-angle``."""
    return _sampled_bound(f.evaluator, f.delta, Sector(angle), decades=20.0, samples=801)


def _check_certificate(f: HFunction, contour: Contour):
    if not f.certified:
        raise CertificateError(f"{f.kind} has no decay certificate")
    if f.delta < contour.delta * (1 - 1e-12):
        raise CertificateError(f"decay {f.delta} weaker than the contour's {contour.delta}")
    if f.c_bound > contour.c_bound * (1 + 1e-9):
        raise CertificateError(f"certificate constant {f.c_bound} exceeds the contour's {contour.c_bound}")
    if f.sector is not None and contour.theta > f.sector.theta + 1e-15:
        raise CertificateError("contour lies inside the function's sector")


def _contour_echo(contour: Contour) -> dict:
    return {
        "theta": contour.theta,
        "delta": contour.delta,
        "tol": contour.tol,
        "r_min": contour.r_min,
        "r_max": contour.r_max,
        "step": contour.step,
        "truncation_error": contour.truncation_error,
        "a_priori_error": contour.error_estimate,
    }


def _node_terms(provider: ResolventProvider, lams, rhs):
    """``(l_k - A)^-1 rhs - rhs/(l_k + 1)`` for every node, stacked on axis 0."""
    rhs = np.asarray(rhs, dtype=complex)
    comp = 1.0 / (lams + 1.0)
    if provider.dim <= _EXPLICIT_LIMIT:
        res = _stacked_resolvents(provider, lams)
        out = res @ rhs if rhs.ndim == 2 else np.einsum("kij,j->ki", res, rhs)
    else:
        def one(lam):
            try:
                return provider.factor(lam).solve(rhs)
            except SpectrumError as exc:
                raise SpectrumError(f"contour hits the spectrum: {exc}", complex(lam)) from None

        out = np.stack(_map_ordered(one, list(lams)))
    return out - comp.reshape((-1,) + (1,) * rhs.ndim) * rhs[None]


def _quadrature(provider, f, contour, rhs):
    _check_certificate(f, contour)
    rhs = np.asarray(rhs, dtype=complex)
    if provider.dim == 0:
        return np.zeros_like(rhs), 0.0
    lams = contour.nodes
    fv = np.asarray(f(lams), dtype=complex)
    if not np.all(np.isfinite(fv)):
        raise ConecalcError("function is not finite on the contour")
    terms = _node_terms(provider, lams, rhs)
    shape = (-1,) + (1,) * rhs.ndim
    full = pairwise_sum((contour.weights * fv).reshape(shape) * terms)
    half = pairwise_sum((contour.half_weights * fv).reshape(shape) * terms)
    if rhs.ndim == 2:
        diff = provider.op_norm(full - half)
    else:
        w = provider.weights
        diff = float(np.linalg.norm((full - half) * (w if w is not None else 1.0)))
    return full, contour.truncation_error + diff


def dunford_apply(provider: ResolventProvider, f: HFunction, contour: Contour | None, v):
    """``f(A) v`` by the compensated boundary quadrature."""
    v = np.asarray(v, dtype=complex)
    if contour is None:
        contour = fit_contour(provider, f)
    if f.c_bound == 0:
        return np.zeros_like(v), CalcResult(np.zeros_like(v), 0.0, contour.size, _contour_echo(contour))
    val, est = _quadrature(provider, f, contour, v)
    if f.real_coefficients and np.isrealobj(provider.to_dense()) and np.isrealobj(v):
        val = val.real.astype(complex)
    return val, CalcResult(val, est, contour.size, _contour_echo(contour))


def dunford_matrix(op: ResolventProvider, f: HFunction, contour: Contour | None = None):
    """Dense ``f(A)``, assembled column by column."""
    n = op.dim
    if n == 0:
        empty = np.zeros((0, 0), dtype=complex)
        return empty, CalcResult(empty, 0.0, 0, {})
    if contour is None:
        contour = fit_contour(op, f)
    if f.c_bound == 0:
        z = np.zeros((n, n), dtype=complex)
        return z, CalcResult(z, 0.0, contour.size, _contour_echo(contour))
    val, est = _quadrature(op, f, contour, np.eye(n, dtype=complex))
    if f.real_coefficients and np.isrealobj(np.asarray(op.to_dense()).real) and not np.any(op.to_dense().imag):
        val = val.real.astype(complex)
    return val, CalcResult(val, est, contour.size, _contour_echo(contour))


# ---------------------------------------------------------- imaginary powers


def _neville_at_zero(xs, ys):
    """Polynomial extrapolation of ``ys(x)`` to ``x = 0``."""
    p = [np.array(y, dtype=complex) for y in ys]
    n = len(xs)
    for k in range(1, n):
        for i in range(n - k):
            x0, x1 = xs[i], xs[i + k]
            p[i] = (x1 * p[i] - x0 * p[i + 1]) / (x1 - x0)
    return p[0]


def _log_ellipse(ev, theta):
    """Ellipse in ``w = log l`` around the log-spectrum, inside ``|Im w| < theta``."""
    w = np.log(ev)
    angle = float(np.max(np.abs(w.imag)))
    if angle >= theta:
        raise SpectrumError("spectrum reaches the sector", complex(ev[np.argmax(np.abs(w.imag))]))
    b = 0.5 * (angle + theta)
    # semi-axis so that the half-height at the outermost log-eigenvalues still exceeds theirs
    lo, hi = float(w.real.min()), float(w.real.max())
    centre = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    a = half + max(b, 1.0)
    return centre, a, b


def _closed_contour_power(op: ResolventProvider, t: float, theta: float, tol: float, max_nodes: int):
    ev = op.eigenvalues()
    if np.any(np.abs(ev) <= 1e-14 * max(1.0, float(np.max(np.abs(ev))))):
        raise SpectrumError("zero eigenvalue: closed contour needs an invertible operator", 0j)
    if np.any(Sector(theta).contains(ev)):
        raise SpectrumError("eigenvalue in the sector", complex(ev[Sector(theta).contains(ev)][0]))
    centre, a, b = _log_ellipse(ev, theta)
    eye = np.eye(op.dim, dtype=complex)

    def rule(m):
        phi = 2 * math.pi * np.arange(m) / m
        w = centre + a * np.cos(phi) + 1j * b * np.sin(phi)
        dw = -a * np.sin(phi) + 1j * b * np.cos(phi)
        lam = np.exp(w)
        fw = np.exp(1j * t * w) * lam * dw * (2 * math.pi / m) / (2j * math.pi)
        if op.dim <= _EXPLICIT_LIMIT:
            res = _stacked_resolvents(op, lam)
        else:
            res = np.stack(_map_ordered(lambda z: op.factor(z).solve(eye), list(lam)))
        return pairwise_sum(fw[:, None, None] * res)

    m = 32
    prev = rule(m)
    while True:
        m *= 2
        cur = rule(m)
        diff = op.op_norm(cur - prev)
        if diff <= tol * max(1.0, op.op_norm(cur)):
            return cur, diff, m
        if 2 * m > max_nodes:
            raise BudgetExceededError(f"closed contour did not settle within {max_nodes} nodes", diff)
        prev = cur


@dataclass
class PowerResult:
    value: np.ndarray = field(repr=False)
    norm: float
    growth_bound: float
    ratio: float
    m_r: float
    calc: CalcResult

    def to_dict(self):
        return {
            "norm": self.norm,
            "growth_bound": self.growth_bound,
            "ratio": self.ratio,
            "m_r": self.m_r,
            **self.calc.to_dict(),
        }


def imaginary_power(
    op: ResolventProvider,
    t: float,
    mode: str = "regularized",
    *,
    sector: Sector | None = None,
    eps=REGULARIZATION_EPS,
    tol: float = 1e-10,
    max_nodes: int = 4000,
    m_r: float | None = None,
) -> PowerResult:
    """``A^(it)`` with the growth check ``||A^(it)|| <= M_R exp(|t| theta)``.

    ``regularized`` extrapolates ``l^(it) l^e (1 + l)^(-2e)`` to ``e = 0``
    from the values at ``eps``; ``closed_contour`` integrates ``l^(it)``
    around the spectrum and needs an invertible operator.
    """
    sector = Sector(math.pi / 2) if sector is None else sector
    th = sector.theta
    if m_r is None:
        m_r = sectoriality_scan(op, sector).m_r if op.dim else 1.0
    if op.dim == 0:
        z = np.zeros((0, 0), dtype=complex)
        calc = CalcResult(z, 0.0, 0, {}, mode)
        return PowerResult(z, 0.0, m_r * math.exp(abs(t) * th), 0.0, m_r, calc)
    if mode == "regularized":
        vals, est, nodes = [], 0.0, 0
        for e in eps:
            f = make_imaginary_power(t, e, sector=sector)
            contour = fit_contour(op, f, tol=tol, max_nodes=max_nodes)
            val, res = dunford_matrix(op, f, contour)
            vals.append(val)
            nodes += res.nodes_used
            est = max(est, contour.error_estimate)
        value = _neville_at_zero(list(eps), vals)
        calc = CalcResult(value, est, nodes, {"eps": list(eps), "theta": th}, "regularized")
    elif mode == "closed_contour":
        value, diff, m = _closed_contour_power(op, t, th, tol, max_nodes)
        calc = CalcResult(value, diff, m, {"theta": th, "ellipse_nodes": m}, "closed_contour")
    else:
        raise InvalidParameterError(f"unknown mode {mode!r}")
    norm = op.op_norm(value)
    bound = m_r * math.exp(abs(t) * th)
    return PowerResult(value, norm, bound, norm / bound, m_r, calc)


# ------------------------------------------------------------ heat semigroup

# optimal hyperbola for spectrum on a ray, scaled down for a spectral angle
_HYP_ALPHA = 1.1721
_HYP_D = 0.3987


def _hyperbola_params(n: int, spectral_angle: float):
    """Shape ``(alpha, d)`` and ``(x, h)`` with ``mu = x / tau``, balancing
    the discretisation error against the truncation error for ``2n + 1`` nodes.
    """
    room = (math.pi / 2 - spectral_angle) / (math.pi / 2)
    alpha, d = _HYP_ALPHA * room, _HYP_D * room

    def worst(p):
        x, h = math.exp(p[0]), math.exp(p[1])
        e1 = x * (1 - math.sin(alpha - d)) - 2 * math.pi * d / h
        e2 = x * (1 - math.sin(alpha) * math.cosh(n * h))
        return max(e1, e2)

    res = minimize(worst, [math.log(n / 2.0), math.log(3.0 / n)], method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
    return alpha, math.exp(res.x[0]), math.exp(res.x[1])


def _hyperbola_sum(op, tau, n, spectral_angle, rhs):
    alpha, x, h = _hyperbola_params(n, spectral_angle)
    mu = x / tau
    u = h * np.arange(-n, n + 1)
    z = mu * (1 + np.sin(1j * u - alpha))
    dz = 1j * mu * np.cos(1j * u - alpha)
    # e^{-tau A} = (1/2 pi i) int e^{tau z} (z + A)^{-1} dz, and (z + A)^{-1} = -(-z - A)^{-1}
    wts = -h * np.exp(tau * z) * dz / (2j * math.pi)
    lams = -z
    if op.dim <= _EXPLICIT_LIMIT:
        res = _stacked_resolvents(op, lams)
        terms = res @ rhs
    else:
        terms = np.stack(_map_ordered(lambda lam: op.factor(lam).solve(rhs), list(lams)))
    return pairwise_sum(wts[:, None, None] * terms)


def heat_semigroup(
    op: ResolventProvider,
    tau: float,
    sector: Sector | None = None,
    *,
    rhs=None,
    tol: float = 1e-12,
    max_nodes: int = 513,
):
    """``exp(-tau A)`` (or its action on ``rhs``) along a hyperbola around the spectrum."""
    sector = Sector(math.pi / 2) if sector is None else sector
    if sector.theta > math.pi / 2 + 1e-15:
        raise UnsupportedError("exp(-tau l) is unbounded off sectors with theta > pi/2")
    if not tau > 0:
        raise InvalidParameterError("tau must be positive")
    single = rhs is not None and np.asarray(rhs).ndim == 1
    rhs = np.eye(op.dim, dtype=complex) if rhs is None else np.asarray(rhs, dtype=complex)
    if single:
        rhs = rhs[:, None]
    if op.dim == 0:
        return rhs.copy(), CalcResult(rhs.copy(), 0.0, 0, {}, "hyperbola")
    angle = 0.0
    if op.dim <= EIG_LIMIT:
        ev = op.eigenvalues()
        if np.any(ev.real <= 0):
            raise SpectrumError("spectrum must lie in the open right half-plane",
                                complex(ev[np.argmin(ev.real)]))
        angle = float(np.max(np.abs(np.angle(ev))))
        if angle >= sector.theta:
            raise SpectrumError("spectrum reaches the sector", complex(ev[np.argmax(np.abs(np.angle(ev)))]))
    n = 8
    prev = _hyperbola_sum(op, tau, n, angle, rhs)
    while True:
        n *= 2
        cur = _hyperbola_sum(op, tau, n, angle, rhs)
        diff = op.op_norm(cur - prev) if not single else float(np.linalg.norm(cur - prev))
        if diff <= tol * max(1.0, float(np.linalg.norm(cur))):
            break
        if 2 * (2 * n) + 1 > max_nodes:
            raise BudgetExceededError(f"hyperbola did not settle within {max_nodes} nodes", diff)
        prev = cur
    if np.isrealobj(op.to_dense()) or not np.any(op.to_dense().imag):
        if np.isrealobj(rhs) or not np.any(rhs.imag):
            cur = cur.real.astype(complex)
    if not np.all(np.isfinite(cur)):
        raise StepSizeError("semigroup evaluation overflowed")
    out = cur[:, 0] if single else cur
    return out, CalcResult(out, diff, 2 * n + 1, {"tau": tau, "spectral_angle": angle}, "hyperbola")


# ------------------------------------------------------------- H-infinity


@dataclass
class HinfReport:
    M_hat: float
    table: list
    seed: int
    failures: list = field(default_factory=list)

    def to_dict(self):
        return {"M_hat": self.M_hat, "seed": self.seed, "table": self.table, "failures": self.failures}


def hinf_family(sector: Sector, family_size: int, seed: int = DEFAULT_SEED) -> list[HFunction]:
    """Fixed members first (power quotients, regularised imaginary powers),
    then random shifted rationals, ``family_size`` members in total."""
    fixed = [make_power_quotient(d, sector=sector) for d in (0.25, 0.5, 1.0)]
    fixed += [make_imaginary_power(t, 0.5, sector=sector) for t in (1.0, -1.0, 2.0, -2.0)]
    members = fixed[:family_size]
    rng = np.random.default_rng(seed)
    th = sector.theta
    # poles keep an angular gap >= asin(1/4), so their distance to the rays is >= |p|/4
    margin = min(math.asin(0.25), 0.5 * (math.pi - th))
    while len(members) < family_size:
        k = int(rng.integers(1, 4))
        mod = 10.0 ** rng.uniform(-1.0, 1.0, k)
        arg = rng.uniform(th + margin, 2 * math.pi - th - margin, k)
        delta = float(rng.uniform(0.25, 1.0))
        members.append(make_shifted_rational(mod * np.exp(1j * arg), delta, sector=sector))
    return members


def hinf_bound_estimate(
    provider: ResolventProvider,
    sector: Sector,
    family_size: int = 16,
    seed: int = DEFAULT_SEED,
    *,
    tol: float = 1e-8,
    max_nodes: int = 2000,
    refine: int = 0,
) -> HinfReport:
    """Empirical ``M`` in ``||f(A)|| <= M ||f||_inf`` over a seeded family.

    ``refine`` halves the contour step that many times. Failing members are
    listed in ``failures`` and left out of ``M_hat``.
    """
    table, failures = [], []
    for f in hinf_family(sector, family_size, seed):
        try:
            contour = fit_contour(provider, f, tol=tol, max_nodes=max_nodes)
            for _ in range(refine):
                contour = contour.refined()
            val, _ = dunford_matrix(provider, f, contour)
            norm = provider.op_norm(val)
            sup = sup_norm_estimate(f, sector)
            table.append({"f": f.spec(), "norm_fA": norm, "sup_f": sup, "ratio": norm / sup,
                          "nodes": contour.size})
        except ConecalcError as exc:
            failures.append({"f": f.spec(), "error": f"{type(exc).__name__}: {exc}"})
    m_hat = max((row["ratio"] for row in table), default=float("nan"))
    return HinfReport(m_hat, table, seed, failures)


# ---------------------------------------------------------- Cauchy problem


@dataclass
class MaxRegReport:
    rho: float
    r: float
    norm_du: float
    norm_au: float
    norm_f: float
    dt: float
    steps: int

    def to_dict(self):
        return dict(self.__dict__)


def _time_lr(values, dt, r):
    """Trapezoid time-``L_r`` norm of a sequence of spatial norms."""
    w = np.full(values.size, dt)
    w[0] = w[-1] = dt / 2
    return float(np.sum(w * values**r) ** (1.0 / r))


def _space_norm(op, u):
    """Discrete ``L_2`` norm in stored coordinates, ``sqrt(sum |v|^2 h)`` on cone grids."""
    h = op.grid.h if getattr(op, "grid", None) is not None else 1.0
    w = op.weights
    v = u * w if w is not None else u
    return np.sum(np.abs(v) ** 2, axis=-1) * h


@dataclass
class CauchySolution:
    tau: np.ndarray
    u: list = field(repr=False)
    report: MaxRegReport | list

    def rows(self):
        """``(tau, mode_j, node_i, re, im)`` rows for CSV output."""
        for j, uj in enumerate(self.u):
            for k, tk in enumerate(self.tau):
                for i, val in enumerate(uj[k]):
                    yield (float(tk), j, i, float(val.real), float(val.imag))


def mode_propagators(modes: list, dt: float) -> list:
    """``(exp(-dt A), exp(-dt A / 2))`` per mode, reusable across forcings."""
    out = []
    for op in modes:
        e_full, _ = heat_semigroup(op, dt)
        e_half, _ = heat_semigroup(op, dt / 2)
        if not (np.all(np.isfinite(e_full)) and np.all(np.isfinite(e_half))):
            raise StepSizeError("non-finite propagator")
        out.append((e_full, e_half))
    return out


def cauchy_solve(
    modes: list, forcing, time_grid, r=2.0, *, check_e4: Sector | None = None, propagators=None
):
    """Solve ``u' + A u = f``, ``u(0) = 0`` mode by mode with the exponential midpoint rule.

    ``forcing(tau)`` returns one array per mode of shape ``(len(tau), dim_j)``.
    ``r`` may be a single exponent or a list; the report matches.
    ``check_e4`` refuses the solve if the modes fail the numerical spectral test.
    ``propagators`` takes the output of ``mode_propagators`` for this time step.
    """
    from .ellipticity import check_E4_numeric

    tau = np.asarray(time_grid, dtype=float)
    if tau.ndim != 1 or tau.size < 2 or tau[0] != 0:
        raise InvalidParameterError("time grid must start at 0 and have >= 2 points")
    dt = float(tau[1] - tau[0])
    if not np.allclose(np.diff(tau), dt, rtol=1e-10, atol=0):
        raise InvalidParameterError("time grid must be uniform")
    if check_e4 is not None and modes:
        ok, rep = check_E4_numeric(modes, check_e4)
        if not ok:
            raise SpectrumError(f"E4 check failed: {rep['violations'][:1]}")
    mids = tau[:-1] + dt / 2
    f_mid = forcing(mids)
    f_nodes = forcing(tau)
    if len(f_mid) != len(modes):
        raise InvalidParameterError("forcing must return one array per mode")
    if propagators is None:
        propagators = mode_propagators(modes, dt)
    elif len(propagators) != len(modes):
        raise InvalidParameterError("need one propagator pair per mode")
    us, du2, au2, f2 = [], 0.0, 0.0, 0.0
    for op, (e_full, e_half), fm, fn in zip(modes, propagators, f_mid, f_nodes):
        real = not (np.any(e_full.imag) or np.any(np.asarray(fm).imag if np.iscomplexobj(fm) else 0))
        ef, eh = (e_full.real, e_half.real) if real else (e_full, e_half)
        u = expmid_march(ef, eh, np.asarray(fm, dtype=float if real else complex), dt)
        if not np.all(np.isfinite(u)):
            raise StepSizeError("trajectory overflowed; reduce the time step")
        us.append(u)
        du = np.gradient(u, dt, axis=0, edge_order=2)
        au = np.stack([np.real_if_close(op.apply(x)) for x in u])
        du2 = du2 + _space_norm(op, du)
        au2 = au2 + _space_norm(op, au)
        f2 = f2 + _space_norm(op, np.asarray(fn))
    rs = np.atleast_1d(r)
    reports = []
    for rr in rs:
        if not rr > 1:
            raise InvalidParameterError("time exponent must exceed 1")
        if not modes:
            reports.append(MaxRegReport(0.0, float(rr), 0.0, 0.0, 0.0, dt, tau.size - 1))
            continue
        nd = _time_lr(np.sqrt(du2), dt, rr)
        na = _time_lr(np.sqrt(au2), dt, rr)
        nf = _time_lr(np.sqrt(f2), dt, rr)
        rho = (nd + na) / nf if nf > 0 else 0.0
        reports.append(MaxRegReport(rho, float(rr), nd, na, nf, dt, tau.size - 1))
    return CauchySolution(tau, us, reports[0] if np.ndim(r) == 0 else reports)


def sine_forcing(modes: list, coeffs, T: float):
    """``f_j(tau) = sum_k c_jk sin((k + 1) pi tau / T) g_j`` in stored coordinates.

    ``g_j`` is the profile ``t^2 (1 - t)`` on cone modes (vanishing at the
    base and tip) and the constant 1 otherwise.
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    if coeffs.shape[0] != len(modes):
        raise InvalidParameterError("need one coefficient row per mode")
    if not T > 0:
        raise InvalidParameterError("final time must be positive")
    profiles = []
    for op in modes:
        grid = getattr(op, "grid", None)
        if grid is not None:
            profiles.append(op.conjugate(grid.t**2 * (1.0 - grid.t)))
        else:
            profiles.append(np.ones(op.dim))
    k = np.arange(1, coeffs.shape[1] + 1)

    def forcing(tau):
        s = np.sin(np.outer(np.asarray(tau, dtype=float), k) * math.pi / T)
        return [np.outer(s @ c, g) for c, g in zip(coeffs, profiles)]

    return forcing


def random_sine_forcing(modes: list, T: float, terms: int = 4, seed: int = DEFAULT_SEED):
    """``sine_forcing`` with standard normal coefficients drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    return sine_forcing(modes, rng.standard_normal((len(modes), terms)), T)
