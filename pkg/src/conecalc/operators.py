"""Finite-dimensional operators that can solve ``(lambda - A) x = b``.

Norms are Euclidean in the provider's coordinates after scaling by an
optional diagonal weight, so a provider can express norms of a weighted
space without changing its matrix.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack
from scipy.optimize import minimize

from .errors import ConecalcError, InvalidParameterError, SpectrumError
from .sectors import Sector

RCOND_MIN = 1e-14  # condition estimate above 1e14 counts as hitting the spectrum
EIG_LIMIT = 4000
_EXPLICIT_LIMIT = 64  # up to this size resolvents are formed explicitly in scans


class Factorization:
    """LU factors of ``lambda - A`` with solves for the matrix and its adjoint."""

    def __init__(self, solve, solve_adjoint):
        self.solve = solve
        self.solve_adjoint = solve_adjoint


class ResolventProvider:
    """Abstract resolvent capability.

    Subclasses implement ``apply``, ``factor`` and ``to_dense``; ``weights``
    (if set) is the diagonal ``W`` with ``||x|| = ||W x||_2``.
    """

    dim: int
    weights: np.ndarray | None = None

    def apply(self, v):
        raise NotImplementedError

    def factor(self, lam) -> Factorization:
        raise NotImplementedError

    def to_dense(self) -> np.ndarray:
        raise NotImplementedError

    def resolve(self, lam, rhs):
        """Solve ``(lam - A) x = rhs``; ``rhs`` may hold several columns."""
        return self.factor(lam).solve(np.asarray(rhs, dtype=complex))

    def eigenvalues(self):
        if self.dim > EIG_LIMIT:
            raise ConecalcError(f"dimension {self.dim} exceeds eigensolver limit {EIG_LIMIT}")
        try:
            return np.linalg.eigvals(self.to_dense())
        except np.linalg.LinAlgError as exc:
            raise ConecalcError(f"eigensolver failed: {exc}") from exc

    def _conj(self, m):
        if self.weights is None:
            return m
        w = self.weights
        return (w[:, None] * m) / w[None, :]

    def op_norm(self, m):
        """Weighted operator norm of a dense matrix acting in this provider's space."""
        m = self._conj(np.asarray(m, dtype=complex))
        if m.size == 0:
            return 0.0
        return float(np.linalg.norm(m, 2))

    def norm_bounds(self):
        """``(1/||A^-1||, ||A||)`` in the weighted norm; first entry 0 if singular."""
        a = self._conj(self.to_dense().astype(complex))
        if a.size == 0:
            return (1.0, 0.0)
        sv = np.linalg.svd(a, compute_uv=False)
        lo = float(sv[-1])
        return (lo if lo > RCOND_MIN * sv[0] else 0.0, float(sv[0]))

    def spectral_angle(self):
        """Largest ``|arg|`` over the spectrum."""
        ev = self.eigenvalues()
        ev = ev[np.abs(ev) > 0]
        return float(np.max(np.abs(np.angle(ev)))) if ev.size else 0.0


def _dense_factor(m, scale=0.0):
    """LU of ``m``; ``scale`` (``||A|| + |lam|``) makes the rcond test absolute."""
    n = m.shape[0]
    if n == 0:
        return Factorization(lambda b: b.copy(), lambda b: b.copy())
    anorm = np.linalg.norm(m, 1)
    try:
        lu, piv = sla.lu_factor(m, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SpectrumError(f"factorization failed: {exc}") from exc
    rcond, _ = lapack.zgecon(lu, anorm)
    rcond *= anorm / max(anorm, scale) if anorm > 0 else 0.0
    if not rcond > RCOND_MIN:
        raise SpectrumError(f"resolvent singular (rcond={rcond:.2e})")
    return Factorization(
        lambda b: sla.lu_solve((lu, piv), b, check_finite=False),
        lambda b: sla.lu_solve((lu, piv), b, trans=2, check_finite=False),
    )


@dataclass
class DenseOperator(ResolventProvider):
    matrix: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.matrix, dtype=complex))
        if self.matrix is not None and np.asarray(self.matrix).size == 0:
            m = np.zeros((0, 0), dtype=complex)
        if m.shape[0] != m.shape[1]:
            raise InvalidParameterError("operator matrix must be square")
        self.matrix = m
        self.dim = m.shape[0]
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)

    def apply(self, v):
        return self.matrix @ np.asarray(v, dtype=complex)

    def factor(self, lam):
        try:
            return _dense_factor(
                complex(lam) * np.eye(self.dim) - self.matrix,
                np.linalg.norm(self.matrix, 1) + abs(lam) if self.dim else 0.0,
            )
        except SpectrumError as exc:
            raise SpectrumError(str(exc), complex(lam)) from None

    def to_dense(self):
        return self.matrix

    def to_json(self) -> str:
        return matrix_to_json(self.matrix)

    @classmethod
    def from_json(cls, text: str) -> DenseOperator:
        return cls(matrix_from_json(text))


@dataclass
class DiagonalOperator(ResolventProvider):
    eigs: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.eigs = np.asarray(self.eigs, dtype=complex).ravel()
        self.dim = self.eigs.size

    def apply(self, v):
        v = np.asarray(v, dtype=complex)
        return self.eigs.reshape((-1,) + (1,) * (v.ndim - 1)) * v

    def factor(self, lam):
        d = complex(lam) - self.eigs
        scale = max(1.0, float(np.max(np.abs(self.eigs), initial=0.0)), abs(lam))
        if d.size and np.min(np.abs(d)) <= RCOND_MIN * scale:
            raise SpectrumError("resolvent singular", complex(lam))

        def solve(b):
            return b / d.reshape((-1,) + (1,) * (b.ndim - 1))

        def solve_adjoint(b):
            return b / np.conj(d).reshape((-1,) + (1,) * (b.ndim - 1))

        return Factorization(solve, solve_adjoint)

    def to_dense(self):
        return np.diag(self.eigs)

    def eigenvalues(self):
        return self.eigs.copy()

    def norm_bounds(self):
        if self.dim == 0:
            return (1.0, 0.0)
        a = np.abs(self.eigs)
        return (float(a.min()), float(a.max()))


@dataclass
class TridiagonalOperator(ResolventProvider):
    """Tridiagonal matrix with O(n) factorizations per spectral parameter."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    weights: np.ndarray | None = field(default=None)

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=complex)
        self.diag = np.asarray(self.diag, dtype=complex)
        self.upper = np.asarray(self.upper, dtype=complex)
        self.dim = self.diag.size

    def apply(self, v):
        v = np.asarray(v, dtype=complex)
        out = self.diag.reshape((-1,) + (1,) * (v.ndim - 1)) * v
        if self.dim > 1:
            out[1:] += self.lower.reshape((-1,) + (1,) * (v.ndim - 1)) * v[:-1]
            out[:-1] += self.upper.reshape((-1,) + (1,) * (v.ndim - 1)) * v[1:]
        return out

    def to_dense(self):
        return np.diag(self.diag) + np.diag(self.lower, -1) + np.diag(self.upper, 1)

    def factor(self, lam):
        lam = complex(lam)
        if self.dim < 3:
            try:
                a = self.to_dense()
                return _dense_factor(
                    lam * np.eye(self.dim) - a, np.linalg.norm(a, 1) + abs(lam) if self.dim else 0.0
                )
            except SpectrumError as exc:
                raise SpectrumError(str(exc), lam) from None
        dl, d, du = -self.lower, lam - self.diag, -self.upper
        anorm = np.max(np.abs(d) + np.r_[np.abs(dl), 0.0] + np.r_[0.0, np.abs(du)])
        dl, d, du, du2, ipiv, info = lapack.zgttrf(dl, d, du)
        if info != 0:
            raise SpectrumError("resolvent singular", lam)
        rcond, _ = lapack.zgtcon(dl, d, du, du2, ipiv, anorm)
        scale = abs(lam) + np.max(
            np.abs(self.diag) + np.r_[np.abs(self.lower), 0.0] + np.r_[0.0, np.abs(self.upper)]
        )
        rcond *= anorm / max(anorm, scale) if anorm > 0 else 0.0
        if not rcond > RCOND_MIN:
            raise SpectrumError(f"resolvent singular (rcond={rcond:.2e})", lam)

        def solve(b, trans="N"):
            b2 = b.reshape(self.dim, -1).astype(complex)
            x, _ = lapack.zgttrs(dl, d, du, du2, ipiv, b2, trans=trans)
            return x.reshape(b.shape)

        return Factorization(solve, lambda b: solve(b, "C"))


def _resolvent_norm_power(provider, lam, iters):
    fac = provider.factor(lam)
    w = provider.weights
    n = provider.dim
    x = np.ones(n, dtype=complex) + 0.1j * np.sin(np.arange(n) + 2.0)
    x /= np.linalg.norm(x)
    for _ in range(iters):
        y = fac.solve(x / w if w is not None else x)
        if w is not None:
            y = w * y
        # adjoint of W R W^-1 is W^-1 R^H W
        z = fac.solve_adjoint(w * y if w is not None else y)
        if w is not None:
            z = z / w
        nz = np.linalg.norm(z)
        if nz == 0:
            return 0.0
        x = z / nz
    y = fac.solve(x / w if w is not None else x)
    if w is not None:
        y = w * y
    return float(np.linalg.norm(y))


def _stacked_resolvents(provider, lams):
    """``(lam_k - A)^-1`` for a batch of parameters, with the rcond guard."""
    a = provider.to_dense().astype(complex)
    n = a.shape[0]
    m = lams[:, None, None] * np.eye(n) - a[None]
    try:
        inv = np.linalg.inv(m)
    except np.linalg.LinAlgError:
        for lam in lams:
            provider.factor(lam)  # raises with the offending point
        raise
    scale = np.abs(a).sum(axis=0).max(initial=0.0) + np.abs(lams)
    rcond = 1.0 / (scale * np.abs(inv).sum(axis=1).max(axis=1))
    bad = ~(rcond > RCOND_MIN)
    if bad.any():
        k = int(np.argmax(bad))
        raise SpectrumError(f"resolvent singular (rcond={rcond[k]:.2e})", complex(lams[k]))
    return inv


def lambda_resolvent_norms(provider: ResolventProvider, lams, iters: int = 50):
    """``||lam (lam - A)^-1||`` for every ``lam``.

    Small operators get exact batched SVDs; large ones power iteration
    through the factorization.
    """
    lams = np.asarray(lams, dtype=complex).ravel()
    if provider.dim == 0:
        return np.zeros(lams.size)
    if provider.dim <= _EXPLICIT_LIMIT:
        mats = lams[:, None, None] * _stacked_resolvents(provider, lams)
        return np.linalg.svd(provider._conj(mats), compute_uv=False)[:, 0]
    return np.array([abs(lam) * _resolvent_norm_power(provider, lam, iters) for lam in lams])


@dataclass
class ScanResult:
    m_r: float
    argmax: complex
    lams: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def rows(self):
        return [(abs(l), float(np.angle(l)), v) for l, v in zip(self.lams, self.values)]


def default_radii(decades=(-4, 6), per_decade=64):
    lo, hi = decades
    return np.logspace(lo, hi, int((hi - lo) * per_decade) + 1)


def sectoriality_scan(
    provider: ResolventProvider,
    sector: Sector,
    radii=None,
    angles=None,
    *,
    iters: int = 50,
    polish: bool = True,
) -> ScanResult:
    """Estimate ``M_R = sup ||lam (lam - A)^-1||`` over the sector.

    The sup over the grid is optionally polished by a local bounded search
    around the best grid point; the result never drops below the grid max.
    A singular solve raises ``SpectrumError`` carrying the offending point.
    """
    th = sector.theta
    radii = default_radii() if radii is None else np.asarray(radii, dtype=float)
    if angles is None:
        angles = np.linspace(th, 2 * math.pi - th, 33)
    angles = np.asarray(angles, dtype=float)
    lams = (radii[:, None] * np.exp(1j * angles[None, :])).ravel()
    vals = lambda_resolvent_norms(provider, lams, iters)
    k = int(np.argmax(vals))
    best, best_lam = float(vals[k]), complex(lams[k])

    if polish and provider.dim > 0:
        def neg(x):
            lam = math.exp(x[0]) * complex(math.cos(x[1]), math.sin(x[1]))
            try:
                return -float(lambda_resolvent_norms(provider, [lam], iters)[0])
            except SpectrumError:
                return 0.0

        x0 = [math.log(abs(best_lam)), float(np.mod(np.angle(best_lam), 2 * math.pi))]
        bounds = [(math.log(radii.min()), math.log(radii.max())), (th, 2 * math.pi - th)]
        res = minimize(neg, x0, method="L-BFGS-B", bounds=bounds)
        if -res.fun > best:
            best = float(-res.fun)
            best_lam = math.exp(res.x[0]) * complex(math.cos(res.x[1]), math.sin(res.x[1]))
    return ScanResult(best, best_lam, lams, vals)


def spectrum_in_sector(op: ResolventProvider, sector: Sector, exclude_origin: bool = False):
    """``(ok, offenders)``: ok iff no eigenvalue lies in the sector (minus 0 if excluded)."""
    ev = op.eigenvalues()
    if ev.size == 0:
        return True, []
    scale = max(1.0, float(np.max(np.abs(ev))))
    bad = np.asarray(sector.contains(ev), dtype=bool)
    if exclude_origin:
        bad &= np.abs(ev) > 1e-12 * scale
    return (not bool(bad.any())), [complex(z) for z in ev[bad]]


def matrix_to_json(m) -> str:
    m = np.asarray(m, dtype=complex)
    return json.dumps([[[z.real, z.imag] for z in row] for row in m.tolist()])


def matrix_from_json(text: str) -> np.ndarray:
    rows = json.loads(text)
    if not rows:
        return np.zeros((0, 0), dtype=complex)
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)
