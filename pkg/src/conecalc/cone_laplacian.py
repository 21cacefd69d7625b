"""Mode-wise discretisation of the Fuchs-type cone Laplacian.

Near the tip the Laplacian of a straight cone ``(0, 1] x X`` is
``t^-2 ((t d/dt)^2 + (n - 1) t d/dt + Delta_X)``. Expanding in eigenfunctions
of ``Delta_X`` (eigenvalues ``lambda_j <= 0``) leaves one ordinary
differential operator per mode,

    A_j = -t^-2 ((t d/dt)^2 + (n - 1) t d/dt + lambda_j),

which in ``r = -log t`` reads ``exp(2 r) (-d_r^2 + (n - 1) d_r - lambda_j)``.
It is discretised on a uniform ``r`` grid in the conservative (flux) form
``exp((n + 1) r) [-d_r (exp(-(n - 1) r) d_r) - lambda_j exp(-(n - 1) r)]``
and stored conjugated by the norm weight ``W = diag(t_i^((n+1)/2 - gamma))``,
so Euclidean norms of the stored coordinates are the weighted norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from ._kernels import mode_stencil
from .errors import InvalidParameterError, TruncationError
from .operators import TridiagonalOperator, matrix_to_json

MAX_TIP_GROWTH = 1e12  # largest admissible exp(2 R)


@dataclass(frozen=True)
class CrossSectionSpectrum:
    """Eigenvalues ``lambda_0 > lambda_1 > ...`` of the cross-section Laplacian."""

    eigs: tuple
    bc: str
    source: str = "user_list"
    length: float | None = None

    def __post_init__(self):
        eigs = tuple(float(x) for x in self.eigs)
        object.__setattr__(self, "eigs", eigs)
        if self.bc not in ("Dirichlet", "Neumann"):
            raise InvalidParameterError(f"boundary condition must be Dirichlet or Neumann, got {self.bc!r}")
        if any(x > 0 for x in eigs):
            raise InvalidParameterError("cross-section eigenvalues must be <= 0")
        if any(b >= a for a, b in zip(eigs, eigs[1:])):
            raise InvalidParameterError("cross-section eigenvalues must decrease strictly")
        if eigs:
            if self.bc == "Dirichlet" and not eigs[0] < 0:
                raise InvalidParameterError("Dirichlet spectra have lambda_0 < 0")
            if self.bc == "Neumann" and eigs[0] != 0:
                raise InvalidParameterError("Neumann spectra have lambda_0 = 0")

    @property
    def lambda0(self):
        return self.eigs[0]

    def to_dict(self):
        return {"eigs": list(self.eigs), "bc": self.bc, "source": self.source, "length": self.length}


def interval_spectrum(length: float, bc: str, count: int) -> CrossSectionSpectrum:
    """Laplacian eigenvalues on ``[0, length]``: ``-(k pi / L)^2``."""
    if count < 1:
        raise InvalidParameterError("count must be >= 1")
    if length <= 0:
        raise InvalidParameterError("interval length must be positive")
    k = np.arange(count)
    if bc == "Dirichlet":
        eigs = -(((k + 1) * math.pi / length) ** 2)
    elif bc == "Neumann":
        eigs = -((k * math.pi / length) ** 2)
    else:
        raise InvalidParameterError(f"boundary condition must be Dirichlet or Neumann, got {bc!r}")
    return CrossSectionSpectrum(tuple(eigs.tolist()), bc, "interval", float(length))


@dataclass(frozen=True)
class WeightedGrid:
    """Uniform grid in ``r = -log t`` on ``(0, R)`` with ``N`` interior nodes.

    ``r = 0`` is the base ``t = 1``; ``r = R`` is the artificial tip.
    """

    R: float
    N: int
    gamma: float = 0.0
    n: int = 1
    p: float = 2.0

    def __post_init__(self):
        if self.R <= 0 or self.N < 1:
            raise InvalidParameterError("grid needs R > 0 and N >= 1")
        if not self.p > 1:
            raise InvalidParameterError("integrability exponent must exceed 1")

    @property
    def h(self):
        return self.R / (self.N + 1)

    @property
    def r(self):
        return self.h * np.arange(1, self.N + 1)

    @property
    def t(self):
        return np.exp(-self.r)

    @property
    def weight_exponent(self):
        return (self.n + 1) / 2.0 - self.gamma

    @property
    def weights(self):
        """``t_i^((n+1)/2 - gamma)``."""
        return np.exp(-self.weight_exponent * self.r)

    @property
    def isometry_gamma(self):
        """Weight for which ``H^{0,gamma}_p = L_p(t^n dt)``."""
        return (self.n + 1) * (0.5 - 1.0 / self.p)

    def with_(self, **kw) -> WeightedGrid:
        d = dict(R=self.R, N=self.N, gamma=self.gamma, n=self.n, p=self.p)
        d.update(kw)
        return WeightedGrid(**d)

    def to_dict(self):
        return {"R": self.R, "N": self.N, "gamma": self.gamma, "n": self.n, "p": self.p}


def discrete_norm(u, grid: WeightedGrid) -> float:
    """``(sum_i |t_i^((n+1)/2 - gamma) u_i|^p h)^(1/p)``."""
    u = np.asarray(u)
    if u.shape[0] != grid.N:
        raise InvalidParameterError(f"vector length {u.shape[0]} != grid size {grid.N}")
    return float(np.sum(np.abs(grid.weights * u) ** grid.p * grid.h) ** (1.0 / grid.p))


@dataclass
class ConeModeOperator(TridiagonalOperator):
    """One cone mode, stored in weight-conjugated coordinates ``v = W u``."""

    n: int = 1
    gamma: float = 0.0
    lambda_j: float = 0.0
    grid: WeightedGrid | None = None
    bc_tip: str = "truncation_dirichlet"
    bc_base: str = "Dirichlet"

    def conjugate(self, u):
        """Plain coordinates -> stored coordinates."""
        return self.grid.weights * np.asarray(u)

    def unconjugate(self, v):
        return np.asarray(v) / self.grid.weights

    def eigenvalues(self):
        lo, up = self.lower, self.upper
        prod = lo * up
        real = not (np.any(self.diag.imag) or np.any(prod.imag))
        if self.dim > 1 and real and np.all(prod.real > 0):
            # diagonally similar to a symmetric tridiagonal matrix
            ev = eigh_tridiagonal(self.diag.real, np.sqrt(prod.real), eigvals_only=True)
            return ev.astype(complex)
        return super().eigenvalues()

    def to_json(self) -> str:
        return matrix_to_json(self.to_dense())

    def describe(self) -> dict:
        return {
            "n": self.n,
            "gamma": self.gamma,
            "lambda_j": self.lambda_j,
            "grid": self.grid.to_dict(),
            "bc_tip": self.bc_tip,
            "bc_base": self.bc_base,
        }


def assemble_mode_operator(
    n: int, gamma: float, lambda_j: float, grid: WeightedGrid, *, allow_positive: bool = False
) -> ConeModeOperator:
    """Tridiagonal mode matrix; ``allow_positive`` admits ``lambda_j > 0`` for stress tests."""
    if n < 1:
        raise InvalidParameterError("cross-section dimension must be >= 1")
    if lambda_j > 0 and not allow_positive:
        raise InvalidParameterError("mode eigenvalue must be <= 0")
    if grid.n != n or grid.gamma != gamma:
        raise InvalidParameterError("grid carries a different (n, gamma)")
    if math.exp(min(2.0 * grid.R, 700.0)) > MAX_TIP_GROWTH:
        raise TruncationError(f"exp(2R) = exp({2 * grid.R:g}) exceeds {MAX_TIP_GROWTH:g}")
    r, h = grid.r, grid.h
    lower, diag, upper = mode_stencil(r, h, float(n), float(lambda_j))
    # divide by the measure weight exp(-(n+1) r), then conjugate by W
    beta = grid.weight_exponent
    growth = np.exp((n + 1) * r)
    diag = growth * diag
    upper = growth[:-1] * upper * math.exp(beta * h)
    lower = growth[1:] * lower * math.exp(-beta * h)
    if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(upper)) and np.all(np.isfinite(lower))):
        raise TruncationError("non-finite entries in the mode matrix")
    return ConeModeOperator(
        lower, diag, upper, None, n=n, gamma=float(gamma), lambda_j=float(lambda_j), grid=grid
    )


def mode_operators(spectrum: CrossSectionSpectrum, grid: WeightedGrid) -> list[ConeModeOperator]:
    """One operator per cross-section eigenvalue on a shared grid."""
    return [assemble_mode_operator(grid.n, grid.gamma, lam, grid) for lam in spectrum.eigs]


@dataclass
class Dilation:
    """``u(t) -> rho^((n+1)/p) u(rho t)`` on the log grid (a shift by ``k`` nodes)."""

    rho: float
    k: int
    grid: WeightedGrid = field(repr=False)

    def __call__(self, u):
        u = np.asarray(u)
        out = np.zeros_like(u)
        k, n = self.k, u.shape[0]
        if k >= 0:
            out[k:] = u[: n - k] if k < n else 0
        else:
            out[: n + k] = u[-k:]
        return self.rho ** ((self.grid.n + 1) / self.grid.p) * out

    def defect(self, u) -> float:
        """Mass ``||u||^p - ||kappa u||^p`` that falls off the truncated grid."""
        p = self.grid.p
        return discrete_norm(u, self.grid) ** p - discrete_norm(self(u), self.grid) ** p

    def matrix(self):
        return self(np.eye(self.grid.N))


def dilation_operator(rho: float, grid: WeightedGrid) -> Dilation:
    if rho <= 0:
        raise InvalidParameterError("dilation factor must be positive")
    if abs(grid.gamma - grid.isometry_gamma) > 1e-12:
        raise InvalidParameterError("dilations are isometric only at gamma = (n+1)(1/2 - 1/p)")
    kf = math.log(rho) / grid.h
    k = int(round(kf))
    if abs(kf - k) > 1e-9:
        raise InvalidParameterError(f"rho = {rho!r} is not exp(k h) for an integer k")
    return Dilation(float(rho), k, grid)


def mellin_transform_samples(u, z, grid: WeightedGrid):
    """Trapezoid rule for ``int t^z u(t) dt/t = int exp(-z r) u(exp(-r)) dr``.

    ``u`` holds either the ``N`` interior values (end values taken as 0) or
    ``N + 2`` values including ``r = 0`` and ``r = R``.
    """
    u = np.asarray(u, dtype=complex)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if u.shape[0] == grid.N:
        u = np.concatenate([[0.0], u, [0.0]])
    elif u.shape[0] != grid.N + 2:
        raise InvalidParameterError("vector must have N or N + 2 entries")
    r = grid.h * np.arange(grid.N + 2)
    w = np.full(r.size, grid.h)
    w[0] = w[-1] = grid.h / 2
    return np.exp(-np.outer(z, r)) @ (w * u)
