"""Checkable ellipticity conditions for cone Laplacians.

Covers the conormal quadratic of each cross-section mode, the admissible
weight window, the strip condition on the conormal roots, the pointwise
symbol-spectrum condition and a numerical test for the model-cone spectrum.
The boundary-symbol condition is not checked; reports carry it as an
assumption.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .cone_laplacian import ConeModeOperator, CrossSectionSpectrum
from .errors import ConecalcError, InvalidParameterError
from .operators import spectrum_in_sector
from .sectors import Sector

STRIP_TOL = 1e-12
E4_SHRINK_LIMIT = 0.5


@dataclass(frozen=True)
class ConormalQuadratic:
    """``z -> -z^2 + (n - 1) z - lambda_j``."""

    n: int
    lambda_j: float

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParameterError("cross-section dimension must be >= 1")
        if self.lambda_j > 0:
            raise InvalidParameterError("mode eigenvalue must be <= 0")

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return -(z**2) + (self.n - 1) * z - self.lambda_j

    @property
    def discriminant_root(self) -> float:
        """``sqrt(((n - 1)/2)^2 - lambda_j)``, half the root gap."""
        return math.sqrt(((self.n - 1) / 2.0) ** 2 - self.lambda_j)


def conormal_roots(q: ConormalQuadratic) -> tuple[complex, complex]:
    """Roots ``q^- <= q^+``; both real since ``lambda_j <= 0``."""
    big = (q.n - 1) / 2.0 + q.discriminant_root
    # product of the roots is lambda_j; avoids cancellation in the small root
    small = q.lambda_j / big if big != 0 else 0.0
    return complex(small), complex(big)


@dataclass(frozen=True)
class WeightWindow:
    admissible: bool
    s0: float
    lower: float | None = None
    upper: float | None = None
    rule_consistent: bool = True

    def contains(self, gamma: float) -> bool:
        return self.admissible and self.lower < gamma < self.upper

    def to_dict(self):
        return {
            "admissible": self.admissible,
            "s0": self.s0,
            "lower": self.lower,
            "upper": self.upper,
            "rule_consistent": self.rule_consistent,
        }


def weight_window(n: int, lambda_0: float) -> WeightWindow:
    """Weights ``1 - s0 < gamma < s0 - 1`` allowed when ``s0 > 1``.

    Cross-check: Dirichlet cross-sections (``lambda_0 < 0``) are admissible
    for every ``n >= 3``, Neumann ones (``lambda_0 = 0``) exactly when ``n > 3``.
    """
    s0 = ConormalQuadratic(n, lambda_0).discriminant_root
    # s0 > 1 tested as s0^2 - 1 > 0: s0 itself rounds to 1 for tiny lambda_0
    gap = ((n - 1) / 2.0) ** 2 - 1.0 - lambda_0
    admissible = gap > 0
    if lambda_0 == 0:
        expected = n > 3
        consistent = admissible == expected
    elif n >= 3:
        consistent = admissible
    else:
        consistent = True
    if not consistent:
        raise ConecalcError(f"window verdict for n={n}, lambda_0={lambda_0} contradicts the n >= 3 rule")
    if admissible:
        half = gap / (s0 + 1.0)  # s0 - 1 without cancellation
        return WeightWindow(True, s0, -half, half, consistent)
    return WeightWindow(False, s0, None, None, consistent)


@dataclass
class StripCheck:
    clear: bool
    offending: tuple | None
    mode: str
    interval: tuple

    def __bool__(self):
        return self.clear


def check_strip_clear(
    spectrum: CrossSectionSpectrum | list,
    n: int,
    gamma: float,
    mu: int = 2,
    strip: str = "closed_strip",
) -> StripCheck:
    """No conormal root on ``Re z = (n+1)/2 - gamma - mu`` (``line``) or in
    ``[(n+1)/2 - gamma - mu, (n+1)/2 - gamma]`` (``closed_strip``).

    ``offending`` is ``(j, root)`` for the smallest violating ``j``.
    """
    eigs = spectrum.eigs if isinstance(spectrum, CrossSectionSpectrum) else tuple(spectrum)
    top = (n + 1) / 2.0 - gamma
    bottom = top - mu
    if strip == "line":
        interval = (bottom, bottom)
    elif strip == "closed_strip":
        interval = (bottom, top)
    else:
        raise InvalidParameterError(f"strip mode must be 'line' or 'closed_strip', got {strip!r}")
    for j, lam in enumerate(eigs):
        for root in conormal_roots(ConormalQuadratic(n, lam)):
            x = root.real
            if strip == "line":
                hit = abs(x - bottom) <= STRIP_TOL
            else:
                hit = bottom - STRIP_TOL <= x <= top + STRIP_TOL
            if hit:
                return StripCheck(False, (j, root), strip, interval)
    return StripCheck(True, None, strip, interval)


def check_E1_symbol(symbol, sector: Sector, samples) -> tuple[bool, list]:
    """Every sampled symbol matrix has its eigenvalues outside the sector.

    ``symbol`` is a callable or a mapping from sample point to a square
    matrix (a scalar is a 1x1 matrix). Homogeneity means unit-shell samples
    suffice; choosing them is up to the caller.
    """
    get = symbol.__getitem__ if hasattr(symbol, "__getitem__") and not callable(symbol) else symbol
    violations = []
    for x in samples:
        m = np.atleast_2d(np.asarray(get(x), dtype=complex))
        if m.shape[0] != m.shape[1] or not np.all(np.isfinite(m)):
            raise ConecalcError(f"symbol at {x!r} is not a finite square matrix")
        try:
            ev = np.linalg.eigvals(m)
        except np.linalg.LinAlgError as exc:
            raise ConecalcError(f"eigensolver failed at {x!r}: {exc}") from exc
        inside = np.asarray(sector.contains(ev), dtype=bool)
        violations += [{"sample": x, "eigenvalue": complex(z)} for z in ev[inside]]
    return not violations, violations


def _level_key(op: ConeModeOperator):
    g = op.grid
    return (g.N, g.R)


def check_E4_numeric(modes: list, sector: Sector) -> tuple[bool, dict]:
    """No discrete eigenvalue in the sector minus the origin on any level,
    and the angular clearance to the boundary shrinks by at most half from
    one refinement level to the next.
    """
    report = {"condition": "E4", "verdict": True, "violations": [], "parameters": {"theta": sector.theta}}
    if not modes:
        report["parameters"]["levels"] = []
        return True, report
    levels = defaultdict(list)
    for op in modes:
        levels[_level_key(op)].append(op)
    if len(levels) < 2:
        raise InvalidParameterError("numerical E4 needs modes on at least two refinement levels")
    clearance = []
    for key in sorted(levels):
        dist = math.inf
        for op in levels[key]:
            ok, offenders = spectrum_in_sector(op, sector, exclude_origin=True)
            if not ok:
                report["violations"].append(
                    {"level": list(key), "lambda_j": op.lambda_j, "eigenvalues": [[z.real, z.imag] for z in offenders[:5]]}
                )
            ev = op.eigenvalues()
            ev = ev[np.abs(ev) > 0]
            if ev.size:
                dist = min(dist, float(np.min(sector.angular_distance(ev))))
        clearance.append(dist)
    keys = sorted(levels)
    for k, (d0, d1) in enumerate(zip(clearance, clearance[1:])):
        if d1 < (1.0 - E4_SHRINK_LIMIT) * d0:
            report["violations"].append({"level": list(keys[k + 1]), "clearance_shrink": [d0, d1]})
    report["parameters"]["levels"] = [list(k) for k in sorted(levels)]
    report["parameters"]["clearance"] = clearance
    report["verdict"] = not report["violations"]
    return report["verdict"], report


def e2_assumption() -> dict:
    """The boundary-symbol condition is assumed, never verified."""
    return {
        "condition": "E2",
        "verdict": "assumed",
        "violations": [],
        "parameters": {"checked": False},
    }


def window_report(n: int, lambda_0: float) -> dict:
    w = weight_window(n, lambda_0)
    return {
        "condition": "weight_window",
        "verdict": w.admissible,
        "violations": [] if w.admissible else [{"s0": w.s0}],
        "parameters": {"n": n, "lambda_0": lambda_0, **w.to_dict()},
    }


def strip_report(spectrum, n: int, gamma: float, mu: int = 2, strip: str = "closed_strip") -> dict:
    res = check_strip_clear(spectrum, n, gamma, mu, strip)
    viol = []
    if res.offending is not None:
        j, root = res.offending
        viol.append({"j": j, "root": root.real})
    return {
        "condition": "E3" if strip == "line" else "E3_strip",
        "verdict": res.clear,
        "violations": viol,
        "parameters": {"n": n, "gamma": gamma, "mu": mu, "strip": strip, "interval": list(res.interval)},
    }
