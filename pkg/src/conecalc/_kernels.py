"""Hot numeric kernels.

Every kernel exists twice: a loop-style ``*_nb`` version compiled with
numba and a vectorised ``*_np`` version in plain numpy. The public name
points at the numba variant unless ``CONECALC_DISABLE_JIT`` is set; both
variants are importable so tests and benchmarks can compare them.
"""

import numpy as np

from ._jit import JIT_ENABLED, njit

# ---------------------------------------------------------------- summation


def pairwise_sum_np(x):
    """Tree reduction over axis 0 in a fixed order."""
    a = np.asarray(x)
    if a.shape[0] == 0:
        return np.zeros(a.shape[1:], dtype=a.dtype)
    while a.shape[0] > 1:
        m = a.shape[0] // 2
        head = a[0 : 2 * m : 2] + a[1 : 2 * m : 2]
        a = np.concatenate([head, a[2 * m :]]) if a.shape[0] % 2 else head
    return a[0]


@njit(cache=True)
def _pairwise_sum_2d(a):
    k, m = a.shape
    buf = a.copy()
    while k > 1:
        half = k // 2
        for i in range(half):
            for j in range(m):
                buf[i, j] = buf[2 * i, j] + buf[2 * i + 1, j]
        if k % 2:
            for j in range(m):
                buf[half, j] = buf[k - 1, j]
            k = half + 1
        else:
            k = half
    out = np.empty(m, dtype=a.dtype)
    for j in range(m):
        out[j] = buf[0, j]
    return out


def pairwise_sum_nb(x):
    a = np.asarray(x)
    if a.dtype.kind not in "fc":
        a = a.astype(float)
    tail = a.shape[1:]
    if a.shape[0] == 0:
        return np.zeros(tail, dtype=a.dtype)
    flat = np.ascontiguousarray(a.reshape(a.shape[0], -1))
    out = _pairwise_sum_2d(flat)
    return out.reshape(tail) if tail else out[0]


# --------------------------------------------------------- Hardy kernel matrix


def hardy_conjugated_np(r, eps, h):
    """Triangular kernel matrix ``h*exp(-eps (r_j - r_i))`` for ``r_j >= r_i``, else 0.

    With ``r = -log t`` the support ``r_j >= r_i`` is ``s_j <= t_i``.
    """
    diff = r[None, :] - r[:, None]
    return np.where(diff >= 0, h * np.exp(-eps * np.maximum(diff, 0.0)), 0.0)


@njit(cache=True)
def hardy_conjugated_nb(r, eps, h):
    n = r.size
    g = np.zeros((n, n))
    for i in range(n):
        g[i, i] = h
        for j in range(i + 1, n):
            diff = r[j] - r[i]
            if diff >= 0:
                g[i, j] = h * np.exp(-eps * diff)
    return g


# ------------------------------------------------------------ l_p ratio search


def lp_ratios_np(g, xs, p):
    """``||G x||_p / ||x||_p`` for every column ``x`` of ``xs``."""
    y = g @ xs
    num = np.sum(np.abs(y) ** p, axis=0) ** (1.0 / p)
    den = np.sum(np.abs(xs) ** p, axis=0) ** (1.0 / p)
    return num / den


@njit(cache=True)
def lp_ratios_nb(g, xs, p):
    # the product goes through BLAS; only the power sums are looped
    y = np.ascontiguousarray(g) @ np.ascontiguousarray(xs)
    n, m = xs.shape
    num = np.zeros(m)
    den = np.zeros(m)
    for i in range(y.shape[0]):
        for c in range(m):
            num[c] += abs(y[i, c]) ** p
    for j in range(n):
        for c in range(m):
            den[c] += abs(xs[j, c]) ** p
    return (num / den) ** (1.0 / p)


# -------------------------------------------------- exponential midpoint march


def expmid_march_np(e_full, e_half, forcing, dt):
    """``u_{k+1} = E u_k + dt*E_half f_k`` from ``u_0 = 0``; rows of the result are time levels."""
    k, n = forcing.shape
    u = np.zeros((k + 1, n), dtype=np.result_type(e_full, forcing, float))
    for step in range(k):
        u[step + 1] = e_full @ u[step] + dt * (e_half @ forcing[step])
    return u


@njit(cache=True)
def _expmid_march(e_full, e_half, forcing, dt):
    k, n = forcing.shape
    u = np.zeros((k + 1, n))
    for step in range(k):
        u[step + 1] = e_full @ u[step] + dt * (e_half @ forcing[step])
    return u


def expmid_march_nb(e_full, e_half, forcing, dt):
    if np.iscomplexobj(e_full) or np.iscomplexobj(e_half) or np.iscomplexobj(forcing):
        return expmid_march_np(e_full, e_half, forcing, dt)
    return _expmid_march(
        np.ascontiguousarray(e_full, dtype=float),
        np.ascontiguousarray(e_half, dtype=float),
        np.ascontiguousarray(forcing, dtype=float),
        float(dt),
    )


# ------------------------------------------------------------- mode stencil


def mode_stencil_np(r, h, n_dim, lam_j):
    """Conservative three-point stencil of ``-d/dr (a d/dr) - lam_j a`` with ``a = exp(-(n-1) r)``.

    Returns (lower, diag, upper) diagonals, not yet divided by the weight.
    """
    k = n_dim - 1.0
    a_minus = np.exp(-k * (r - 0.5 * h))
    a_plus = np.exp(-k * (r + 0.5 * h))
    diag = (a_minus + a_plus) / h**2 - lam_j * np.exp(-k * r)
    lower = -a_minus[1:] / h**2
    upper = -a_plus[:-1] / h**2
    return lower, diag, upper


@njit(cache=True)
def mode_stencil_nb(r, h, n_dim, lam_j):
    n = r.size
    k = n_dim - 1.0
    diag = np.empty(n)
    lower = np.empty(max(n - 1, 0))
    upper = np.empty(max(n - 1, 0))
    for i in range(n):
        a_minus = np.exp(-k * (r[i] - 0.5 * h))
        a_plus = np.exp(-k * (r[i] + 0.5 * h))
        diag[i] = (a_minus + a_plus) / (h * h) - lam_j * np.exp(-k * r[i])
        if i > 0:
            lower[i - 1] = -a_minus / (h * h)
        if i < n - 1:
            upper[i] = -a_plus / (h * h)
    return lower, diag, upper


if JIT_ENABLED:
    pairwise_sum = pairwise_sum_nb
    hardy_conjugated = hardy_conjugated_nb
    lp_ratios = lp_ratios_nb
    expmid_march = expmid_march_nb
    mode_stencil = mode_stencil_nb
else:
    pairwise_sum = pairwise_sum_np
    hardy_conjugated = hardy_conjugated_np
    lp_ratios = lp_ratios_np
    expmid_march = expmid_march_np
    mode_stencil = mode_stencil_np
