"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Set ``IRISCD_DISABLE_NUMBA=1`` to force the numpy implementations. numba is
used when importable and not disabled. Both implementations are always
available in ``IMPLEMENTATIONS`` for benchmarking and cross-checking.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAS_NUMBA = False

_DISABLE = os.environ.get("IRISCD_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")
USE_NUMBA = HAS_NUMBA and not _DISABLE

# Pade(13) coefficients and the scaling threshold theta_13 (Higham 2005).
PADE13 = np.array(
    [
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0, 129060195264000.0, 10559470521600.0,
        670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
        960960.0, 16380.0, 182.0, 1.0,
    ]
)
THETA13 = 5.371920351148152


# ---------------------------------------------------------------- numpy path


def _stratified_counts_np(x, y, strata, kx, ky, n_strata):
    flat = (strata * kx + x) * ky + y
    counts = np.bincount(flat, minlength=n_strata * kx * ky)
    return counts.reshape(n_strata, kx, ky)


def _g_statistic_np(counts):
    counts = counts.astype(np.float64)
    n_s = counts.sum(axis=(1, 2))
    nonempty = n_s > 0
    c = counts[nonempty]
    n = n_s[nonempty]
    if c.shape[0] == 0:
        return 0.0, 0, 0
    row = c.sum(axis=2, keepdims=True)
    col = c.sum(axis=1, keepdims=True)
    expected = row * col / n[:, None, None]
    pos = c > 0
    g = 2.0 * float(np.sum(c[pos] * np.log(c[pos] / expected[pos])))
    return max(g, 0.0), int(c.shape[0]), int(n.min())


def _family_loglik_np(child, config, k_child, n_configs):
    counts = np.bincount(config * k_child + child, minlength=n_configs * k_child)
    counts = counts.reshape(n_configs, k_child).astype(np.float64)
    n_j = counts.sum(axis=1, keepdims=True)
    pos = counts > 0
    ratio = np.divide(counts, n_j, out=np.ones_like(counts), where=n_j > 0)
    return float(np.sum(counts[pos] * np.log(ratio[pos])))


def _pade13_uv(A):
    b = PADE13
    n = A.shape[0]
    ident = np.eye(n)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident
    return U, V


def _expm_np(A):
    A = np.asarray(A, dtype=np.float64)
    norm1 = np.abs(A).sum(axis=0).max() if A.size else 0.0
    s = 0
    if norm1 > THETA13:
        s = int(math.ceil(math.log2(norm1 / THETA13)))
    As = A / (2.0**s)
    U, V = _pade13_uv(As)
    R = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        R = R @ R
    return R


# ---------------------------------------------------------------- numba path


def _stratified_counts_loop(x, y, strata, kx, ky, n_strata):
    counts = np.zeros((n_strata, kx, ky), dtype=np.int64)
    for r in range(x.shape[0]):
        counts[strata[r], x[r], y[r]] += 1
    return counts


def _g_statistic_loop(counts):
    n_strata, kx, ky = counts.shape
    g = 0.0
    used = 0
    min_n = -1
    row = np.zeros(kx)
    col = np.zeros(ky)
    for s in range(n_strata):
        n = 0.0
        for i in range(kx):
            row[i] = 0.0
        for j in range(ky):
            col[j] = 0.0
        for i in range(kx):
            for j in range(ky):
                c = counts[s, i, j]
                row[i] += c
                col[j] += c
                n += c
        if n == 0:
            continue
        used += 1
        if min_n < 0 or n < min_n:
            min_n = int(n)
        for i in range(kx):
            for j in range(ky):
                c = counts[s, i, j]
                if c > 0:
                    g += c * math.log(c * n / (row[i] * col[j]))
    if used == 0:
        return 0.0, 0, 0
    g *= 2.0
    if g < 0.0:
        g = 0.0
    return g, used, min_n


def _family_loglik_loop(child, config, k_child, n_configs):
    counts = np.zeros((n_configs, k_child), dtype=np.int64)
    for r in range(child.shape[0]):
        counts[config[r], child[r]] += 1
    ll = 0.0
    for j in range(n_configs):
        nj = 0
        for k in range(k_child):
            nj += counts[j, k]
        if nj == 0:
            continue
        for k in range(k_child):
            c = counts[j, k]
            if c > 0:
                ll += c * math.log(c / nj)
    return ll


def _expm_loop(A):
    n = A.shape[0]
    norm1 = 0.0
    for j in range(n):
        col = 0.0
        for i in range(n):
            col += abs(A[i, j])
        if col > norm1:
            norm1 = col
    s = 0
    if norm1 > THETA13:
        s = int(math.ceil(math.log2(norm1 / THETA13)))
    As = A / (2.0**s)
    b = PADE13
    ident = np.eye(n)
    A2 = As @ As
    A4 = A2 @ A2
    A6 = A4 @ A2
    inner_u = A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident
    U = As @ inner_u
    V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident
    R = np.ascontiguousarray(np.linalg.solve(V - U, V + U))
    for _ in range(s):
        R = R @ R
    return R


IMPLEMENTATIONS = {
    "numpy": {
        "stratified_counts": _stratified_counts_np,
        "g_statistic": _g_statistic_np,
        "family_loglik": _family_loglik_np,
        "expm": _expm_np,
    }
}

if HAS_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)
    IMPLEMENTATIONS["numba"] = {
        "stratified_counts": _jit(_stratified_counts_loop),
        "g_statistic": _jit(_g_statistic_loop),
        "family_loglik": _jit(_family_loglik_loop),
        "expm": _jit(_expm_loop),
    }

BACKEND = "numba" if USE_NUMBA else "numpy"
_active = IMPLEMENTATIONS[BACKEND]


def stratified_counts(x, y, strata, kx: int, ky: int, n_strata: int) -> np.ndarray:
    """Counts[s, i, j] of rows with stratum s, x == i and y == j."""
    return _active["stratified_counts"](
        np.ascontiguousarray(x, dtype=np.int64),
        np.ascontiguousarray(y, dtype=np.int64),
        np.ascontiguousarray(strata, dtype=np.int64),
        int(kx), int(ky), int(n_strata),
    )


def g_statistic(counts) -> tuple[float, int, int]:
    """Likelihood-ratio statistic summed over strata.

    Returns (G, number of non-empty strata, size of the smallest non-empty stratum).
    """
    g, used, min_n = _active["g_statistic"](np.ascontiguousarray(counts, dtype=np.int64))
    return float(g), int(used), int(min_n)


def family_loglik(child, config, k_child: int, n_configs: int) -> float:
    """Maximized multinomial log-likelihood of child codes given parent-configuration ids."""
    return float(
        _active["family_loglik"](
            np.ascontiguousarray(child, dtype=np.int64),
            np.ascontiguousarray(config, dtype=np.int64),
            int(k_child), int(n_configs),
        )
    )


def expm(A) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a degree-13 Pade approximant."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expm expects a square matrix")
    if A.shape[0] == 0:
        return A.copy()
    if not A.any():
        # the Pade ratio is off by an ulp here; exp(0) = I must be exact
        return np.eye(A.shape[0])
    return _active["expm"](A)
