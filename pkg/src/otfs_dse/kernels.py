"""Hot numeric kernels: DSE tap matrices, the continuous-time sampling oracle
and the periodic-sinc (Dirichlet) kernel.

Each kernel has a numba implementation and a vectorized numpy one with the
same signature. The numba path is used when numba imports and the
environment variable ``OTFS_DSE_NUMBA`` is not ``"0"``; every public wrapper
also takes ``backend="numba" | "numpy"`` to force one path.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("OTFS_DSE_NUMBA", "1") != "0"

# below this |sin(pi x / M)| the kernel switches to its analytic limit
DIRICHLET_EPS = 1e-9

TWO_PI = 2.0 * math.pi


def default_backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def _resolve(backend):
    backend = backend or default_backend()
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend


def _njit(fn):
    if numba is None:
        return fn
    return numba.njit(cache=True)(fn)


# ---------------------------------------------------------------------------
# numpy reference path


def dirichlet_np(x, M):
    """sin(pi x) / (M sin(pi x / M)), elementwise, finite at x in M*Z."""
    x = np.asarray(x, dtype=np.float64)
    den = np.sin(np.pi * x / M)
    small = np.abs(den) < DIRICHLET_EPS
    safe = np.where(small, 1.0, den)
    regular = np.sin(np.pi * x) / (M * safe)
    limit = np.cos(np.pi * x) / np.cos(np.pi * x / M)
    return np.where(small, limit, regular)


def _dse_columns_np(ls, ks, betas, n, cols, M, M_CP, N, squint, inv_p_per_k):
    L = M + M_CP
    l = np.arange(M)
    t = n * L + l
    out = np.zeros((M, cols.size), dtype=np.complex128)
    for li, ki, bi in zip(ls, ks, betas):
        gain = bi * np.exp(1j * TWO_PI * t / M * ki / N * (1.0 + squint))
        frac = t * (ki * inv_p_per_k)
        y = l[:, None] - cols[None, :] - li
        kernel = np.exp(1j * np.pi * (M - 1) / M * np.mod(y, 2 * M)) * dirichlet_np(
            y + frac[:, None], M
        )
        out += gain[:, None] * kernel
    return out


def waveform_np(X, u_int, u_frac, M, M_CP):
    """Baseband CP-OFDM waveform at sample-unit times ``u_int + u_frac``.

    ``X`` is the (num_symbols, M) time-frequency grid; time zero is the start
    of symbol 0's useful part, so symbol n occupies [n L - M_CP, (n+1) L - M_CP)
    with L = M + M_CP. Outside the frame the waveform is zero.
    """
    L = M + M_CP
    u_int = np.asarray(u_int, dtype=np.int64)
    u_frac = np.asarray(u_frac, dtype=np.float64)
    sym = np.floor((u_int + M_CP + u_frac) / L).astype(np.int64)
    valid = (sym >= 0) & (sym < X.shape[0])
    local = (u_int - sym * L) + u_frac
    m = np.arange(M)
    rows = X[np.clip(sym, 0, X.shape[0] - 1)]
    phase = np.exp(1j * TWO_PI * local[..., None] * m / M)
    vals = np.sum(rows * phase, axis=-1) / math.sqrt(M)
    return np.where(valid, vals, 0.0)


def _oracle_rows_np(X, rows, ls, ks, betas, M, M_CP, N, inv_p_per_k):
    L = M + M_CP
    out = np.zeros((rows.size, M), dtype=np.complex128)
    l = np.arange(M)
    for r, n in enumerate(rows):
        t = n * L + l
        for li, ki, bi in zip(ls, ks, betas):
            s = waveform_np(X, t - li, t * (ki * inv_p_per_k), M, M_CP)
            out[r] += bi * np.exp(1j * TWO_PI * ki * t / (N * M)) * s
    return out


# ---------------------------------------------------------------------------
# numba path


@_njit
def dirichlet_scalar(x, M):
    den = math.sin(math.pi * x / M)
    if abs(den) < DIRICHLET_EPS:
        return math.cos(math.pi * x) / math.cos(math.pi * x / M)
    return math.sin(math.pi * x) / (M * den)


@_njit
def _dse_columns_nb(ls, ks, betas, n, cols, M, M_CP, N, squint, inv_p_per_k):
    L = M + M_CP
    out = np.zeros((M, cols.size), dtype=np.complex128)
    half = math.pi * (M - 1) / M
    for i in range(ls.size):
        li = ls[i]
        ki = ks[i]
        inv_p = ki * inv_p_per_k
        for l in range(M):
            t = n * L + l
            ph = TWO_PI * t / M * ki / N * (1.0 + squint)
            gain = betas[i] * complex(math.cos(ph), math.sin(ph))
            frac = t * inv_p
            for c in range(cols.size):
                y = l - cols[c] - li
                yr = y % (2 * M)
                d = dirichlet_scalar(y + frac, M)
                out[l, c] += gain * complex(math.cos(half * yr), math.sin(half * yr)) * d
    return out


@_njit
def _waveform_nb(X, u_int, u_frac, M, M_CP):
    L = M + M_CP
    sym = int(math.floor((u_int + M_CP + u_frac) / L))
    if sym < 0 or sym >= X.shape[0]:
        return 0j
    local = (u_int - sym * L) + u_frac
    acc = 0j
    w = TWO_PI * local / M
    for m in range(M):
        acc += X[sym, m] * complex(math.cos(w * m), math.sin(w * m))
    return acc / math.sqrt(M)


@_njit
def _oracle_rows_nb(X, rows, ls, ks, betas, M, M_CP, N, inv_p_per_k):
    L = M + M_CP
    out = np.zeros((rows.size, M), dtype=np.complex128)
    for r in range(rows.size):
        n = rows[r]
        for l in range(M):
            t = n * L + l
            acc = 0j
            for i in range(ls.size):
                s = _waveform_nb(X, t - ls[i], t * (ks[i] * inv_p_per_k), M, M_CP)
                ph = TWO_PI * ks[i] * t / (N * M)
                acc += betas[i] * complex(math.cos(ph), math.sin(ph)) * s
            out[r, l] = acc
    return out


# ---------------------------------------------------------------------------
# public wrappers


def _path_arrays(ls, ks, betas):
    return (
        np.ascontiguousarray(ls, dtype=np.int64),
        np.ascontiguousarray(ks, dtype=np.float64),
        np.ascontiguousarray(betas, dtype=np.complex128),
    )


def dse_columns(ls, ks, betas, n, cols, M, M_CP, N, squint, inv_p_per_k, backend=None):
    """Selected columns of the exact DSE channel matrix of OFDM symbol ``n``.

    Returns the (M, len(cols)) block of sum_i h_n^i[l, l'] for l' in ``cols``.
    """
    ls, ks, betas = _path_arrays(ls, ks, betas)
    cols = np.ascontiguousarray(cols, dtype=np.int64)
    args = (ls, ks, betas, int(n), cols, int(M), int(M_CP), int(N),
            float(squint), float(inv_p_per_k))
    if _resolve(backend) == "numba":
        return _dse_columns_nb(*args)
    return _dse_columns_np(*args)


def oracle_rows(X, rows, ls, ks, betas, M, M_CP, N, inv_p_per_k, backend=None):
    """Received samples R[n, l] for n in ``rows`` by sampling the continuous
    multipath output r(t) = sum_i beta_i e^{j 2 pi nu_i t} s(t - tau_i + t/p_i)."""
    ls, ks, betas = _path_arrays(ls, ks, betas)
    X = np.ascontiguousarray(X, dtype=np.complex128)
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    args = (X, rows, ls, ks, betas, int(M), int(M_CP), int(N), float(inv_p_per_k))
    if _resolve(backend) == "numba":
        return _oracle_rows_nb(*args)
    return _oracle_rows_np(*args)


def dirichlet(x, M, backend=None):
    if _resolve(backend) == "numba":
        x = np.asarray(x, dtype=np.float64)
        return np.vectorize(lambda v: dirichlet_scalar(v, M), otypes=[np.float64])(x)
    return dirichlet_np(x, M)
