"""Per-symbol LMMSE equalization and delay-Doppler demodulation."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .config import FrameConfig
from .errors import SingularSystem
from .estimator import EstimatedCSI, reconstruct
from .modem import qpsk_demap


def lmmse_equalize(H_hat, r, sigma_n2: float, sigma_s2: float) -> np.ndarray:
    """(H^H H + (sigma_n2/sigma_s2) I)^{-1} H^H r via a Cholesky solve."""
    if sigma_s2 <= 0:
        raise ValueError("sigma_s2 must be positive")
    rho = sigma_n2 / sigma_s2
    if rho < 0:
        raise ValueError("noise variance must be non-negative")
    H_hat = np.asarray(H_hat, dtype=np.complex128)
    A = H_hat.conj().T @ H_hat
    A[np.diag_indices_from(A)] += rho
    b = H_hat.conj().T @ np.asarray(r, dtype=np.complex128)
    try:
        factor = scipy.linalg.cho_factor(A, lower=False, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"normal matrix is not positive definite (rho={rho})") from exc
    # cho_factor succeeds on numerically singular matrices with a tiny pivot
    if rho == 0 and np.min(np.abs(np.diag(factor[0]))) ** 2 < 1e-12 * np.max(np.abs(np.diag(A))):
        raise SingularSystem("channel matrix is rank deficient and sigma_n2 == 0")
    return scipy.linalg.cho_solve(factor, b, check_finite=False)


def dd_demod(S_hat) -> np.ndarray:
    """Equalized data rows (N x M, symbols 2..N+1) to the delay-Doppler grid."""
    S_hat = np.asarray(S_hat)
    if S_hat.ndim != 2:
        raise ValueError(f"expected an N x M array, got shape {S_hat.shape}")
    return np.fft.fft(S_hat, axis=0, norm="ortho")


def equalize_frame(R, csi: EstimatedCSI, cfg: FrameConfig, backend=None) -> np.ndarray:
    """Equalized time-domain data rows, shape (N, M)."""
    out = np.empty((cfg.N, cfg.M), dtype=np.complex128)
    for n in range(2, cfg.num_symbols):
        H = reconstruct(csi, cfg, n, backend=backend)
        out[n - 2] = lmmse_equalize(H, R[n], cfg.sigma_n2, cfg.sigma_s2)
    return out


def detect_frame(R, csi: EstimatedCSI, cfg: FrameConfig, return_grid: bool = False,
                 backend=None):
    """Equalize, demodulate and hard-demap a received frame to 2NM bits."""
    x_hat = dd_demod(equalize_frame(R, csi, cfg, backend=backend))
    bits = qpsk_demap(x_hat)
    return (bits, x_hat) if return_grid else bits
