"""Transmitter side: QPSK mapping, pilot comb, delay-Doppler to time-domain
mapping, (I)SFFT and the continuous CP-OFDM waveform."""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .config import FrameConfig


def qpsk_map(bits, sigma_s2: float = 1.0, shape=None) -> np.ndarray:
    """Gray-mapped QPSK with average power ``sigma_s2``.

    Bit pair (b0, b1) maps to ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2), so 00
    lands on the first quadrant. ``shape`` (e.g. ``(N, M)``) checks the bit
    count against a full grid and reshapes the result.
    """
    bits = np.asarray(bits, dtype=np.int8).ravel()
    if bits.size % 2:
        raise ValueError(f"odd number of bits ({bits.size})")
    if shape is not None and bits.size != 2 * math.prod(shape):
        raise ValueError(f"expected {2 * math.prod(shape)} bits for grid {shape}, got {bits.size}")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0 or 1")
    b = bits.reshape(-1, 2)
    sym = ((1 - 2 * b[:, 0]) + 1j * (1 - 2 * b[:, 1])) * math.sqrt(sigma_s2 / 2.0)
    return sym.reshape(shape) if shape is not None else sym


def qpsk_demap(symbols) -> np.ndarray:
    """Hard-decision demapping; a component at exactly zero decides bit 0."""
    s = np.asarray(symbols).ravel()
    out = np.empty((s.size, 2), dtype=np.int8)
    out[:, 0] = s.real < 0
    out[:, 1] = s.imag < 0
    return out.ravel()


def build_pilot_rows(cfg: FrameConfig) -> np.ndarray:
    """The two identical pilot symbols in the sampled time domain, shape (2, M)."""
    rows = np.zeros((2, cfg.M), dtype=np.complex128)
    rows[:, :: cfg.l_max + 1][:, : cfg.M_p] = cfg.x_p
    return rows


def _check_grid(x, cfg: FrameConfig | None, what: str):
    x = np.asarray(x)
    if x.ndim != 2:
        raise ValueError(f"{what} must be 2-D, got shape {x.shape}")
    if cfg is not None and x.shape != (cfg.N, cfg.M):
        raise ValueError(f"{what} has shape {x.shape}, expected {(cfg.N, cfg.M)}")
    return x


def map_data_rows(x_d, cfg: FrameConfig | None = None) -> np.ndarray:
    """Delay-Doppler grid x_d[k, l] (N x M) to time-domain data rows S[n+2, l].

    An orthonormal N-point inverse DFT along the Doppler axis.
    """
    x_d = _check_grid(x_d, cfg, "x_d")
    return np.fft.ifft(x_d, axis=0, norm="ortho")


def isfft(x_d, cfg: FrameConfig | None = None) -> np.ndarray:
    """X_d[n, m] = 1/sqrt(NM) sum_k sum_l x_d[k, l] e^{j 2 pi (nk/N - ml/M)}."""
    x_d = _check_grid(x_d, cfg, "x_d")
    return np.fft.fft(np.fft.ifft(x_d, axis=0, norm="ortho"), axis=1, norm="ortho")


def sfft(X_d, cfg: FrameConfig | None = None) -> np.ndarray:
    X_d = _check_grid(X_d, cfg, "X_d")
    return np.fft.fft(np.fft.ifft(X_d, axis=1, norm="ortho"), axis=0, norm="ortho")


def samples_to_tf(S) -> np.ndarray:
    """Per-symbol forward DFT: the X[n, m] whose Eq.-2 samples are S[n, l]."""
    return np.fft.fft(S, axis=-1, norm="ortho")


def tf_to_samples(X) -> np.ndarray:
    return np.fft.ifft(X, axis=-1, norm="ortho")


def build_frame(x_d, cfg: FrameConfig) -> np.ndarray:
    """Full (N+2) x M sampled transmit frame: pilot rows then data rows."""
    S = np.empty((cfg.num_symbols, cfg.M), dtype=np.complex128)
    S[:2] = build_pilot_rows(cfg)
    S[2:] = map_data_rows(x_d, cfg)
    return S


def random_frame(cfg: FrameConfig, rng: np.random.Generator):
    """Random QPSK payload; returns (bits, x_d, S)."""
    bits = rng.integers(0, 2, size=2 * cfg.N * cfg.M, dtype=np.int8)
    x_d = qpsk_map(bits, cfg.sigma_s2, shape=(cfg.N, cfg.M))
    return bits, x_d, build_frame(x_d, cfg)


def sample_waveform(X, cfg: FrameConfig, u) -> np.ndarray:
    """s(t) at times given in units of the sample period T/M (frame origin at
    the start of symbol 0's useful part)."""
    u = np.asarray(u, dtype=np.float64)
    u_int = np.floor(u)
    return kernels.waveform_np(np.asarray(X, dtype=np.complex128), u_int, u - u_int,
                               cfg.M, cfg.M_CP)


def eval_waveform(X, cfg: FrameConfig, t):
    """Continuous transmit waveform s(t), t in seconds.

    Rectangular pulses of length T_u on half-open supports
    [n T_u - T_CP, (n+1) T_u - T_CP); zero outside the frame.
    """
    out = sample_waveform(X, cfg, np.asarray(t, dtype=np.float64) / cfg.sample_period)
    return out if out.ndim else complex(out)
