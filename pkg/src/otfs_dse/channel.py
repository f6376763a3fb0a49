"""Multipath linear time-variant channel with Doppler squint.

Two interchangeable forms are provided: :func:`oracle_receive` samples the
continuous-time channel output directly, and :func:`build_matrix` assembles
the per-symbol closed-form tap matrices. With the CP rule satisfied they agree
to rounding error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .config import FrameConfig, k_of_nu, nu_max
from .modem import samples_to_tf

EXACT = "exact-dse"
IGNORANT = "dse-ignorant"
MODES = (EXACT, IGNORANT)


@dataclass(frozen=True)
class PathParams:
    """One propagation path: integer delay index, real normalized Doppler
    k = nu N T and complex gain beta (carrier phase already folded in)."""

    l: int
    k: float
    beta: complex

    def nu(self, cfg: FrameConfig) -> float:
        return self.k * cfg.delta_f / cfg.N

    def p(self, cfg: FrameConfig) -> float:
        """Mobility parameter f_c / nu; ``math.inf`` for a static path."""
        if self.k == 0:
            return math.inf
        return cfg.f_c * cfg.N / (self.k * cfg.delta_f)

    def tau(self, cfg: FrameConfig) -> float:
        return self.l / (cfg.M * cfg.delta_f)

    def velocity(self, cfg: FrameConfig) -> float:
        return self.nu(cfg) * 299792458.0 / cfg.f_c


@dataclass(frozen=True)
class ChannelRealization:
    paths: tuple

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        if not self.paths:
            raise ValueError("a channel needs at least one path")
        ls = [p.l for p in self.paths]
        if len(set(ls)) != len(ls):
            raise ValueError(f"delay indices must be distinct, got {ls}")

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    def arrays(self):
        return (
            np.array([p.l for p in self.paths], dtype=np.int64),
            np.array([p.k for p in self.paths], dtype=np.float64),
            np.array([p.beta for p in self.paths], dtype=np.complex128),
        )

    def single(self, i: int) -> ChannelRealization:
        return ChannelRealization((self.paths[i],))

    def to_text(self) -> str:
        return "".join(_path_line(p) for p in self.paths)

    @classmethod
    def from_text(cls, text: str) -> ChannelRealization:
        return cls(tuple(_parse_path_lines(text)))

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> ChannelRealization:
        return cls.from_text(Path(path).read_text())


def _path_line(p: PathParams) -> str:
    b = complex(p.beta)
    return f"{p.l} {float(p.k)!r} {b.real!r} {b.imag!r}\n"


def _parse_path_lines(text: str):
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 4:
            raise ValueError(f"line {lineno}: expected 'l k re im', got {line!r}")
        yield PathParams(int(fields[0]), float(fields[1]),
                         complex(float(fields[2]), float(fields[3])))


def jakes_draw(cfg: FrameConfig, v_max: float, n_paths: int,
               rng: np.random.Generator) -> ChannelRealization:
    """Random channel: Jakes Doppler nu_max cos(theta), beta ~ CN(0, 1/N_P),
    distinct delays drawn uniformly from 1..l_max. ``v_max`` in m/s.

    The draws are taken in a fixed order from ``rng`` and do not depend on M,
    so sweeps over subcarrier count or velocity share the underlying path set.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if n_paths > cfg.l_max:
        raise ValueError(f"n_paths={n_paths} exceeds l_max={cfg.l_max}: delays must be distinct")
    delays = rng.choice(np.arange(1, cfg.l_max + 1), size=n_paths, replace=False)
    theta = rng.uniform(-math.pi, math.pi, size=n_paths)
    g = rng.standard_normal((n_paths, 2))
    betas = (g[:, 0] + 1j * g[:, 1]) * math.sqrt(0.5 / n_paths)
    kmax_true = k_of_nu(cfg, nu_max(cfg, v_max))
    ks = kmax_true * np.cos(theta)
    return ChannelRealization(
        tuple(PathParams(int(l), float(k), complex(b)) for l, k, b in zip(delays, ks, betas))
    )


def oracle_receive(X, ch: ChannelRealization, cfg: FrameConfig, rows=None,
                   backend=None) -> np.ndarray:
    """Received samples R[n, l] = r(n T_u + l T/M) from the continuous channel.

    ``X`` is the (N+2) x M time-frequency grid (use
    :func:`otfs_dse.modem.samples_to_tf` on a sampled frame). ``rows``
    restricts the output to those OFDM symbols; the result always has one row
    per requested symbol.
    """
    X = np.asarray(X, dtype=np.complex128)
    rows = np.arange(X.shape[0]) if rows is None else np.atleast_1d(rows)
    ls, ks, betas = ch.arrays()
    return kernels.oracle_rows(X, rows, ls, ks, betas, cfg.M, cfg.M_CP, cfg.N,
                               cfg.inv_p_per_k, backend=backend)


def oracle_receive_frame(S, ch: ChannelRealization, cfg: FrameConfig, rows=None,
                         backend=None) -> np.ndarray:
    return oracle_receive(samples_to_tf(S), ch, cfg, rows=rows, backend=backend)


def dse_tap(path: PathParams, cfg: FrameConfig, n: int, l: int, lp: int) -> complex:
    """Single closed-form tap h_n^i[l, l'] of the exact DSE input-output relation."""
    t = n * cfg.symbol_len + l
    y = l - lp - path.l
    x = y + t * path.k * cfg.inv_p_per_k
    gain = path.beta * np.exp(2j * math.pi * t / cfg.M * path.k / cfg.N * (1.0 + cfg.squint))
    phase = np.exp(1j * math.pi * (cfg.M - 1) / cfg.M * (y % (2 * cfg.M)))
    return complex(gain * phase * float(kernels.dirichlet_np(x, cfg.M)))


def _ignorant_matrix(ls, ks, betas, cfg: FrameConfig, n: int, cols=None) -> np.ndarray:
    M = cfg.M
    l = np.arange(M)
    t = n * cfg.symbol_len + l
    H = np.zeros((M, M), dtype=np.complex128)
    for li, ki, bi in zip(ls, ks, betas):
        H[l, (l - li) % M] += bi * np.exp(2j * math.pi * t * ki / (cfg.N * M))
    return H if cols is None else H[:, cols]


def build_matrix(ch, cfg: FrameConfig, n: int, mode: str = EXACT, cols=None,
                 backend=None) -> np.ndarray:
    """Channel matrix H_n of OFDM symbol ``n`` (M x M, or M x len(cols)).

    ``mode="exact-dse"`` sums the closed-form DSE taps over paths;
    ``mode="dse-ignorant"`` keeps only the conventional Doppler phase and the
    cyclic delay shift (p_i treated as infinite). ``ch`` is anything with an
    ``arrays()`` method returning (delays, dopplers, gains).
    """
    ls, ks, betas = ch.arrays()
    if mode == IGNORANT:
        return _ignorant_matrix(ls, ks, betas, cfg, n, cols)
    if mode != EXACT:
        raise ValueError(f"unknown channel mode {mode!r}")
    cols = np.arange(cfg.M) if cols is None else np.asarray(cols)
    if ls.size == 0:
        return np.zeros((cfg.M, cols.size), dtype=np.complex128)
    return kernels.dse_columns(ls, ks, betas, n, cols, cfg.M, cfg.M_CP, cfg.N,
                               cfg.squint, cfg.inv_p_per_k, backend=backend)


def build_matrices(ch, cfg: FrameConfig, mode: str = EXACT, symbols=None,
                   backend=None) -> np.ndarray:
    """Stack of H_n for n in ``symbols`` (default: all N+2 symbols)."""
    symbols = range(cfg.num_symbols) if symbols is None else symbols
    return np.stack([build_matrix(ch, cfg, n, mode, backend=backend) for n in symbols])


def matrix_receive(S, ch, cfg: FrameConfig, mode: str = EXACT, rows=None,
                   backend=None) -> np.ndarray:
    """Received samples via R[n, :] = H_n S[n, :]."""
    S = np.asarray(S)
    rows = range(S.shape[0]) if rows is None else rows
    return np.stack([build_matrix(ch, cfg, n, mode, backend=backend) @ S[n] for n in rows])


def noise_rng(seed: int, trial: int, symbol: int) -> np.random.Generator:
    """Counter-based stream for the noise of one (trial, symbol) pair."""
    ss = np.random.SeedSequence([seed, trial, 1, symbol])
    return np.random.Generator(np.random.Philox(ss))


def complex_normal(rng: np.random.Generator, size) -> np.ndarray:
    """Unit-variance circular complex Gaussian samples."""
    g = rng.standard_normal((*np.atleast_1d(size), 2))
    return (g[..., 0] + 1j * g[..., 1]) * math.sqrt(0.5)


def add_awgn(R, sigma_n2: float, rng: np.random.Generator) -> np.ndarray:
    """R plus i.i.d. CN(0, sigma_n2) noise per sample."""
    if sigma_n2 < 0:
        raise ValueError("noise variance must be non-negative")
    R = np.asarray(R, dtype=np.complex128)
    if sigma_n2 == 0:
        return R.copy()
    return R + math.sqrt(sigma_n2) * complex_normal(rng, R.shape)


def frame_noise(shape, seed: int, trial: int, rows=None) -> np.ndarray:
    """Unit-variance noise for a frame, one independent stream per OFDM symbol.

    Row r of the result belongs to symbol ``rows[r]`` (default: 0..shape[0]-1),
    so a subset of symbols draws exactly the samples the full frame would.
    """
    rows = range(shape[0]) if rows is None else rows
    return np.stack([complex_normal(noise_rng(seed, trial, n), shape[1]) for n in rows])
