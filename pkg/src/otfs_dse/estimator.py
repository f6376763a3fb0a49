"""Pilot-based channel parameter estimation.

Two identical comb pilot symbols lead the frame. For each candidate delay the
comb samples at that offset are gathered from both symbols; a delay is
declared present when every gathered magnitude exceeds a threshold, its
Doppler follows from the mean symbol-to-symbol phase rotation, and its gain
from a one-column least-squares fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import EXACT, IGNORANT, PathParams, build_matrix
from .config import FrameConfig
from .errors import ZeroReference

DSE_AWARE = "dse-aware"
DSE_IGNORANT = "dse-ignorant"

# reconstruction mode used by each estimation mode
MATRIX_MODE = {DSE_AWARE: EXACT, DSE_IGNORANT: IGNORANT}


@dataclass(frozen=True)
class PilotObservation:
    r0: np.ndarray
    r1: np.ndarray

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.r0, self.r1])


@dataclass(frozen=True)
class EstimatedCSI:
    """Detected delays with their Doppler and gain estimates."""

    entries: tuple
    mode: str = DSE_AWARE

    def __post_init__(self):
        if self.mode not in MATRIX_MODE:
            raise ValueError(f"unknown estimation mode {self.mode!r}")
        object.__setattr__(self, "entries", tuple(self.entries))

    @property
    def delays(self):
        return [e.l for e in self.entries]

    def arrays(self):
        return (
            np.array([e.l for e in self.entries], dtype=np.int64),
            np.array([e.k for e in self.entries], dtype=np.float64),
            np.array([e.beta for e in self.entries], dtype=np.complex128),
        )

    @classmethod
    def from_realization(cls, ch, mode: str = DSE_AWARE) -> EstimatedCSI:
        """Perfect-parameter CSI for a known channel."""
        return cls(tuple(ch.paths), mode)

    def to_text(self) -> str:
        lines = [f"# mode: {self.mode}\n"]
        for e in self.entries:
            b = complex(e.beta)
            lines.append(f"{e.l} {float(e.k)!r} {b.real!r} {b.imag!r}\n")
        return "".join(lines)

    @classmethod
    def from_text(cls, text: str) -> EstimatedCSI:
        mode = None
        entries = []
        for line in text.splitlines():
            line = line.strip()
            if line.startswith("# mode:"):
                mode = line.split(":", 1)[1].strip()
            elif line and not line.startswith("#"):
                l, k, re, im = line.split()
                entries.append(PathParams(int(l), float(k), complex(float(re), float(im))))
        if mode is None:
            raise ValueError("missing '# mode:' tag")
        return cls(tuple(entries), mode)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> EstimatedCSI:
        return cls.from_text(Path(path).read_text())


def default_gamma(cfg: FrameConfig, sigma_mult: float = 3.0) -> float:
    return sigma_mult * math.sqrt(cfg.sigma_n2)


def pilot_indices(cfg: FrameConfig, l_i: int) -> np.ndarray:
    return np.arange(cfg.M_p) * (cfg.l_max + 1) + l_i


def extract_pilot_vectors(R, cfg: FrameConfig, l_i: int) -> PilotObservation:
    """Gather R[n, q(l_max+1) + l_i] for n = 0, 1 and q = 0..M_p-1."""
    if not 1 <= l_i <= cfg.l_max:
        raise IndexError(f"delay {l_i} outside 1..{cfg.l_max}")
    idx = pilot_indices(cfg, l_i)
    if idx[-1] >= cfg.M:
        raise IndexError(f"pilot probe index {idx[-1]} >= M={cfg.M}")
    R = np.asarray(R)
    return PilotObservation(R[0, idx].copy(), R[1, idx].copy())


def detect_delay(obs: PilotObservation, gamma: float) -> bool:
    return bool(min(np.abs(obs.r0).min(), np.abs(obs.r1).min()) > gamma)


def phase_difference(obs: PilotObservation) -> np.ndarray:
    """Principal-value angle of r1/r0 per comb tooth, in (-pi, pi]."""
    if np.any(obs.r0 == 0):
        raise ZeroReference("zero entry in the first pilot vector")
    theta = np.angle(obs.r1 / obs.r0)
    theta[theta == -np.pi] = np.pi
    return theta


def _squint_factor(cfg: FrameConfig, mode: str) -> float:
    return 1.0 + cfg.squint if mode == DSE_AWARE else 1.0


def extract_doppler(theta, cfg: FrameConfig, mode: str = DSE_AWARE) -> float:
    """Normalized Doppler from the mean pilot phase rotation, clamped to +-k_max."""
    scale = cfg.M * cfg.N / (2.0 * math.pi * cfg.symbol_len * _squint_factor(cfg, mode))
    k_hat = scale * float(np.mean(theta))
    return float(min(max(k_hat, -cfg.k_max), cfg.k_max))


def pilot_basis(cfg: FrameConfig, l_i: int, k_hat: float, mode: str = DSE_AWARE) -> np.ndarray:
    """Stacked (2 M_p) model response of a unit-gain path at (l_i, k_hat)."""
    q = np.arange(cfg.M_p)
    t = np.concatenate([q * (cfg.l_max + 1) + l_i, cfg.symbol_len + q * (cfg.l_max + 1) + l_i])
    return cfg.x_p * np.exp(2j * math.pi * t / cfg.M * k_hat / cfg.N * _squint_factor(cfg, mode))


def estimate_gain(obs: PilotObservation, cfg: FrameConfig, l_i: int, k_hat: float,
                  mode: str = DSE_AWARE) -> complex:
    psi = pilot_basis(cfg, l_i, k_hat, mode)
    return complex(np.vdot(psi, obs.stacked) / np.vdot(psi, psi).real)


def estimate_channel(R, cfg: FrameConfig, gamma: float, mode: str = DSE_AWARE) -> EstimatedCSI:
    """Delay detection, Doppler extraction and gain estimation over l = 1..l_max.

    Only the two pilot rows of ``R`` are read.
    """
    if mode not in MATRIX_MODE:
        raise ValueError(f"unknown estimation mode {mode!r}")
    entries = []
    for l_i in range(1, cfg.l_max + 1):
        obs = extract_pilot_vectors(R, cfg, l_i)
        if not detect_delay(obs, gamma):
            continue
        k_hat = extract_doppler(phase_difference(obs), cfg, mode)
        entries.append(PathParams(l_i, k_hat, estimate_gain(obs, cfg, l_i, k_hat, mode)))
    return EstimatedCSI(tuple(entries), mode)


def reconstruct(csi: EstimatedCSI, cfg: FrameConfig, n: int, backend=None) -> np.ndarray:
    """Channel matrix of symbol ``n`` rebuilt from estimated parameters."""
    if not csi.entries:
        return np.zeros((cfg.M, cfg.M), dtype=np.complex128)
    return build_matrix(csi, cfg, n, MATRIX_MODE[csi.mode], backend=backend)
