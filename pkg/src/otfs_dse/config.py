"""Frame dimensioning, derived timing and admissibility checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .errors import (
    ConfigError,
    CPTooLong,
    CPTooShort,
    DopplerAmbiguous,
    DSEAssumptionViolated,
    KmaxTooSmall,
)

SPEED_OF_LIGHT = 299792458.0

SUPPORTED_MODULATIONS = ("qpsk",)


@dataclass(frozen=True)
class FrameConfig:
    """Dimensioning and power parameters of one CP-OFDM based OTFS frame.

    ``M`` subcarriers per OFDM symbol, ``N`` data symbols (the frame carries
    ``N + 2`` symbols including the two pilot symbols), ``M_CP`` cyclic-prefix
    samples, integer delay support ``1..l_max`` and Doppler support
    ``|k| <= k_max`` in units of ``1/(N T)``.
    """

    f_c: float
    delta_f: float
    M: int
    N: int
    M_CP: int
    l_max: int
    k_max: int
    x_p: complex
    sigma_s2: float = 1.0
    sigma_n2: float = 0.0
    modulation: str = "qpsk"

    @property
    def T(self) -> float:
        return 1.0 / self.delta_f

    @property
    def T_CP(self) -> float:
        return self.M_CP / self.M * self.T

    @property
    def T_u(self) -> float:
        return (self.M + self.M_CP) / self.M * self.T

    @property
    def M_p(self) -> int:
        return self.M // (self.l_max + 1)

    @property
    def num_symbols(self) -> int:
        return self.N + 2

    @property
    def sample_period(self) -> float:
        return self.T / self.M

    @property
    def symbol_len(self) -> int:
        """Samples per OFDM symbol including the CP."""
        return self.M + self.M_CP

    @property
    def squint(self) -> float:
        """Doppler-squint correction (M-1) delta_f / (2 f_c)."""
        return (self.M - 1) * self.delta_f / (2.0 * self.f_c)

    @property
    def inv_p_per_k(self) -> float:
        """1/p_i for a path with k_i = 1, i.e. delta_f / (N f_c)."""
        return self.delta_f / (self.N * self.f_c)

    @property
    def pilot_positions(self):
        return [q * (self.l_max + 1) for q in range(self.M_p)]

    def with_snr(self, snr_db: float) -> FrameConfig:
        return replace(self, sigma_n2=self.sigma_s2 / 10.0 ** (snr_db / 10.0))

    def with_subcarriers(self, M: int) -> FrameConfig:
        return replace(self, M=M)


@dataclass(frozen=True)
class DerivedDims:
    T: float
    T_CP: float
    T_u: float
    M_p: int
    num_symbols: int
    sample_period: float
    min_abs_p: float


def nu_max(cfg: FrameConfig, v_max: float) -> float:
    """Maximum Doppler shift (Hz) at the carrier for speed ``v_max`` in m/s."""
    if v_max < 0:
        raise ValueError("velocity must be non-negative")
    return v_max * cfg.f_c / SPEED_OF_LIGHT


def k_of_nu(cfg: FrameConfig, nu: float) -> float:
    """Normalized (real-valued) Doppler k = nu N T."""
    return nu * cfg.N * cfg.T


def required_k_max(cfg: FrameConfig, v_max: float) -> int:
    return math.ceil(k_of_nu(cfg, nu_max(cfg, v_max)))


def doppler_phase_bound(cfg: FrameConfig) -> float:
    """Largest noiseless pilot phase difference, reached at |k| = k_max."""
    return (
        2.0 * math.pi * cfg.symbol_len / cfg.M * cfg.k_max / cfg.N * (1.0 + cfg.squint)
    )


def validate_config(
    cfg: FrameConfig, v_max: float, require_unambiguous_doppler: bool = True
) -> DerivedDims:
    """Check ``cfg`` against the CP rule, the DSE assumption and the Doppler bound.

    ``v_max`` is the largest relative speed in m/s. The phase-wrap check only
    matters for the pilot-based estimator; pass
    ``require_unambiguous_doppler=False`` to validate a configuration used
    purely for channel simulation.
    """
    for name in ("f_c", "delta_f", "M", "N", "M_CP", "l_max", "k_max", "sigma_s2"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name} must be positive, got {getattr(cfg, name)!r}")
    if cfg.sigma_n2 < 0:
        raise ConfigError("sigma_n2 must be non-negative")
    if abs(cfg.x_p) == 0:
        raise ConfigError("pilot value must be nonzero")
    if cfg.modulation.lower() not in SUPPORTED_MODULATIONS:
        raise ConfigError(f"unsupported modulation {cfg.modulation!r}")
    if v_max < 0:
        raise ConfigError("velocity must be non-negative")

    if cfg.M_CP < cfg.l_max + 2:
        raise CPTooShort(f"M_CP={cfg.M_CP} < l_max+2={cfg.l_max + 2}")
    if cfg.M_CP >= cfg.M:
        raise CPTooLong(f"M_CP={cfg.M_CP} >= M={cfg.M}")
    if cfg.M_p < 1 or (cfg.M_p - 1) * (cfg.l_max + 1) + cfg.l_max >= cfg.M:
        raise ConfigError(f"no room for a pilot comb with l_max={cfg.l_max}, M={cfg.M}")

    min_abs_p = math.inf if v_max == 0 else SPEED_OF_LIGHT / v_max
    if cfg.num_symbols * cfg.M >= min_abs_p:
        raise DSEAssumptionViolated(
            f"(N+2)M={cfg.num_symbols * cfg.M} >= min|p|={min_abs_p:.6g}"
        )
    need = required_k_max(cfg, v_max)
    if need > cfg.k_max:
        raise KmaxTooSmall(f"velocity needs k_max >= {need}, config has {cfg.k_max}")
    if require_unambiguous_doppler and doppler_phase_bound(cfg) >= math.pi:
        raise DopplerAmbiguous(
            f"pilot phase difference at k_max reaches "
            f"{doppler_phase_bound(cfg) / math.pi:.4f} pi"
        )

    return DerivedDims(
        T=cfg.T,
        T_CP=cfg.T_CP,
        T_u=cfg.T_u,
        M_p=cfg.M_p,
        num_symbols=cfg.num_symbols,
        sample_period=cfg.sample_period,
        min_abs_p=min_abs_p,
    )


CONFIG_KEYS = (
    "carrier_hz",
    "subcarrier_hz",
    "m",
    "n",
    "m_cp",
    "l_max",
    "k_max",
    "pilot_power_db_over_data",
    "sigma_s2",
    "snr_db",
    "velocity_kmh",
    "n_paths",
    "seed",
    "trials",
)


@dataclass(frozen=True)
class RunSettings:
    """Scenario fields of a config file that are not frame dimensions."""

    snr_db: float
    velocity_kmh: float
    n_paths: int
    seed: int
    trials: int
    pilot_power_db_over_data: float
    extra: dict = field(default_factory=dict)

    @property
    def velocity_ms(self) -> float:
        return self.velocity_kmh / 3.6


def pilot_value(sigma_s2: float, pilot_power_db_over_data: float) -> complex:
    return complex(math.sqrt(sigma_s2 * 10.0 ** (pilot_power_db_over_data / 10.0)), 0.0)


def config_from_mapping(data: dict) -> tuple[FrameConfig, RunSettings]:
    missing = [k for k in CONFIG_KEYS if k not in data]
    unknown = [k for k in data if k not in CONFIG_KEYS]
    if missing:
        raise ConfigError(f"missing config keys: {', '.join(missing)}")
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    sigma_s2 = float(data["sigma_s2"])
    cfg = FrameConfig(
        f_c=float(data["carrier_hz"]),
        delta_f=float(data["subcarrier_hz"]),
        M=int(data["m"]),
        N=int(data["n"]),
        M_CP=int(data["m_cp"]),
        l_max=int(data["l_max"]),
        k_max=int(data["k_max"]),
        x_p=pilot_value(sigma_s2, float(data["pilot_power_db_over_data"])),
        sigma_s2=sigma_s2,
    ).with_snr(float(data["snr_db"]))
    run = RunSettings(
        snr_db=float(data["snr_db"]),
        velocity_kmh=float(data["velocity_kmh"]),
        n_paths=int(data["n_paths"]),
        seed=int(data["seed"]),
        trials=int(data["trials"]),
        pilot_power_db_over_data=float(data["pilot_power_db_over_data"]),
    )
    return cfg, run


def load_config(path) -> tuple[FrameConfig, RunSettings]:
    """Read a flat ``key: value`` config file."""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} is not a flat key-value mapping")
    return config_from_mapping(data)
