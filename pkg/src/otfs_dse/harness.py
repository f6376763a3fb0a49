"""Monte-Carlo experiment driver, metrics and result emission."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import channel, modem
from .channel import EXACT, IGNORANT
from .config import ConfigError, FrameConfig, RunSettings, validate_config
from .equalizer import dd_demod, lmmse_equalize
from .errors import ZeroReference
from .estimator import DSE_AWARE, DSE_IGNORANT, EstimatedCSI, estimate_channel, reconstruct
from .modem import qpsk_demap

log = logging.getLogger(__name__)

KINDS = ("oracle-check", "nmse-model", "estimate", "ber")

# subcarrier count above which BER runs need an explicit opt-in
DESK_SCALE_MAX_M = 256

ORACLE_TOLERANCE = 1e-9


def nmse(H_hat, H_true) -> float:
    """||H_hat - H||_F^2 / ||H||_F^2."""
    H_hat = np.asarray(H_hat)
    H_true = np.asarray(H_true)
    if H_hat.shape != H_true.shape:
        raise ValueError(f"shape mismatch {H_hat.shape} vs {H_true.shape}")
    ref = np.vdot(H_true, H_true).real
    if ref == 0:
        raise ZeroReference("reference matrix is zero")
    d = H_hat - H_true
    return float(np.vdot(d, d).real / ref)


def ber(bits_hat, bits_true) -> float:
    a = np.asarray(bits_hat).ravel()
    b = np.asarray(bits_true).ravel()
    if a.size != b.size:
        raise ValueError(f"length mismatch {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("empty bit sequences")
    return float(np.count_nonzero(a != b)) / a.size


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    cfg: FrameConfig
    snr_db_list: tuple = (20.0,)
    velocity_kmh_list: tuple = (1000.0,)
    m_list: tuple = ()
    trials: int = 100
    seed: int = 0
    n_paths: int = 4
    gamma_sigma_mult: float = 3.0
    gamma_override: float | None = None
    full_scale: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        for name in ("snr_db_list", "velocity_kmh_list", "m_list"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.m_list:
            object.__setattr__(self, "m_list", (self.cfg.M,))
        if not self.snr_db_list or not self.velocity_kmh_list:
            raise ConfigError("sweep lists must be nonempty")

    @classmethod
    def from_settings(cls, kind: str, cfg: FrameConfig, run: RunSettings, **overrides):
        base = dict(
            kind=kind,
            cfg=cfg,
            snr_db_list=(run.snr_db,),
            velocity_kmh_list=(run.velocity_kmh,),
            trials=run.trials,
            seed=run.seed,
            n_paths=run.n_paths,
        )
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**base)

    def points(self):
        """Sweep coordinates (m, velocity_kmh, snr_db) in output order."""
        snrs = (None,) if self.kind in ("nmse-model", "oracle-check") else self.snr_db_list
        return [(m, v, s) for m in self.m_list for v in self.velocity_kmh_list for s in snrs]

    def config_for(self, m: int) -> FrameConfig:
        return replace(self.cfg, M=int(m))

    def gamma(self, cfg: FrameConfig) -> float:
        if self.gamma_override is not None:
            return self.gamma_override
        return self.gamma_sigma_mult * math.sqrt(cfg.sigma_n2)


METRICS = (
    "nmse_model",
    "nmse_est_dse",
    "nmse_est_nodse",
    "ber_perfect_dse",
    "ber_perfect_nodse",
    "ber_est_dse",
    "ber_est_nodse",
    "oracle_max_rel_err",
)

# aggregated as the worst case over trials rather than a mean
MAX_METRICS = ("oracle_max_rel_err",)


@dataclass
class ResultRow:
    kind: str
    m: int
    velocity_kmh: float
    snr_db: float | None
    trials: int
    failures: int = 0
    nmse_model: float | None = None
    nmse_model_se: float | None = None
    nmse_est_dse: float | None = None
    nmse_est_dse_se: float | None = None
    nmse_est_nodse: float | None = None
    nmse_est_nodse_se: float | None = None
    ber_perfect_dse: float | None = None
    ber_perfect_dse_se: float | None = None
    ber_perfect_nodse: float | None = None
    ber_perfect_nodse_se: float | None = None
    ber_est_dse: float | None = None
    ber_est_dse_se: float | None = None
    ber_est_nodse: float | None = None
    ber_est_nodse_se: float | None = None
    oracle_max_rel_err: float | None = None
    errors: list = field(default_factory=list, compare=False, repr=False)


CSV_FIELDS = tuple(f.name for f in fields(ResultRow) if f.name != "errors")


# ---------------------------------------------------------------------------
# per-trial work


def _trial_rngs(seed: int, trial: int):
    chan = np.random.default_rng(np.random.SeedSequence([seed, trial, 0]))
    data = np.random.default_rng(np.random.SeedSequence([seed, trial, 2]))
    return chan, data


def _draw(spec: ExperimentSpec, cfg: FrameConfig, v_kmh: float, trial: int):
    # a fresh stream per point: every (m, v) point of a trial sees the same
    # underlying delays, Jakes angles and gains
    chan_rng, _ = _trial_rngs(spec.seed, trial)
    return channel.jakes_draw(cfg, v_kmh / 3.6, spec.n_paths, chan_rng)


def _validate(spec: ExperimentSpec, cfg: FrameConfig, v_kmh: float):
    validate_config(cfg, v_kmh / 3.6,
                    require_unambiguous_doppler=spec.kind != "oracle-check")


def _point_oracle(spec, cfg, v, trial):
    ch = _draw(spec, cfg, v, trial)
    _, data_rng = _trial_rngs(spec.seed, trial)
    _, _, S = modem.random_frame(cfg, data_rng)
    R_or = channel.oracle_receive_frame(S, ch, cfg)
    R_mat = channel.matrix_receive(S, ch, cfg, EXACT)
    return {None: {"oracle_max_rel_err": float(np.abs(R_mat - R_or).max() / np.abs(R_or).max())}}


def _point_nmse_model(spec, cfg, v, trial):
    ch = _draw(spec, cfg, v, trial)
    n = cfg.N + 1
    H = channel.build_matrix(ch, cfg, n, EXACT)
    return {None: {"nmse_model": nmse(channel.build_matrix(ch, cfg, n, IGNORANT), H)}}


def _pilot_grid(cfg: FrameConfig) -> np.ndarray:
    X = np.zeros((cfg.num_symbols, cfg.M), dtype=np.complex128)
    X[:2] = modem.samples_to_tf(modem.build_pilot_rows(cfg))
    return X


def _point_estimate(spec, cfg, v, trial):
    ch = _draw(spec, cfg, v, trial)
    n = cfg.N + 1
    H = channel.build_matrix(ch, cfg, n, EXACT)
    model = nmse(channel.build_matrix(ch, cfg, n, IGNORANT), H)
    # the data payload cannot reach the pilot symbols, so pilots alone suffice
    R_clean = channel.oracle_receive(_pilot_grid(cfg), ch, cfg, rows=[0, 1])
    noise = channel.frame_noise(R_clean.shape, spec.seed, trial, rows=[0, 1])
    out = {}
    for snr in spec.snr_db_list:
        cfg_s = cfg.with_snr(snr)
        R = R_clean + math.sqrt(cfg_s.sigma_n2) * noise
        gamma = spec.gamma(cfg_s)
        row = {"nmse_model": model}
        for mode, key in ((DSE_AWARE, "nmse_est_dse"), (DSE_IGNORANT, "nmse_est_nodse")):
            csi = estimate_channel(R, cfg_s, gamma, mode)
            row[key] = nmse(reconstruct(csi, cfg_s, n), H)
        out[snr] = row
    return out


def _detect_with(R, Hs, cfg: FrameConfig):
    S_hat = np.stack([lmmse_equalize(Hs[i], R[i + 2], cfg.sigma_n2, cfg.sigma_s2)
                      for i in range(cfg.N)])
    return qpsk_demap(dd_demod(S_hat))


def _csi_matrices(csi: EstimatedCSI, cfg: FrameConfig):
    return [reconstruct(csi, cfg, n) for n in range(2, cfg.num_symbols)]


def _point_ber(spec, cfg, v, trial):
    if cfg.M > DESK_SCALE_MAX_M and not spec.full_scale:
        raise ConfigError(
            f"BER at M={cfg.M} costs ~N M^3 per frame; pass --full-scale to run it"
        )
    ch = _draw(spec, cfg, v, trial)
    _, data_rng = _trial_rngs(spec.seed, trial)
    bits, _, S = modem.random_frame(cfg, data_rng)
    R_clean = channel.oracle_receive_frame(S, ch, cfg)
    noise = channel.frame_noise(R_clean.shape, spec.seed, trial)
    perfect = {
        "ber_perfect_dse": _csi_matrices(EstimatedCSI.from_realization(ch, DSE_AWARE), cfg),
        "ber_perfect_nodse": _csi_matrices(EstimatedCSI.from_realization(ch, DSE_IGNORANT), cfg),
    }
    out = {}
    for snr in spec.snr_db_list:
        cfg_s = cfg.with_snr(snr)
        R = R_clean + math.sqrt(cfg_s.sigma_n2) * noise
        gamma = spec.gamma(cfg_s)
        row = {key: ber(_detect_with(R, Hs, cfg_s), bits) for key, Hs in perfect.items()}
        for mode, key in ((DSE_AWARE, "ber_est_dse"), (DSE_IGNORANT, "ber_est_nodse")):
            csi = estimate_channel(R, cfg_s, gamma, mode)
            row[key] = ber(_detect_with(R, _csi_matrices(csi, cfg_s), cfg_s), bits)
        out[snr] = row
    return out


_POINT_FNS = {
    "oracle-check": _point_oracle,
    "nmse-model": _point_nmse_model,
    "estimate": _point_estimate,
    "ber": _point_ber,
}


def run_trial(spec: ExperimentSpec, trial: int) -> dict:
    """Metrics of one trial keyed by sweep point; failures map to an error string."""
    fn = _POINT_FNS[spec.kind]
    results = {}
    for m in spec.m_list:
        cfg = spec.config_for(m)
        for v in spec.velocity_kmh_list:
            try:
                per_snr = fn(spec, cfg, v, trial)
            except ConfigError:
                raise
            except Exception as exc:  # recorded per point, reported in the row
                log.warning("trial %d at m=%s v=%s failed: %s", trial, m, v, exc)
                msg = f"trial {trial}: {type(exc).__name__}: {exc}"
                snrs = spec.snr_db_list if spec.kind in ("estimate", "ber") else (None,)
                per_snr = {s: msg for s in snrs}
            for snr, metrics in per_snr.items():
                results[(m, v, snr)] = metrics
    return results


def _run_trial_star(args):
    return run_trial(*args)


# ---------------------------------------------------------------------------
# aggregation


def _aggregate(values, worst_case: bool):
    if worst_case:
        return max(values), None
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, None
    var = math.fsum((x - mean) ** 2 for x in values) / (n - 1)
    return mean, math.sqrt(var / n)


def run_experiment(spec: ExperimentSpec) -> list[ResultRow]:
    """Run all trials and aggregate per sweep point.

    Output is a pure function of ``spec`` apart from ``workers``: trial t only
    draws from streams seeded by (seed, t), and aggregation is exact
    (``math.fsum``) so it does not depend on completion order.
    """
    for m in spec.m_list:
        for v in spec.velocity_kmh_list:
            _validate(spec, spec.config_for(m), v)
    if spec.kind == "ber" and not spec.full_scale:
        big = [m for m in spec.m_list if m > DESK_SCALE_MAX_M]
        if big:
            raise ConfigError(f"BER at M={big} needs --full-scale")

    jobs = [(spec, t) for t in range(spec.trials)]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            per_trial = list(pool.map(_run_trial_star, jobs))
    else:
        per_trial = [_run_trial_star(j) for j in jobs]

    rows = []
    for m, v, snr in spec.points():
        samples = [res[(m, v, snr)] for res in per_trial]
        ok = [s for s in samples if isinstance(s, dict)]
        errors = [s for s in samples if not isinstance(s, dict)]
        row = ResultRow(kind=spec.kind, m=int(m), velocity_kmh=float(v),
                        snr_db=None if snr is None else float(snr),
                        trials=len(ok), failures=len(errors), errors=errors)
        if ok:
            for metric in METRICS:
                vals = [s[metric] for s in ok if metric in s]
                if not vals:
                    continue
                mean, se = _aggregate(vals, metric in MAX_METRICS)
                setattr(row, metric, mean)
                if metric not in MAX_METRICS:
                    setattr(row, metric + "_se", se)
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# emission


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(rows, path) -> None:
    if not rows:
        raise ValueError("no result rows to write")
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_FIELDS)
            for row in rows:
                w.writerow([_fmt(getattr(row, name)) for name in CSV_FIELDS])
    except OSError as exc:
        raise OSError(f"cannot write CSV {path}: {exc}") from exc


_INT_FIELDS = ("m", "trials", "failures")


def read_csv(path) -> list[ResultRow]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise ValueError(f"unexpected CSV header in {path}")
        rows = []
        for rec in reader:
            kw = {}
            for name, text in rec.items():
                if name == "kind":
                    kw[name] = text
                elif text == "":
                    kw[name] = None
                elif name in _INT_FIELDS:
                    kw[name] = int(text)
                else:
                    kw[name] = float(text)
            rows.append(ResultRow(**kw))
    return rows


_PLOT_TEMPLATE = '''\
"""Plot results from {data_name}; writes {png_name} next to this script."""
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent
rows = json.loads((HERE / "{data_name}").read_text())

fig, ax = plt.subplots(figsize=(6, 4.5))
kind = rows[0]["kind"]
if kind == "nmse-model":
    for v in sorted({{r["velocity_kmh"] for r in rows}}):
        pts = sorted((r["m"], r["nmse_model"]) for r in rows if r["velocity_kmh"] == v)
        ax.semilogy(*zip(*pts), marker="o", label=f"v = {{v:g}} km/h")
    ax.set_xlabel("M")
    ax.set_ylabel("NMSE")
elif kind in ("estimate", "ber"):
    keys = [k for k in {metrics!r} if any(r.get(k) is not None for r in rows)]
    for key in keys:
        pts = sorted((r["snr_db"], r[key]) for r in rows if r[key] is not None)
        ys = [max(y, 1e-7) for _, y in pts]
        ax.semilogy([x for x, _ in pts], ys, marker="o", label=key)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("NMSE" if kind == "estimate" else "BER")
else:
    ax.bar(range(len(rows)), [r["oracle_max_rel_err"] for r in rows])
    ax.set_ylabel("max relative deviation")
ax.grid(True, which="both", alpha=0.3)
ax.legend(loc="best", fontsize="small")
fig.tight_layout()
fig.savefig(HERE / "{png_name}", dpi=150)
'''


_PLOT_METRICS = {"estimate": METRICS[0:3], "ber": METRICS[3:7]}


def emit_plot_script(rows, path) -> Path:
    """Write a standalone matplotlib script plus its JSON data file.

    Returns the data file path. Running the script renders a PNG with the
    Agg backend; nothing is displayed.
    """
    if not rows:
        raise ValueError("no result rows to plot")
    path = Path(path)
    data_path = path.with_suffix(".json")
    payload = [{name: getattr(r, name) for name in CSV_FIELDS} for r in rows]
    script = _PLOT_TEMPLATE.format(
        data_name=data_path.name,
        png_name=path.with_suffix(".png").name,
        metrics=_PLOT_METRICS.get(rows[0].kind, ()),
    )
    try:
        data_path.write_text(json.dumps(payload, indent=1))
        path.write_text(script)
    except OSError as exc:
        raise OSError(f"cannot write plot files at {path}: {exc}") from exc
    return data_path
