import math
from dataclasses import replace

import pytest

from otfs_dse.config import (
    SPEED_OF_LIGHT,
    FrameConfig,
    config_from_mapping,
    doppler_phase_bound,
    k_of_nu,
    load_config,
    nu_max,
    required_k_max,
    validate_config,
)
from otfs_dse.errors import (
    ConfigError,
    CPTooLong,
    CPTooShort,
    DopplerAmbiguous,
    DSEAssumptionViolated,
    KmaxTooSmall,
)

from conftest import V_1000, make_small, make_table1


def test_table1_is_valid(table1):
    dims = validate_config(table1, V_1000)
    assert dims.M_p == 48
    assert dims.T_u == pytest.approx((1048 / 1024) / 30000, rel=1e-15)
    assert dims.num_symbols == 130
    assert dims.sample_period * 1024 == pytest.approx(dims.T, rel=1e-15)


def test_cp_too_short():
    with pytest.raises(CPTooShort):
        validate_config(make_table1(M_CP=21), V_1000)


def test_cp_too_long():
    with pytest.raises(CPTooLong):
        validate_config(make_small(M_CP=32), 0.0)


def test_small_frame_at_1000kmh():
    cfg = FrameConfig(f_c=4e9, delta_f=3e4, M=64, N=16, M_CP=8, l_max=5, k_max=2, x_p=1.0)
    dims = validate_config(cfg, V_1000)
    # c / v computed by hand: 299792458 / 277.777... = 1.0792528488e6
    assert dims.min_abs_p == pytest.approx(1079252.8488, rel=1e-10)
    assert (cfg.N + 2) * cfg.M == 1152 < dims.min_abs_p


def test_dse_assumption_violated(small):
    # (N+2)M = 192 -> any speed above c/192 breaks |p| > (N+2)M
    with pytest.raises(DSEAssumptionViolated):
        validate_config(replace(small, k_max=10**6), SPEED_OF_LIGHT / 150)


def test_doppler_ambiguous_for_two_symbols():
    cfg = make_small(N=2, k_max=1)
    with pytest.raises(DopplerAmbiguous):
        validate_config(cfg, 0.0)
    validate_config(cfg, 0.0, require_unambiguous_doppler=False)


def test_k_max_too_small(table1):
    with pytest.raises(KmaxTooSmall):
        validate_config(replace(table1, k_max=15), V_1000)


def test_doppler_phase_bound_table1(table1):
    assert doppler_phase_bound(table1) / math.pi == pytest.approx(0.2568, abs=1e-3)


def test_nu_max_and_k():
    cfg = make_table1()
    # (1000/3.6) * 4e9 / 299792458, evaluated with mpmath at 30 digits
    assert nu_max(cfg, V_1000) == pytest.approx(3706.267724423912, rel=1e-12)
    assert k_of_nu(cfg, nu_max(cfg, V_1000)) == pytest.approx(15.813408957542023, rel=1e-12)
    assert required_k_max(cfg, V_1000) == 16
    assert nu_max(cfg, 0.0) == 0.0
    assert k_of_nu(cfg, 0.0) == 0.0


def test_cp_rule_exhaustive():
    # accepted (M_CP, l_max) pairs are exactly l_max + 2 <= M_CP < M
    for M in (8, 16, 33, 64):
        for l_max in range(1, M // 2):
            for M_CP in range(1, M):
                cfg = FrameConfig(f_c=4e9, delta_f=3e4, M=M, N=4, M_CP=M_CP, l_max=l_max,
                                  k_max=1, x_p=1.0)
                expect = l_max + 2 <= M_CP < M
                try:
                    validate_config(cfg, 0.0)
                    ok = True
                except (CPTooShort, CPTooLong):
                    ok = False
                assert ok == expect, (M, l_max, M_CP)


@pytest.mark.parametrize("M,M_CP", [(64, 8), (1024, 24), (100, 7)])
def test_symbol_duration_sum(M, M_CP):
    cfg = make_table1(M=M, M_CP=M_CP)
    assert cfg.T_u == pytest.approx(cfg.T + cfg.T_CP, rel=1e-15)


def test_rejects_nonpositive_fields(small):
    with pytest.raises(ConfigError):
        validate_config(replace(small, N=0), 0.0)
    with pytest.raises(ConfigError):
        validate_config(replace(small, modulation="16qam"), 0.0)


MAPPING = dict(carrier_hz=4e9, subcarrier_hz=3e4, m=1024, n=128, m_cp=24, l_max=20,
               k_max=16, pilot_power_db_over_data=30, sigma_s2=1.0, snr_db=20,
               velocity_kmh=1000, n_paths=4, seed=1, trials=10)


def test_config_mapping_derives_pilot_and_noise():
    cfg, run = config_from_mapping(MAPPING)
    assert cfg.x_p.imag == 0 and cfg.x_p.real > 0
    assert abs(cfg.x_p) ** 2 == pytest.approx(1000.0, rel=1e-12)
    assert cfg.sigma_n2 == pytest.approx(0.01, rel=1e-12)
    assert run.velocity_ms == pytest.approx(V_1000)


def test_config_mapping_rejects_bad_keys():
    with pytest.raises(ConfigError, match="missing"):
        config_from_mapping({k: v for k, v in MAPPING.items() if k != "m"})
    with pytest.raises(ConfigError, match="unknown"):
        config_from_mapping({**MAPPING, "bandwidth": 1})


def test_load_config_file(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("\n".join(f"{k}: {v}" for k, v in MAPPING.items()))
    cfg, run = load_config(p)
    assert cfg.M == 1024 and run.trials == 10
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")


def test_shipped_configs_validate():
    from pathlib import Path

    root = Path(__file__).resolve().parent.parent / "configs"
    for name in ("table1.yaml", "ber_desk.yaml", "oracle_small.yaml"):
        cfg, run = load_config(root / name)
        validate_config(cfg, run.velocity_ms)
