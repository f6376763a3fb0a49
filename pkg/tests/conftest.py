import math

import numpy as np
import pytest

from otfs_dse.config import FrameConfig

from pathlib import Path

CONFIGS_DIR = Path(__file__).resolve().parent.parent / "configs"

PILOT_AMP = math.sqrt(1000.0)  # 30 dB over unit data power

# 1000 km/h in m/s
V_1000 = 1000 / 3.6
# desk-scale velocity with (N+2)M/|p| ~= 0.13
V_DESK = 121792 / 3.6


def make_table1(**kw):
    base = dict(f_c=4e9, delta_f=3e4, M=1024, N=128, M_CP=24, l_max=20, k_max=16,
                x_p=PILOT_AMP)
    base.update(kw)
    return FrameConfig(**base)


def make_desk(**kw):
    base = dict(f_c=4e9, delta_f=2e6, M=64, N=16, M_CP=8, l_max=5, k_max=4, x_p=PILOT_AMP)
    base.update(kw)
    return FrameConfig(**base)


def make_small(**kw):
    base = dict(f_c=4e9, delta_f=2e6, M=32, N=4, M_CP=6, l_max=4, k_max=1, x_p=PILOT_AMP)
    base.update(kw)
    return FrameConfig(**base)


@pytest.fixture
def table1():
    return make_table1()


@pytest.fixture
def desk():
    return make_desk()


@pytest.fixture
def small():
    return make_small()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def crandn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


# -- acceptance reporting -----------------------------------------------------

ACCEPTANCE_LINES = []


def record(criterion: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
