import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otfs_dse import kernels

from conftest import crandn

BACKENDS = ["numpy"] + (["numba"] if kernels.HAVE_NUMBA else [])


def dirichlet_bruteforce(x, M):
    # sum of M unit phasors, recentred: |.| form of the periodic sinc
    m = np.arange(M)
    s = np.exp(2j * np.pi * np.outer(x, m) / M).sum(axis=1) / M
    return (s * np.exp(-1j * np.pi * (M - 1) / M * np.asarray(x))).real


@pytest.mark.parametrize("backend", BACKENDS)
def test_dirichlet_matches_phasor_sum(backend):
    M = 16
    x = np.concatenate([np.linspace(-40, 40, 401), np.arange(-48, 49, 16) + 1e-12,
                        np.arange(-48, 49, 16).astype(float)])
    np.testing.assert_allclose(kernels.dirichlet(x, M, backend=backend),
                               dirichlet_bruteforce(x, M), atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_dirichlet_limits_at_period_multiples(backend):
    M = 8
    x = np.array([0.0, 8.0, -8.0, 16.0, 24.0])
    expect = [1.0, (-1.0) ** (M + 1), (-1.0) ** (M + 1), 1.0, (-1.0) ** (M + 1)]
    np.testing.assert_allclose(kernels.dirichlet(x, M, backend=backend), expect, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.99, 0.99), st.integers(2, 64))
def test_dirichlet_unit_energy_over_a_period(frac, M):
    y = np.arange(M) + frac
    assert np.sum(kernels.dirichlet_np(y, M) ** 2) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba missing")
def test_backends_agree_on_dse_columns(rng):
    M, M_CP, N = 48, 9, 8
    ls = np.array([1, 4, 7])
    ks = rng.uniform(-3, 3, 3)
    betas = crandn(rng, 3)
    cols = np.array([0, 5, 17, 47])
    for n in (0, 3, N + 1):
        a = kernels.dse_columns(ls, ks, betas, n, cols, M, M_CP, N, 1e-3, 2e-5, backend="numpy")
        b = kernels.dse_columns(ls, ks, betas, n, cols, M, M_CP, N, 1e-3, 2e-5, backend="numba")
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-13)


@pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba missing")
def test_backends_agree_on_oracle(rng):
    M, M_CP, N = 32, 6, 4
    X = crandn(rng, (N + 2, M))
    ls = np.array([2, 3])
    ks = np.array([0.6, -0.3])
    betas = crandn(rng, 2)
    rows = np.arange(N + 2)
    a = kernels.oracle_rows(X, rows, ls, ks, betas, M, M_CP, N, 1e-4, backend="numpy")
    b = kernels.oracle_rows(X, rows, ls, ks, betas, M, M_CP, N, 1e-4, backend="numba")
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.dirichlet([0.0], 4, backend="cuda")
