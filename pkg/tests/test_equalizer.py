import math

import numpy as np
import pytest

from otfs_dse import channel, equalizer, modem
from otfs_dse.errors import SingularSystem
from otfs_dse.estimator import DSE_AWARE, EstimatedCSI

from conftest import V_DESK, crandn


def test_identity_noiseless(rng):
    r = crandn(rng, 8)
    np.testing.assert_allclose(equalizer.lmmse_equalize(np.eye(8), r, 0.0, 1.0), r)


def test_identity_shrinkage(rng):
    r = crandn(rng, 8)
    np.testing.assert_allclose(equalizer.lmmse_equalize(np.eye(8), r, 0.25, 2.0), r / 1.125)


def test_noiseless_exact_recovery(rng):
    H = crandn(rng, (16, 16)) + 4 * np.eye(16)
    s = crandn(rng, 16)
    s_hat = equalizer.lmmse_equalize(H, H @ s, 0.0, 1.0)
    assert np.linalg.norm(s_hat - s) / np.linalg.norm(s) < 1e-10


def test_singular_without_noise():
    H = np.zeros((4, 4), complex)
    H[0, 0] = 1
    with pytest.raises(SingularSystem):
        equalizer.lmmse_equalize(H, np.ones(4), 0.0, 1.0)


@pytest.mark.parametrize("rho", [1e-3, 0.1, 1.0])
def test_normal_equation_residual(rng, rho):
    for _ in range(5):
        H = crandn(rng, (24, 24))
        r = crandn(rng, 24)
        s_hat = equalizer.lmmse_equalize(H, r, rho, 1.0)
        A = H.conj().T @ H + rho * np.eye(24)
        assert np.abs(A - A.conj().T).max() < 1e-12
        b = H.conj().T @ r
        assert np.linalg.norm(A @ s_hat - b) / np.linalg.norm(b) < 1e-10


def test_dd_demod_inverts_modulation(desk, rng):
    x = crandn(rng, (desk.N, desk.M))
    np.testing.assert_allclose(equalizer.dd_demod(modem.map_data_rows(x, desk)), x, atol=1e-13)
    assert not np.any(equalizer.dd_demod(np.zeros((desk.N, desk.M))))
    y = equalizer.dd_demod(x)
    assert np.linalg.norm(y) == pytest.approx(np.linalg.norm(x), rel=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_detect_frame_perfect_csi_noiseless(small, seed):
    rng = np.random.default_rng(seed)
    cfg = small.with_snr(200.0)
    ch = channel.jakes_draw(cfg, 50000 / 3.6, 3, rng)
    bits, x_d, S = modem.random_frame(cfg, rng)
    R = channel.oracle_receive_frame(S, ch, cfg)
    out, x_hat = equalizer.detect_frame(R, EstimatedCSI.from_realization(ch, DSE_AWARE), cfg,
                                        return_grid=True)
    np.testing.assert_array_equal(out, bits)
    assert np.abs(x_hat - x_d).max() < 1e-6
