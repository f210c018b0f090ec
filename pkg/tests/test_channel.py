import numpy as np
import pytest
from scipy import stats

from langevin_mimo.channel import (
    ChannelParams,
    exp_corr_matrix,
    precompute_spectral,
    sample_kronecker,
    sample_noise,
    sigma0_sq_from_snr,
    to_complex,
    to_real_model,
)
from conftest import random_channel


def test_exp_corr_examples():
    np.testing.assert_array_equal(exp_corr_matrix(3, 0.0), np.eye(3))
    np.testing.assert_allclose(exp_corr_matrix(2, 0.6), [[1.0, 0.6], [0.6, 1.0]], atol=0)
    np.testing.assert_array_equal(exp_corr_matrix(1, 0.9), [[1.0]])


@pytest.mark.parametrize("rho", [-0.1, 1.0, 1.2])
def test_exp_corr_rejects_bad_rho(rho):
    with pytest.raises(ValueError):
        exp_corr_matrix(3, rho)


@pytest.mark.parametrize("n,rho", [(8, 0.6), (64, 0.6), (32, 0.95), (5, 0.0)])
def test_exp_corr_is_psd(n, rho):
    r = exp_corr_matrix(n, rho)
    np.testing.assert_array_equal(r, r.T)
    assert np.linalg.eigvalsh(r).min() >= -1e-12


def test_channel_params_validation():
    with pytest.raises(ValueError, match="rho"):
        ChannelParams(4, 2, 1.2)
    with pytest.raises(ValueError, match="n_rx"):
        ChannelParams(0, 2)


def _draws(params, n_mats, rng):
    return np.stack([sample_kronecker(params, rng) for _ in range(n_mats)])


def test_iid_entry_variance_is_one_over_n_rx(rng):
    p = ChannelParams(4, 2, 0.0)
    h = _draws(p, 12500, rng)  # 1e5 entries
    assert np.mean(np.abs(h) ** 2) == pytest.approx(1 / 4, rel=0.05)


def test_scalar_channel_unit_power(rng):
    p = ChannelParams(1, 1, 0.0)
    h = _draws(p, 100_000, rng)
    assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, rel=0.05)


def test_kronecker_correlation_structure(rng):
    p = ChannelParams(3, 3, 0.6)
    h = _draws(p, 100_000, rng)
    power = np.mean(np.abs(h) ** 2)
    for i in range(3):
        for j in range(3):
            rx = np.mean(h[:, i, 0] * h[:, j, 0].conj()) / power
            tx = np.mean(h[:, 0, i] * h[:, 0, j].conj()) / power
            want = 0.6 ** abs(i - j)
            assert rx.real == pytest.approx(want, rel=0.05)
            assert tx.real == pytest.approx(want, rel=0.05)
            assert abs(rx.imag) < 0.02 and abs(tx.imag) < 0.02


def test_rayleigh_marginals_are_gaussian(rng):
    h = _draws(ChannelParams(8, 4, 0.6), 2000, rng)
    for part in (h.real, h.imag):
        for idx in [(0, 0), (3, 2), (7, 3)]:
            assert stats.normaltest(part[:, idx[0], idx[1]]).pvalue > 0.01


def test_sigma0_from_snr_examples():
    assert sigma0_sq_from_snr(0, ChannelParams(64, 32)) == pytest.approx(0.5, abs=1e-15)
    assert sigma0_sq_from_snr(10, ChannelParams(64, 32)) == pytest.approx(0.05, rel=1e-14)
    assert sigma0_sq_from_snr(0, ChannelParams(8, 8)) == 1.0
    with pytest.raises(ValueError):
        sigma0_sq_from_snr(np.inf, ChannelParams(8, 8))


def test_noise_statistics(rng):
    z = sample_noise(1_000_000, 0.5, rng)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(0.5, rel=0.03)
    se = np.sqrt(0.5 / z.size)
    assert abs(z.mean().real) < 3 * se and abs(z.mean().imag) < 3 * se
    z1 = sample_noise(1_000_000, 1.0, rng)
    assert np.var(z1.real) == pytest.approx(0.5, rel=0.03)
    with pytest.raises(ValueError):
        sample_noise(4, 0.0, rng)


@pytest.mark.parametrize("rho", [0.0, 0.6])
def test_snr_definition_holds_empirically(rho, qam16, rng):
    p = ChannelParams(16, 8, rho)
    snr_db = 7.0
    s0 = sigma0_sq_from_snr(snr_db, p)
    sig, noise = 0.0, 0.0
    for _ in range(10_000):
        H = sample_kronecker(p, rng)
        x = qam16.complex_points[rng.integers(16, size=8)]
        sig += np.sum(np.abs(H @ x) ** 2)
        noise += np.sum(np.abs(sample_noise(16, s0, rng)) ** 2)
    assert sig / noise == pytest.approx(10 ** (snr_db / 10), rel=0.05)


def test_to_real_model_examples():
    h_r, y_r, x_r = to_real_model(np.array([[1.0 + 0j]]), np.array([1j]))
    np.testing.assert_array_equal(h_r, [[1, 0], [0, 1]])
    np.testing.assert_array_equal(y_r, [0, 1])
    assert x_r is None
    h_r, _, _ = to_real_model(np.array([[1j]]))
    np.testing.assert_array_equal(h_r, [[0, -1], [1, 0]])


def test_real_model_preserves_forward_model(rng):
    H = random_channel(rng, 3, 2)
    x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    z = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    y = H @ x + z
    h_r, y_r, x_r = to_real_model(H, y, x)
    _, z_r, _ = to_real_model(H, z)
    np.testing.assert_allclose(h_r @ x_r + z_r, y_r, atol=1e-13)
    np.testing.assert_array_equal(to_complex(to_real_model(H, None, x)[2]), x)
    # real -> complex -> real is the identity
    v = rng.standard_normal(4)
    np.testing.assert_array_equal(to_real_model(H, None, to_complex(v))[2], v)


def test_to_real_model_dimension_mismatch():
    with pytest.raises(ValueError):
        to_real_model(np.eye(3), np.ones(2))
    with pytest.raises(ValueError):
        to_real_model(np.eye(3), None, np.ones(4))


def test_spectral_identity():
    chan = precompute_spectral(np.eye(3, dtype=complex), 0.1)
    np.testing.assert_allclose(chan.singular_values, np.ones(6), atol=1e-14)


def test_spectral_diag_against_eigenvalues():
    H = np.diag([2.0, 1.0]).astype(complex)
    chan = precompute_spectral(H, 0.1)
    h_r, _, _ = to_real_model(H)
    oracle = np.sqrt(np.sort(np.linalg.eigvalsh(h_r.T @ h_r))[::-1])
    np.testing.assert_allclose(chan.singular_values, oracle, atol=1e-14)
    np.testing.assert_allclose(chan.singular_values, [2, 2, 1, 1], atol=1e-14)


@pytest.mark.parametrize("shape", [(4, 2), (16, 8), (3, 3), (2, 4)])
def test_spectral_invariants(shape, rng):
    H = random_channel(rng, *shape)
    chan = precompute_spectral(H, 0.2)
    nr, nu = shape
    u, v, s = chan.svd_u, chan.svd_v, chan.singular_values
    assert u.shape == (2 * nr, 2 * nr) and v.shape == (2 * nu, 2 * nu) and s.shape == (2 * nu,)
    sigma = np.zeros((2 * nr, 2 * nu))
    k = min(2 * nr, 2 * nu)
    sigma[np.arange(k), np.arange(k)] = s[:k]
    err = np.linalg.norm(u @ sigma @ v.T - chan.h_real) / np.linalg.norm(chan.h_real)
    assert err < 1e-10
    np.testing.assert_allclose(u.T @ u, np.eye(2 * nr), atol=1e-10)
    np.testing.assert_allclose(v.T @ v, np.eye(2 * nu), atol=1e-10)
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
    if nr < nu:
        assert np.all(s[2 * nr:] == 0)


def test_spectral_rejects_bad_input():
    with pytest.raises(ValueError):
        precompute_spectral(np.array([[np.nan + 0j]]), 0.1)
    with pytest.raises(ValueError):
        precompute_spectral(np.eye(2), 0.0)


def test_realization_is_read_only(rng):
    chan = precompute_spectral(random_channel(rng, 4, 2), 0.1)
    with pytest.raises(ValueError):
        chan.singular_values[0] = 0.0
