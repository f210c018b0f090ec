import itertools

import numpy as np
import pytest

from langevin_mimo.baselines import (
    detect_ml,
    detect_mmse,
    detect_zf,
    mmse_estimate,
    zf_estimate,
)
from langevin_mimo.channel import sample_noise
from langevin_mimo.constellation import make_qam, quantize
from langevin_mimo.detector import LangevinConfig, detect, make_schedule
from conftest import random_channel


def residual(y, H, x):
    return float(np.sum(np.abs(y - H @ x) ** 2))


def test_zf_identity_and_noiseless(qam16, rng):
    x = qam16.complex_points[rng.integers(16, size=4)]
    np.testing.assert_array_equal(detect_zf(x, np.eye(4), qam16), x)
    H = random_channel(rng, 8, 4)
    np.testing.assert_array_equal(detect_zf(H @ x, H, qam16), x)


def test_zf_rank_deficient_uses_min_norm_solution(qpsk, rng):
    col = random_channel(rng, 4, 1)
    H = np.hstack([col, col])
    y = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    # oracle: minimum-norm least squares through the pseudo-inverse
    oracle = np.linalg.pinv(H) @ y
    np.testing.assert_allclose(zf_estimate(y, H), oracle, atol=1e-12)
    out = detect_zf(y, H, qpsk)
    assert np.all(np.isin(out, qpsk.complex_points))


def test_mmse_linear_estimate_matches_dense_solve(rng):
    H = random_channel(rng, 4, 2)
    y = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    s0 = 0.3
    # oracle: augmented least squares [H; sqrt(s0) I] x = [y; 0]
    A = np.vstack([H, np.sqrt(s0) * np.eye(2)])
    b = np.concatenate([y, np.zeros(2)])
    oracle = np.linalg.lstsq(A, b, rcond=None)[0]
    np.testing.assert_allclose(mmse_estimate(y, H, s0), oracle, atol=1e-10)


def test_mmse_limits(qam16, rng):
    H = random_channel(rng, 8, 4)
    assert np.linalg.cond(H) < 1e3
    for _ in range(50):
        y = H @ qam16.complex_points[rng.integers(16, size=4)] + sample_noise(8, 0.01, rng)
        np.testing.assert_array_equal(detect_mmse(y, H, 1e-12, qam16), detect_zf(y, H, qam16))
    est = mmse_estimate(y, H, 1e12)
    assert np.max(np.abs(est)) < 1e-9
    # a vanishing estimate sits on the four-way tie at the origin
    d = np.abs(qam16.complex_points) ** 2
    inner = qam16.complex_points[np.isclose(d, d.min())]
    assert np.all(np.isin(detect_mmse(y, H, 1e12, qam16), inner))
    assert quantize(0j, qam16) == qam16.complex_points[np.argmin(d)]
    with pytest.raises(ValueError):
        detect_mmse(y, H, 0.0, qam16)


def test_ml_noiseless_recovery(qam16, rng):
    H = random_channel(rng, 4, 2)
    x = qam16.complex_points[rng.integers(16, size=2)]
    np.testing.assert_array_equal(detect_ml(H @ x, H, qam16), x)


def test_ml_scalar_positive_channel_equals_quantizer(qpsk, rng):
    for _ in range(50):
        h = rng.uniform(0.2, 3.0)
        y = rng.standard_normal(1) + 1j * rng.standard_normal(1)
        np.testing.assert_array_equal(detect_ml(y, np.array([[h]]), qpsk), quantize(y / h, qpsk))


def test_ml_matches_independent_enumeration(rng):
    c = make_qam(16)
    H = random_channel(rng, 3, 2)
    y = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    best = min(
        itertools.product(c.complex_points, repeat=2),
        key=lambda cand: residual(y, H, np.array(cand)),
    )
    np.testing.assert_array_equal(detect_ml(y, H, c), np.array(best))


def test_ml_tie_goes_to_first_candidate(qpsk):
    # a zero channel makes every candidate tie
    out = detect_ml(np.zeros(2, dtype=complex), np.zeros((2, 2), dtype=complex), qpsk)
    np.testing.assert_array_equal(out, [qpsk.complex_points[0]] * 2)


def test_ml_search_guard(qam16):
    with pytest.raises(ValueError, match="limit"):
        detect_ml(np.zeros(8, dtype=complex), np.ones((8, 6)), qam16)


def test_ml_dominates_other_detectors(qpsk, rng):
    cfg = LangevinConfig(schedule=make_schedule(1, 0.01, 10), steps_per_level=30, n_trajectories=5)
    for i in range(30):
        H = random_channel(rng, 4, 2)
        y = H @ qpsk.complex_points[rng.integers(4, size=2)] + sample_noise(4, 0.3, rng)
        r_ml = residual(y, H, detect_ml(y, H, qpsk))
        others = [
            detect_zf(y, H, qpsk),
            detect_mmse(y, H, 0.3, qpsk),
            detect(y, H, 0.3, LangevinConfig(**{**cfg.__dict__, "seed": i}), qpsk).symbols,
        ]
        for xh in others:
            assert np.all(np.isin(xh, qpsk.complex_points))
            assert r_ml <= residual(y, H, xh) + 1e-12
