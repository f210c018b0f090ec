import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from langevin_mimo.constellation import count_symbol_errors, make_qam, quantize


@pytest.mark.parametrize("order", [4, 16, 64, 256])
def test_unit_average_power(order):
    c = make_qam(order)
    assert abs(np.mean(np.abs(c.complex_points) ** 2) - 1.0) < 1e-12
    assert c.complex_points.size == order
    assert np.unique(c.complex_points).size == order


@pytest.mark.parametrize("order", [4, 16, 64, 256])
def test_levels_sorted_symmetric_and_cartesian(order):
    c = make_qam(order)
    a = c.pam_levels
    assert np.all(np.diff(a) > 0)
    np.testing.assert_allclose(a, -a[::-1], atol=0)
    # canonical order is row-major over (real index, imag index)
    expected = np.array([re + 1j * im for re in a for im in a])
    np.testing.assert_array_equal(c.complex_points, expected)
    # odd integers times one constant
    odd = a / a[-1] * (a.size - 1)
    np.testing.assert_allclose(odd, np.arange(-(a.size - 1), a.size, 2), atol=1e-12)


def test_qpsk_points():
    c = make_qam(4)
    want = {complex(sr, si) / np.sqrt(2) for sr in (-1, 1) for si in (-1, 1)}
    got = set(c.complex_points.tolist())
    assert len(got) == 4
    for w in want:
        assert min(abs(w - g) for g in got) < 1e-15


def test_qam16_levels_against_direct_average():
    grid = np.array([complex(a, b) for a in (-3, -1, 1, 3) for b in (-3, -1, 1, 3)])
    scale = np.sqrt(np.mean(np.abs(grid) ** 2))  # oracle: direct average of 16 magnitudes
    assert scale == pytest.approx(np.sqrt(10), abs=1e-14)
    np.testing.assert_allclose(make_qam(16).pam_levels, np.array([-3, -1, 1, 3]) / np.sqrt(10), atol=1e-15)


@pytest.mark.parametrize("bad", [6, 8, 32, 2, 0])
def test_rejects_non_square_orders(bad):
    with pytest.raises(ValueError, match="square QAM"):
        make_qam(bad)


def test_quantize_examples(qpsk):
    for s in qpsk.complex_points:
        assert quantize(s, qpsk) == s
    assert quantize(0.9 + 0.9j, qpsk) == pytest.approx((1 + 1j) / np.sqrt(2))
    # exact tie at the origin goes to the smallest canonical index
    dists = np.abs(qpsk.complex_points) ** 2
    assert np.ptp(dists) < 1e-15
    assert quantize(0j, qpsk) == qpsk.complex_points[0]


def test_quantize_rejects_non_finite(qpsk):
    with pytest.raises(ValueError):
        quantize(complex(np.nan, 0), qpsk)
    with pytest.raises(ValueError):
        quantize(np.array([1 + 1j, np.inf]), qpsk)


@pytest.mark.parametrize("order", [4, 16, 64, 256])
def test_quantize_matches_exhaustive_search(order, rng):
    c = make_qam(order)
    p = 1.3 * (rng.standard_normal(2000) + 1j * rng.standard_normal(2000))
    brute = c.complex_points[np.argmin(np.abs(p[:, None] - c.complex_points[None, :]) ** 2, axis=1)]
    np.testing.assert_array_equal(quantize(p, c), brute)


@settings(max_examples=200, deadline=None)
@given(
    order=st.sampled_from([4, 16, 64]),
    re=st.floats(-5, 5),
    im=st.floats(-5, 5),
)
def test_quantize_idempotent(order, re, im):
    c = make_qam(order)
    q = quantize(complex(re, im), c)
    assert quantize(q, c) == q


@settings(max_examples=200, deadline=None)
@given(
    order=st.sampled_from([4, 16, 64, 256]),
    k=st.integers(0, 255),
    fr=st.floats(-0.999, 0.999),
    fi=st.floats(-0.999, 0.999),
)
def test_quantize_recovers_symbol_within_half_gap(order, k, fr, fi):
    c = make_qam(order)
    s = c.complex_points[k % order]
    half = 0.5 * c.min_gap
    assert quantize(s + complex(fr * half, fi * half), c) == s


def test_count_symbol_errors():
    a = np.array([1, 2, 3, 4], dtype=complex)
    assert count_symbol_errors(a, a) == (0, 4)
    b = a.copy()
    b[2] = 7
    assert count_symbol_errors(b, a) == (1, 4)
    with pytest.raises(ValueError):
        count_symbol_errors([], [])
    with pytest.raises(ValueError, match="mismatch"):
        count_symbol_errors(a[:3], a)
