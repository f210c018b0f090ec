"""Square QAM alphabets, nearest-symbol quantization and symbol error counting.

Symbols are ordered canonically, row-major over ``(real_index, imag_index)``
with both PAM indices ascending.  Every tie in quantization resolves to the
smallest canonical index, which for square QAM is the same as resolving each
real dimension to its lower PAM level.
"""
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Constellation", "make_qam", "quantize", "quantize_real", "count_symbol_errors"]

SUPPORTED_ORDERS = (4, 16, 64, 256)


@dataclass(frozen=True, eq=False)
class Constellation:
    """Unit average power square QAM alphabet.

    Attributes
    ----------
    order : int
        Number of complex symbols ``K``.
    pam_levels : ndarray of shape (sqrt(K),)
        Per-dimension real alphabet, ascending and symmetric about zero.
    complex_points : ndarray of shape (K,)
        Canonically ordered complex symbols.
    """

    order: int
    pam_levels: np.ndarray
    complex_points: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.pam_levels.setflags(write=False)
        self.complex_points.setflags(write=False)

    @property
    def average_power(self):
        return float(np.mean(np.abs(self.complex_points) ** 2))

    @property
    def n_levels(self):
        return self.pam_levels.size

    @property
    def min_gap(self):
        """Distance between neighbouring PAM levels."""
        return float(self.pam_levels[1] - self.pam_levels[0])

    def index_of(self, symbols):
        """Canonical indices of (exact) constellation symbols."""
        symbols = np.asarray(symbols)
        ir = quantize_real(symbols.real, self, return_index=True)
        ii = quantize_real(symbols.imag, self, return_index=True)
        return ir * self.n_levels + ii


def make_qam(order):
    """Build the unit-power square QAM alphabet with ``order`` points.

    PAM levels are the odd integers ``-(sqrt(K)-1), ..., -1, 1, ..., sqrt(K)-1``
    scaled by one normalisation constant.

    Examples
    --------
    >>> make_qam(16).pam_levels * np.sqrt(10)
    array([-3., -1.,  1.,  3.])
    """
    if isinstance(order, bool) or not isinstance(order, (int, np.integer)):
        raise TypeError(f"QAM order must be an integer, got {order!r}")
    order = int(order)
    if order not in SUPPORTED_ORDERS:
        raise ValueError(
            f"unsupported QAM order {order}: only square QAM with "
            f"order in {SUPPORTED_ORDERS} is available"
        )
    m = int(round(np.sqrt(order)))
    odd = np.arange(-(m - 1), m, 2, dtype=float)
    # E|x|^2 = 2 * mean(odd^2) over the square grid
    scale = np.sqrt(2.0 * np.mean(odd**2))
    levels = odd / scale
    re, im = np.meshgrid(levels, levels, indexing="ij")
    points = (re + 1j * im).ravel()
    return Constellation(order=order, pam_levels=levels, complex_points=points)


def quantize_real(values, c, return_index=False):
    """Nearest PAM level for each real value, ties going to the lower level."""
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("cannot quantize non-finite values")
    levels = c.pam_levels
    midpoints = 0.5 * (levels[1:] + levels[:-1])
    idx = np.searchsorted(midpoints, values, side="left")
    if return_index:
        return idx
    return levels[idx]


def quantize(points, c):
    """Map complex point(s) to the nearest constellation symbol.

    The search is separable: each of the real and imaginary parts snaps to its
    nearest PAM level, which equals the exhaustive search over all ``K``
    complex symbols.
    """
    points = np.asarray(points)
    out = quantize_real(points.real, c) + 1j * quantize_real(points.imag, c)
    if out.ndim == 0:
        return complex(out)
    return out


def count_symbol_errors(estimate, truth):
    """Return ``(n_errors, n_total)`` for two equal-length symbol vectors."""
    estimate = np.ravel(np.asarray(estimate))
    truth = np.ravel(np.asarray(truth))
    if estimate.shape != truth.shape:
        raise ValueError(
            f"length mismatch: estimate has {estimate.size} symbols, "
            f"truth has {truth.size}"
        )
    if truth.size == 0:
        raise ValueError("cannot count symbol errors on empty vectors")
    return int(np.count_nonzero(estimate != truth)), int(truth.size)
