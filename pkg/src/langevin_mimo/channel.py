"""Kronecker-correlated Rayleigh channels and the real-valued equivalent model.

Complex quantities follow the usual circular convention: a ``CN(0, v)``
entry has real and imaginary parts that are each ``N(0, v / 2)``.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "ChannelParams",
    "ChannelRealization",
    "exp_corr_matrix",
    "sqrtm_psd",
    "sample_kronecker",
    "sigma0_sq_from_snr",
    "sample_noise",
    "to_real_model",
    "to_complex",
    "precompute_spectral",
]


@dataclass(frozen=True)
class ChannelParams:
    n_rx: int
    n_users: int
    rho: float = 0.0

    def __post_init__(self):
        for name in ("n_rx", "n_users"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must lie in [0, 1), got {self.rho!r}")


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Channel matrix together with the SVD of its real-equivalent form.

    ``singular_values`` always has length ``2 * n_users``; when the real form
    has fewer than ``2 * n_users`` rows the trailing entries are zero.
    """

    h_complex: np.ndarray
    h_real: np.ndarray
    svd_u: np.ndarray
    svd_v: np.ndarray
    singular_values: np.ndarray
    sigma0_sq: float

    def __post_init__(self):
        for arr in (self.h_complex, self.h_real, self.svd_u, self.svd_v, self.singular_values):
            arr.setflags(write=False)

    @property
    def n_rx(self):
        return self.h_complex.shape[0]

    @property
    def n_users(self):
        return self.h_complex.shape[1]

    @cached_property
    def svd_vt(self):
        return np.ascontiguousarray(self.svd_v.T)

    @property
    def sigma0(self):
        return float(np.sqrt(self.sigma0_sq))

    def spectral_observation(self, y):
        """Rotate a received vector: ``eta = U^T [Re y; Im y]``."""
        y = np.asarray(y)
        if y.shape != (self.n_rx,):
            raise ValueError(f"y must have shape ({self.n_rx},), got {y.shape}")
        return self.svd_u.T @ np.concatenate([y.real, y.imag])


def exp_corr_matrix(n, rho):
    """Exponential correlation matrix with entries ``rho ** |i - j|``."""
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho!r}")
    idx = np.arange(n)
    return float(rho) ** np.abs(idx[:, None] - idx[None, :])


def sqrtm_psd(a):
    """Symmetric square root of a symmetric PSD matrix (eigenvalues clamped at 0)."""
    w, q = np.linalg.eigh(a)
    return (q * np.sqrt(np.clip(w, 0.0, None))) @ q.T


def sample_kronecker(params, rng, r_rx_sqrt=None, r_u_sqrt=None):
    """Draw ``H = R_r^{1/2} H_e R_u^{1/2}`` with ``H_e`` entries ``CN(0, 1 / n_rx)``.

    The ``1 / n_rx`` scale makes ``E||Hx||^2 / E||z||^2 = n_users / (sigma0^2 n_rx)``
    for unit-power symbols.  Precomputed square roots may be passed to avoid
    repeated eigendecompositions in sweeps.
    """
    nr, nu = params.n_rx, params.n_users
    std = np.sqrt(0.5 / nr)
    h_e = std * (rng.standard_normal((nr, nu)) + 1j * rng.standard_normal((nr, nu)))
    if params.rho == 0.0:
        return h_e
    if r_rx_sqrt is None:
        r_rx_sqrt = sqrtm_psd(exp_corr_matrix(nr, params.rho))
    if r_u_sqrt is None:
        r_u_sqrt = sqrtm_psd(exp_corr_matrix(nu, params.rho))
    return r_rx_sqrt @ h_e @ r_u_sqrt


def sigma0_sq_from_snr(snr_db, params):
    """Complex noise variance giving ``SNR = n_users / (sigma0^2 n_rx)``."""
    if not np.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite, got {snr_db!r}")
    return params.n_users / (10.0 ** (snr_db / 10.0) * params.n_rx)


def sample_noise(n_rx, sigma0_sq, rng):
    if sigma0_sq <= 0:
        raise ValueError(f"sigma0_sq must be positive, got {sigma0_sq!r}")
    std = np.sqrt(0.5 * sigma0_sq)
    return std * (rng.standard_normal(n_rx) + 1j * rng.standard_normal(n_rx))


def to_real_model(h, y=None, x=None):
    """Stack a complex model into real arithmetic.

    Returns ``([[Re H, -Im H], [Im H, Re H]], [Re y; Im y], [Re x; Im x])``;
    absent vectors come back as ``None``.
    """
    h = np.atleast_2d(np.asarray(h))
    nr, nu = h.shape
    h_r = np.block([[h.real, -h.imag], [h.imag, h.real]])
    y_r = x_r = None
    if y is not None:
        y = np.asarray(y)
        if y.shape != (nr,):
            raise ValueError(f"y must have shape ({nr},) to match H, got {y.shape}")
        y_r = np.concatenate([y.real, y.imag])
    if x is not None:
        x = np.asarray(x)
        if x.shape != (nu,):
            raise ValueError(f"x must have shape ({nu},) to match H, got {x.shape}")
        x_r = np.concatenate([x.real, x.imag])
    return h_r, y_r, x_r


def to_complex(v):
    """Inverse of the vector stacking; works on the last axis."""
    v = np.asarray(v)
    if v.shape[-1] % 2:
        raise ValueError("real-stacked vectors must have even length")
    n = v.shape[-1] // 2
    return v[..., :n] + 1j * v[..., n:]


def precompute_spectral(h, sigma0_sq):
    """SVD of the real-equivalent channel, packaged as a :class:`ChannelRealization`."""
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    if not np.all(np.isfinite(h)):
        raise ValueError("channel matrix has non-finite entries")
    if not sigma0_sq > 0:
        raise ValueError(f"sigma0_sq must be positive, got {sigma0_sq!r}")
    h_r, _, _ = to_real_model(h)
    u, s, vt = np.linalg.svd(h_r, full_matrices=True)
    n = h_r.shape[1]
    sv = np.zeros(n)
    sv[: s.size] = s
    return ChannelRealization(
        h_complex=h,
        h_real=h_r,
        svd_u=u,
        svd_v=vt.T.copy(),
        singular_values=sv,
        sigma0_sq=float(sigma0_sq),
    )
