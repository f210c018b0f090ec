"""Score functions for annealed posterior sampling in the SVD domain.

All vectors live in the real-stacked representation.  The complex
perturbation ``CN(0, sigma_l^2)`` puts variance ``sigma_l^2 / 2`` on every
real coordinate, and the measurement noise likewise puts ``sigma0^2 / 2``
there.  Branch decisions compare ``sigma0`` with ``sigma_l * s_j`` where the
common factor cancels.

These are the readable reference implementations.  The compiled sampler in
:mod:`langevin_mimo._kernels` evaluates the same expressions and is tested
against them.
"""
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpectralState",
    "PINV_RTOL",
    "effective_variance",
    "likelihood_precision",
    "likelihood_score",
    "prior_denoiser",
    "prior_score",
    "mixture_log_density",
    "branch_masks",
    "posterior_score",
]

#: Relative cut-off of the diagonal pseudo-inverse, in units of sigma0^2.
PINV_RTOL = 1e-12


@dataclass(frozen=True)
class SpectralState:
    """Sampler iterate ``chi = V^T x_tilde`` and rotated observation ``eta = U^T y``."""

    chi: np.ndarray
    eta: np.ndarray
    level_index: int = 1

    def __post_init__(self):
        if not (np.all(np.isfinite(self.chi)) and np.all(np.isfinite(self.eta))):
            raise ValueError("spectral state has non-finite entries")
        if self.level_index < 1:
            raise ValueError("level_index is 1-based")


def effective_variance(sigma_l):
    """Per-real-dimension variance of a ``CN(0, sigma_l^2)`` perturbation."""
    return 0.5 * sigma_l**2


def _eta_head(eta, n):
    # only the first min(len(eta), n) rotated observations meet a singular value
    head = np.zeros(n)
    k = min(eta.size, n)
    head[:k] = eta[:k]
    return head


def likelihood_precision(singular_values, sigma0_sq, sigma_l):
    """Diagonal pseudo-inverse of the real-domain covariance ``|sigma0^2 - sigma_l^2 s^2| / 2``."""
    gap = np.abs(sigma0_sq - sigma_l**2 * singular_values**2)
    out = np.zeros_like(gap)
    ok = gap > PINV_RTOL * sigma0_sq
    out[ok] = 2.0 / gap[ok]
    return out


def likelihood_score(state, chan, sigma_l):
    """Gradient of the annealed likelihood with respect to ``chi``."""
    if not sigma_l > 0:
        raise ValueError("sigma_l must be positive")
    s = chan.singular_values
    eta = _eta_head(np.asarray(state.eta, dtype=float), s.size)
    prec = likelihood_precision(s, chan.sigma0_sq, sigma_l)
    return s * prec * (eta - s * state.chi)


def prior_denoiser(x_tilde, sigma_l, c):
    """Elementwise posterior mean of a PAM symbol observed in Gaussian noise.

    Uses the log-sum-exp shift so that far-away or very sharp inputs do not
    overflow.
    """
    if not sigma_l > 0:
        raise ValueError("sigma_l must be positive")
    x = np.asarray(x_tilde, dtype=float)
    a = c.pam_levels
    logits = -((x[..., None] - a) ** 2) / (2.0 * effective_variance(sigma_l))
    logits -= logits.max(axis=-1, keepdims=True)
    w = np.exp(logits)
    return (w @ a) / w.sum(axis=-1)


def prior_score(x_tilde, sigma_l, c):
    """Tweedie form of the smoothed-prior score: ``(E[x | x_tilde] - x_tilde) / var``."""
    x = np.asarray(x_tilde, dtype=float)
    return (prior_denoiser(x, sigma_l, c) - x) / effective_variance(sigma_l)


def mixture_log_density(x_tilde, sigma_l, c):
    """Log-density of a uniform PAM symbol plus ``N(0, sigma_l^2 / 2)`` noise, per coordinate."""
    x = np.asarray(x_tilde, dtype=float)
    var = effective_variance(sigma_l)
    a = c.pam_levels
    logits = -((x[..., None] - a) ** 2) / (2.0 * var)
    m = logits.max(axis=-1)
    lse = m + np.log(np.exp(logits - m[..., None]).sum(axis=-1))
    return lse - np.log(a.size) - 0.5 * np.log(2.0 * np.pi * var)


def branch_masks(singular_values, sigma0, sigma_l):
    """Boolean masks ``(both, likelihood_only, prior_only)`` of the combined score.

    Exactly one mask is true per coordinate.
    """
    s = np.asarray(singular_values)
    prior_only = s == 0
    lik_only = ~prior_only & (sigma0 < sigma_l * s)
    both = ~prior_only & ~lik_only
    return both, lik_only, prior_only


def posterior_score(state, chan, sigma_l, c):
    """Piecewise combination of likelihood and prior scores in spectral coordinates."""
    v = chan.svd_v
    x_tilde = v @ state.chi
    prior = v.T @ prior_score(x_tilde, sigma_l, c)
    lik = likelihood_score(state, chan, sigma_l)
    both, lik_only, prior_only = branch_masks(chan.singular_values, chan.sigma0, sigma_l)
    return np.where(both, lik + prior, np.where(lik_only, lik, prior))
