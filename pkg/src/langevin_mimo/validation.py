"""Input checks shared by the estimator classes."""
import numpy as np


def check_channel(H):
    """Return ``H`` as a finite 2-D complex array."""
    H = np.asarray(H)
    if H.ndim != 2:
        raise ValueError(f"channel matrix must be 2-D, got shape {H.shape}")
    if H.size == 0:
        raise ValueError("channel matrix is empty")
    H = H.astype(complex, copy=False)
    if not np.all(np.isfinite(H)):
        raise ValueError("channel matrix contains NaN or inf")
    return H


def check_received(Y, n_rx):
    """Return ``(Y_2d, was_1d)`` with ``Y_2d`` of shape ``(n_samples, n_rx)``."""
    Y = np.asarray(Y)
    was_1d = Y.ndim == 1
    Y = np.atleast_2d(Y).astype(complex, copy=False)
    if Y.ndim != 2 or Y.shape[1] != n_rx:
        raise ValueError(
            f"received vectors must have {n_rx} entries (one per antenna), got shape {np.shape(Y)}"
        )
    if not np.all(np.isfinite(Y)):
        raise ValueError("received vectors contain NaN or inf")
    return Y, was_1d


def check_noise_variance(sigma0_sq):
    if sigma0_sq is None:
        raise ValueError("this detector needs the noise variance sigma0_sq")
    sigma0_sq = float(sigma0_sq)
    if not (np.isfinite(sigma0_sq) and sigma0_sq > 0):
        raise ValueError(f"sigma0_sq must be positive and finite, got {sigma0_sq!r}")
    return sigma0_sq


def check_random_state_seed(random_state):
    """Accept ``None`` (seed 0) or a non-negative integer below ``2**64``."""
    if random_state is None:
        return 0
    if isinstance(random_state, bool) or not isinstance(random_state, (int, np.integer)):
        raise TypeError("random_state must be an integer seed or None")
    if not 0 <= int(random_state) < 2**64:
        raise ValueError("random_state must fit in an unsigned 64-bit integer")
    return int(random_state)
