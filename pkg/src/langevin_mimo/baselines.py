"""Classical reference detectors: zero forcing, linear MMSE and exhaustive ML."""
import itertools

import numpy as np

from .constellation import quantize

__all__ = ["ML_SEARCH_LIMIT", "zf_estimate", "mmse_estimate", "detect_zf", "detect_mmse", "detect_ml"]

#: Largest number of candidate vectors the exhaustive search accepts.
ML_SEARCH_LIMIT = 2**20

_ML_CHUNK = 1 << 14


def _check(y, H):
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    y = np.asarray(y, dtype=complex)
    if y.shape != (H.shape[0],):
        raise ValueError(f"y has shape {y.shape}, expected ({H.shape[0]},)")
    return y, H


def zf_estimate(y, H):
    """Minimum-norm least-squares solution ``H^+ y``."""
    y, H = _check(y, H)
    return np.linalg.lstsq(H, y, rcond=None)[0]


def mmse_estimate(y, H, sigma0_sq):
    """``(H^H H + sigma0^2 I)^{-1} H^H y`` for unit-energy symbols."""
    if not sigma0_sq > 0:
        raise ValueError(f"sigma0_sq must be positive, got {sigma0_sq!r}")
    y, H = _check(y, H)
    hh = H.conj().T
    gram = hh @ H + sigma0_sq * np.eye(H.shape[1])
    return np.linalg.solve(gram, hh @ y)


def detect_zf(y, H, c):
    return quantize(zf_estimate(y, H), c)


def detect_mmse(y, H, sigma0_sq, c):
    return quantize(mmse_estimate(y, H, sigma0_sq), c)


def ml_search_size(order, n_users):
    return order**n_users


def detect_ml(y, H, c):
    """Exhaustive minimiser of ``||y - Hx||^2`` over all symbol vectors.

    Candidates are visited in lexicographic canonical order and only a strictly
    smaller residual replaces the running best, so ties go to the earliest
    candidate.
    """
    y, H = _check(y, H)
    nu = H.shape[1]
    size = ml_search_size(c.order, nu)
    if size > ML_SEARCH_LIMIT:
        raise ValueError(
            f"exhaustive ML over {c.order}^{nu} candidates exceeds the limit of {ML_SEARCH_LIMIT}"
        )
    pts = c.complex_points
    best, best_res = None, np.inf
    combos = itertools.product(range(c.order), repeat=nu)
    while True:
        block = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(combos, _ML_CHUNK)), dtype=np.intp
        )
        if block.size == 0:
            break
        cand = pts[block.reshape(-1, nu)]
        res = np.sum(np.abs(y[None, :] - cand @ H.T) ** 2, axis=1)
        k = int(np.argmin(res))
        if res[k] < best_res:
            best_res, best = res[k], cand[k]
    return best.copy()
