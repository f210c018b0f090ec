"""Compiled inner loop of the annealed Langevin sampler.

The kernel draws from a NumPy ``Generator`` inside numba, which reproduces
NumPy's own streams bit for bit, so a trajectory run here consumes random
numbers in exactly the order the pure NumPy reference does.

The PAM mixture weights are taken relative to the nearest level.  With level
spacing ``g``, offset ``d`` from the nearest level and per-dimension variance
``v``, neighbour ``j`` steps away has relative weight
``exp(j g d / v - j^2 g^2 / (2 v))``, so consecutive weights differ by a factor
``w_1 * b2^j`` with ``b2 = exp(-g^2 / v)``.  Every factor is at most one, which
keeps the recursion free of overflow and needs a single ``exp`` per coordinate.
"""
import math

import numba
import numpy as np

# status codes returned by run_levels
OK = 0
DIVERGED = 1

NEGLIGIBLE_LOG_WEIGHT = -40.0


@numba.njit(cache=True, nogil=True, fastmath=True)
def _matvec(a, x, out):
    n, m = a.shape
    for i in range(n):
        acc = 0.0
        for j in range(m):
            acc += a[i, j] * x[j]
        out[i] = acc


@numba.njit(cache=True, nogil=True)
def pam_denoise_score(x, lo, gap, k, inv_var, b2, out):
    """Tweedie score ``(E[a | x] - x) / v`` for a uniform, evenly spaced PAM alphabet."""
    half_exp = 0.5 * gap * gap * inv_var
    inv_gap = 1.0 / gap
    ginv = gap * inv_var
    kmax = k - 1
    for i in range(x.size):
        xi = x[i]
        t = (xi - lo) * inv_gap + 0.5
        if t < 1.0:
            c = 0
        else:
            c = int(t)
            if c > kmax:
                c = kmax
        ac = lo + c * gap
        d = xi - ac
        arg = ginv * abs(d) - half_exp
        if arg < NEGLIGIBLE_LOG_WEIGHT or kmax == 0:
            # neighbours carry < 1e-17 of the mass
            out[i] = (ac - xi) * inv_var
            continue
        # near-side neighbour weight is <= 1; far side follows from w_up * w_down = b2
        near = math.exp(arg)
        far = b2 / near
        if d >= 0.0:
            r_up = near
            r_dn = far
        else:
            r_up = far
            r_dn = near
        num = 0.0
        den = 1.0
        w = 1.0
        for j in range(1, kmax - c + 1):
            w *= r_up
            num += w * j
            den += w
            r_up *= b2
        w = 1.0
        for j in range(1, c + 1):
            w *= r_dn
            num -= w * j
            den += w
            r_dn *= b2
        out[i] = (ac - xi + gap * num / den) * inv_var


@numba.njit(cache=True, nogil=True)
def run_levels(chi, eta, s, v, vt, lo, gap, k, lam, sqrt_2lam, lik_coef, prior_mask,
               inv_var, b2, steps, rng, bound):
    """Advance ``chi`` in place through every level; returns (status, level, step).

    Per level ``l`` the arrays ``lam[l]``, ``sqrt_2lam[l]``, ``lik_coef[l]``
    (singular value times likelihood precision, zero where the likelihood is
    dropped) and ``prior_mask[l]`` fully describe the update.
    """
    n = chi.size
    x = np.empty(n)
    p = np.empty(n)
    q = np.empty(n)
    for lvl in range(lam.shape[0]):
        for t in range(steps):
            _matvec(v, chi, x)
            pam_denoise_score(x, lo, gap, k, inv_var[lvl], b2[lvl], p)
            _matvec(vt, p, q)
            for j in range(n):
                g = prior_mask[lvl, j] * q[j] + lik_coef[lvl, j] * (eta[j] - s[j] * chi[j])
                chi[j] = chi[j] + lam[lvl, j] * g + sqrt_2lam[lvl, j] * rng.standard_normal()
            for j in range(n):
                if not abs(chi[j]) <= bound:
                    return DIVERGED, lvl, t
    return OK, -1, -1
