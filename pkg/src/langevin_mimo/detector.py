"""Annealed Langevin MIMO detector.

The sampler works on the spectral iterate ``chi = V^T x_tilde`` of the
real-stacked model.  For every noise level it runs a fixed number of
preconditioned Langevin steps whose diagonal step sizes depend on how the
level compares with each singular value of the channel, then snaps the final
``V chi`` onto the constellation.  Several independent trajectories are run
and the candidate with the smallest residual ``||y - H x||^2`` wins.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .channel import precompute_spectral, to_complex
from .constellation import quantize
from .score import PINV_RTOL, SpectralState, _eta_head, effective_variance, posterior_score

__all__ = [
    "AnnealingSchedule",
    "LangevinConfig",
    "DetectionResult",
    "DivergenceError",
    "make_schedule",
    "step_size_diag",
    "trajectory_rng",
    "run_trajectory",
    "detect",
]

#: Any spectral coordinate beyond this magnitude aborts the trajectory.
DIVERGENCE_BOUND = 1e3


class DivergenceError(RuntimeError):
    """A Langevin trajectory left the bounded region."""

    def __init__(self, level, step, trajectory=None):
        self.level = level
        self.step = step
        self.trajectory = trajectory
        where = f"level {level}, step {step}"
        if trajectory is not None:
            where = f"trajectory {trajectory}, " + where
        super().__init__(f"Langevin iterate diverged at {where}")


@dataclass(frozen=True)
class AnnealingSchedule:
    sigmas: tuple

    def __post_init__(self):
        sig = tuple(float(s) for s in self.sigmas)
        object.__setattr__(self, "sigmas", sig)
        if len(sig) < 1:
            raise ValueError("schedule needs at least one level")
        if not sig[-1] > 0:
            raise ValueError("the last noise level must be positive")
        if any(b >= a for a, b in zip(sig, sig[1:])):
            raise ValueError("noise levels must be strictly decreasing")

    def __len__(self):
        return len(self.sigmas)

    @property
    def sigma_first(self):
        return self.sigmas[0]

    @property
    def sigma_last(self):
        return self.sigmas[-1]


def make_schedule(sigma_first, sigma_last, n_levels):
    """Geometric noise levels from ``sigma_first`` down to ``sigma_last``, endpoints exact."""
    if isinstance(n_levels, bool) or not isinstance(n_levels, (int, np.integer)) or n_levels < 2:
        raise ValueError(f"n_levels must be an integer >= 2, got {n_levels!r}")
    if not sigma_first > sigma_last > 0:
        raise ValueError(
            f"need sigma_first > sigma_last > 0, got {sigma_first!r}, {sigma_last!r}"
        )
    ratio = sigma_last / sigma_first
    sig = [sigma_first * ratio ** (l / (n_levels - 1)) for l in range(n_levels)]
    sig[0], sig[-1] = float(sigma_first), float(sigma_last)
    return AnnealingSchedule(tuple(sig))


@dataclass(frozen=True)
class LangevinConfig:
    """Sampler hyper-parameters; the defaults are the published settings.

    ``epsilon = 0`` is accepted and freezes the iterate, which is useful only
    for testing.
    """

    epsilon: float = 3e-5
    steps_per_level: int = 70
    schedule: AnnealingSchedule = field(default_factory=lambda: make_schedule(1.0, 0.01, 20))
    n_trajectories: int = 40
    seed: int = 0

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon!r}")
        for name in ("steps_per_level", "n_trajectories"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.schedule, AnnealingSchedule):
            object.__setattr__(self, "schedule", AnnealingSchedule(tuple(self.schedule)))
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @classmethod
    def from_levels(cls, sigma_first=1.0, sigma_last=0.01, n_levels=20, **kwargs):
        return cls(schedule=make_schedule(sigma_first, sigma_last, n_levels), **kwargs)

    @property
    def n_iterations(self):
        return len(self.schedule) * self.steps_per_level


@dataclass(frozen=True, eq=False)
class DetectionResult:
    symbols: np.ndarray
    residual: float
    trajectory_index: int
    per_trajectory_residuals: np.ndarray
    candidates: np.ndarray = field(repr=False)

    def best_of(self, m):
        """Selection restricted to the first ``m`` trajectories."""
        if not 1 <= m <= self.candidates.shape[0]:
            raise ValueError(f"m must be in [1, {self.candidates.shape[0]}]")
        k = int(np.argmin(self.per_trajectory_residuals[:m]))
        return self.candidates[k]


def step_size_diag(sigma_l, singular_values, sigma0, epsilon, sigma_last):
    """Diagonal of the level-``l`` step-size matrix.

    Below the crossover ``sigma_l s_j <= sigma0`` the entry is
    ``eps sigma_l^2 / sigma_L (1 - sigma_l^2 s_j^2 / sigma0^2)``; above it
    ``eps / sigma_L (sigma_l^2 - sigma0^2 / s_j^2)``.  Both vanish at the
    crossover.
    """
    s = np.asarray(singular_values, dtype=float)
    low = sigma_l * s <= sigma0
    out = np.empty_like(s)
    out[low] = epsilon * sigma_l**2 / sigma_last * (1.0 - sigma_l**2 * s[low] ** 2 / sigma0**2)
    sh = s[~low]
    out[~low] = epsilon / sigma_last * (sigma_l**2 - sigma0**2 / sh**2)
    # roundoff at the crossover must not produce tiny negatives
    return np.maximum(out, 0.0)


def trajectory_rng(seed, index):
    """Independent generator for trajectory ``index`` under master ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


def _level_tables(chan, config, c):
    sigmas = np.asarray(config.schedule.sigmas)
    s = chan.singular_values
    lam = np.stack([
        step_size_diag(sig, s, chan.sigma0, config.epsilon, config.schedule.sigma_last)
        for sig in sigmas
    ])
    sig = sigmas[:, None]
    prior_only = s[None, :] == 0
    lik_only = ~prior_only & (chan.sigma0 < sig * s[None, :])
    gap = np.abs(chan.sigma0_sq - sig**2 * s[None, :] ** 2)
    prec = np.where(gap > PINV_RTOL * chan.sigma0_sq, 2.0 / np.where(gap > 0, gap, 1.0), 0.0)
    inv_var = 1.0 / effective_variance(sigmas)
    return {
        "lam": lam,
        "sqrt_2lam": np.sqrt(2.0 * lam),
        "lik_coef": np.where(prior_only, 0.0, s * prec),
        "prior_mask": (~lik_only).astype(float),
        "inv_var": inv_var,
        "b2": np.exp(-c.min_gap**2 * inv_var),
    }


def run_trajectory(eta, chan, config, c, rng, backend="compiled", tables=None):
    """One annealed Langevin trajectory; returns the final spectral iterate.

    ``backend="numpy"`` evaluates the reference score functions step by step
    and is bit-for-bit fed by the same random stream as the compiled path.
    """
    eta = np.asarray(eta, dtype=float)
    n = chan.singular_values.size
    chi = rng.uniform(-1.0, 1.0, n)
    if backend == "numpy":
        return _run_numpy(chi, eta, chan, config, c, rng)
    if backend != "compiled":
        raise ValueError(f"unknown backend {backend!r}")
    if tables is None:
        tables = _level_tables(chan, config, c)
    status, lvl, step = _kernels.run_levels(
        chi,
        _eta_head(eta, n),
        chan.singular_values,
        chan.svd_v,
        chan.svd_vt,
        c.pam_levels[0],
        c.min_gap,
        c.n_levels,
        tables["lam"],
        tables["sqrt_2lam"],
        tables["lik_coef"],
        tables["prior_mask"],
        tables["inv_var"],
        tables["b2"],
        config.steps_per_level,
        rng,
        DIVERGENCE_BOUND,
    )
    if status != _kernels.OK:
        raise DivergenceError(lvl + 1, step)
    return chi


def _run_numpy(chi, eta, chan, config, c, rng):
    s = chan.singular_values
    sigma_last = config.schedule.sigma_last
    for l, sig in enumerate(config.schedule.sigmas, start=1):
        lam = step_size_diag(sig, s, chan.sigma0, config.epsilon, sigma_last)
        noise_scale = np.sqrt(2.0 * lam)
        for t in range(config.steps_per_level):
            w = rng.standard_normal(chi.size)
            grad = posterior_score(SpectralState(chi, eta, l), chan, sig, c)
            chi = chi + lam * grad + noise_scale * w
            if not np.all(np.abs(chi) <= DIVERGENCE_BOUND):
                raise DivergenceError(l, t)
    return chi


def detect(y, H, sigma0_sq, config=None, c=None, n_jobs=1, chan=None):
    """Run ``config.n_trajectories`` trajectories and keep the best quantized candidate.

    Parameters
    ----------
    y : complex ndarray of shape (n_rx,)
    H : complex ndarray of shape (n_rx, n_users)
    sigma0_sq : float
        Complex noise variance.
    config : LangevinConfig, optional
    c : Constellation
    n_jobs : int
        Threads used across trajectories.  Output does not depend on it.
    chan : ChannelRealization, optional
        Precomputed spectral factors of ``H`` (skips the SVD).

    Returns
    -------
    DetectionResult
    """
    if c is None:
        raise ValueError("a constellation is required")
    config = config or LangevinConfig()
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    y = np.asarray(y, dtype=complex)
    if y.shape != (H.shape[0],):
        raise ValueError(f"y has shape {y.shape}, expected ({H.shape[0]},)")
    if chan is None:
        chan = precompute_spectral(H, sigma0_sq)
    eta = chan.spectral_observation(y)
    tables = _level_tables(chan, config, c)
    v = chan.svd_v

    def one(m):
        rng = trajectory_rng(config.seed, m)
        try:
            chi = run_trajectory(eta, chan, config, c, rng, tables=tables)
        except DivergenceError as err:
            raise DivergenceError(err.level, err.step, trajectory=m) from None
        return quantize(to_complex(v @ chi), c)

    m_total = config.n_trajectories
    if n_jobs > 1 and m_total > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            cands = list(pool.map(one, range(m_total)))
    else:
        cands = [one(m) for m in range(m_total)]
    cands = np.stack(cands)
    resid = np.sum(np.abs(y[None, :] - cands @ H.T) ** 2, axis=1)
    k = int(np.argmin(resid))
    return DetectionResult(
        symbols=cands[k],
        residual=float(resid[k]),
        trajectory_index=k,
        per_trajectory_residuals=resid,
        candidates=cands,
    )
