"""Fast invariant checks runnable from the command line (``langevin-mimo selftest``)."""
import numpy as np

from .baselines import detect_ml, detect_mmse, detect_zf
from .channel import ChannelParams, precompute_spectral, sample_kronecker, sample_noise, sigma0_sq_from_snr
from .constellation import make_qam, quantize
from .detector import LangevinConfig, detect, make_schedule, step_size_diag
from .score import SpectralState, likelihood_score, mixture_log_density, prior_score


def _fd(f, x, h=1e-6):
    g = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def check_qam_power():
    return all(abs(make_qam(k).average_power - 1) < 1e-12 for k in (4, 16, 64, 256))


def check_quantize_brute_force(rng):
    c = make_qam(16)
    p = rng.normal(size=500) + 1j * rng.normal(size=500)
    brute = c.complex_points[np.argmin(np.abs(p[:, None] - c.complex_points) ** 2, axis=1)]
    return np.array_equal(quantize(p, c), brute)


def check_likelihood_fd(rng):
    h = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
    chan = precompute_spectral(h, 0.3)
    eta = rng.normal(size=6)
    sig = 0.4
    s = chan.singular_values
    var = 0.5 * np.abs(chan.sigma0_sq - sig**2 * s**2)

    def logp(chi):
        r = eta[: s.size] - s * chi
        return -0.5 * np.sum(r**2 / var)

    chi = rng.normal(size=4)
    ana = likelihood_score(SpectralState(chi, eta), chan, sig)
    num = _fd(logp, chi)
    return np.max(np.abs(ana - num) / np.maximum(np.abs(num), 1e-8)) < 1e-5


def check_prior_fd(rng):
    c = make_qam(16)
    x = rng.normal(size=20)
    ok = True
    for sig in (0.1, 0.5):
        ana = prior_score(x, sig, c)
        num = _fd(lambda v: np.sum(mixture_log_density(v, sig, c)), x)
        ok &= np.max(np.abs(ana - num) / np.maximum(np.abs(num), 1e-3)) < 1e-4
    return bool(ok)


def check_step_size_boundary():
    s = np.array([2.0])
    lam = step_size_diag(0.25, s, 0.5, 3e-5, 0.01)
    return lam[0] == 0.0


def check_small_system(rng):
    c = make_qam(4)
    p = ChannelParams(4, 2)
    s0 = sigma0_sq_from_snr(30.0, p)
    cfg = LangevinConfig(schedule=make_schedule(1.0, 0.01, 10), steps_per_level=50, n_trajectories=10, seed=7)
    for _ in range(5):
        H = sample_kronecker(p, rng)
        x = c.complex_points[rng.integers(4, size=2)]
        y = H @ x + sample_noise(4, s0, rng)
        ml = detect_ml(y, H, c)
        r_ml = np.sum(np.abs(y - H @ ml) ** 2)
        for xh in (detect_zf(y, H, c), detect_mmse(y, H, s0, c), detect(y, H, s0, cfg, c).symbols):
            if np.sum(np.abs(y - H @ xh) ** 2) < r_ml - 1e-12:
                return False
    return True


CHECKS = {
    "qam_unit_power": lambda rng: check_qam_power(),
    "quantize_matches_brute_force": check_quantize_brute_force,
    "likelihood_score_finite_difference": check_likelihood_fd,
    "prior_score_finite_difference": check_prior_fd,
    "step_size_zero_at_crossover": lambda rng: check_step_size_boundary(),
    "ml_dominates_other_detectors": check_small_system,
}


def run_selftest(seed=0, echo=print):
    """Run every check; returns True when all pass."""
    rng = np.random.default_rng(seed)
    ok_all = True
    for name, fn in CHECKS.items():
        ok = bool(fn(rng))
        ok_all &= ok
        echo(f"{'PASS' if ok else 'FAIL'}  {name}")
    return ok_all
