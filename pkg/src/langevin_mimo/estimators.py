"""scikit-learn style detector objects.

``fit(H, sigma0_sq)`` attaches channel state information and ``predict(Y)``
detects one symbol vector per row of ``Y``::

    det = LangevinDetector(modulation_order=16, n_trajectories=20, random_state=3)
    x_hat = det.fit(H, sigma0_sq).predict(y)

Hyper-parameters are plain constructor arguments, so ``get_params``,
``set_params`` and ``sklearn.base.clone`` behave as usual.  ``score`` returns
symbol accuracy, ``1 - SER``.
"""
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .baselines import detect_ml, detect_mmse, detect_zf, ML_SEARCH_LIMIT, ml_search_size
from .channel import precompute_spectral
from .constellation import make_qam
from .detector import LangevinConfig, detect, make_schedule
from .validation import (
    check_channel,
    check_noise_variance,
    check_random_state_seed,
    check_received,
)

__all__ = [
    "BaseDetector",
    "ZeroForcingDetector",
    "MMSEDetector",
    "MLDetector",
    "LangevinDetector",
    "row_seed",
]


def row_seed(seed, row):
    """64-bit seed for the ``row``-th received vector under ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(row),))
    return int(ss.generate_state(1, np.uint64)[0])


class BaseDetector(BaseEstimator):
    """Common ``fit``/``predict``/``score`` plumbing.

    Subclasses implement ``_detect_one(y)``.
    """

    _needs_noise_variance = False

    def __init__(self, modulation_order=16):
        self.modulation_order = modulation_order

    def fit(self, H, sigma0_sq=None):
        """Store the channel matrix and (where needed) the noise variance.

        Parameters
        ----------
        H : array-like of shape (n_rx, n_users)
            Complex channel matrix.
        sigma0_sq : float, optional
            Complex noise variance per receive antenna.

        Returns
        -------
        self
        """
        self.H_ = check_channel(H)
        self.n_rx_, self.n_users_ = self.H_.shape
        self.constellation_ = make_qam(self.modulation_order)
        if self._needs_noise_variance or sigma0_sq is not None:
            self.sigma0_sq_ = check_noise_variance(sigma0_sq)
        else:
            self.sigma0_sq_ = None
        self._post_fit()
        return self

    def _post_fit(self):
        pass

    def predict(self, Y):
        """Detected symbols, shape ``(n_users,)`` for 1-D input else ``(n_samples, n_users)``."""
        check_is_fitted(self, "H_")
        Y, was_1d = check_received(Y, self.n_rx_)
        out = np.stack([self._detect_one(y, i) for i, y in enumerate(Y)])
        return out[0] if was_1d else out

    def score(self, Y, X):
        """Symbol accuracy ``1 - SER`` against the transmitted vectors ``X``."""
        pred = np.atleast_2d(self.predict(Y))
        X = np.atleast_2d(np.asarray(X))
        if X.shape != pred.shape:
            raise ValueError(f"X has shape {X.shape}, expected {pred.shape}")
        return float(np.mean(pred == X))


class ZeroForcingDetector(BaseDetector):
    def _detect_one(self, y, i):
        return detect_zf(y, self.H_, self.constellation_)


class MMSEDetector(BaseDetector):
    _needs_noise_variance = True

    def _detect_one(self, y, i):
        return detect_mmse(y, self.H_, self.sigma0_sq_, self.constellation_)


class MLDetector(BaseDetector):
    """Exhaustive search; refuses problems with more than ``2**20`` candidates."""

    def _post_fit(self):
        size = ml_search_size(self.constellation_.order, self.n_users_)
        if size > ML_SEARCH_LIMIT:
            raise ValueError(
                f"exhaustive ML over {self.constellation_.order}^{self.n_users_} "
                f"candidates exceeds the limit of {ML_SEARCH_LIMIT}"
            )

    def _detect_one(self, y, i):
        return detect_ml(y, self.H_, self.constellation_)


class LangevinDetector(BaseDetector):
    """Annealed Langevin posterior sampler with best-of-M residual selection.

    Parameters
    ----------
    modulation_order : int, default=16
    epsilon : float, default=3e-5
        Step-size scale.
    steps_per_level : int, default=70
    n_levels : int, default=20
    sigma_first, sigma_last : float, default=1.0, 0.01
        Endpoints of the geometric noise schedule.
    n_trajectories : int, default=40
    random_state : int or None
        Row ``i`` of ``Y`` is detected with a seed derived from
        ``(random_state, i)``, so predictions are reproducible.
    n_jobs : int, default=1
        Threads across trajectories; results do not depend on it.
    """

    _needs_noise_variance = True

    def __init__(
        self,
        modulation_order=16,
        epsilon=3e-5,
        steps_per_level=70,
        n_levels=20,
        sigma_first=1.0,
        sigma_last=0.01,
        n_trajectories=40,
        random_state=None,
        n_jobs=1,
    ):
        self.modulation_order = modulation_order
        self.epsilon = epsilon
        self.steps_per_level = steps_per_level
        self.n_levels = n_levels
        self.sigma_first = sigma_first
        self.sigma_last = sigma_last
        self.n_trajectories = n_trajectories
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _config(self, seed):
        return LangevinConfig(
            epsilon=self.epsilon,
            steps_per_level=self.steps_per_level,
            schedule=make_schedule(self.sigma_first, self.sigma_last, self.n_levels),
            n_trajectories=self.n_trajectories,
            seed=seed,
        )

    def _post_fit(self):
        self._seed = check_random_state_seed(self.random_state)
        # validates hyper-parameters eagerly
        self._config(0)
        self.channel_ = precompute_spectral(self.H_, self.sigma0_sq_)
        self.results_ = []

    def predict(self, Y):
        check_is_fitted(self, "H_")
        self.results_ = []
        return super().predict(Y)

    def _detect_one(self, y, i):
        res = detect(
            y,
            self.H_,
            self.sigma0_sq_,
            self._config(row_seed(self._seed, i)),
            self.constellation_,
            n_jobs=self.n_jobs,
            chan=self.channel_,
        )
        self.results_.append(res)
        return res.symbols
