"""scikit-learn style wrappers around the functional core.

``fit`` draws the seeded fading realizations (the common random numbers every
later call shares); ``transform``/``predict`` evaluate QoS quantities on rows of
exponent pairs or rates. ``X`` passed to ``fit`` is ignored: the channel model,
not a dataset, is what gets fitted.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .channel import ChannelConfig
from .effective_capacity import QosPair, epsilon_effective_capacity, optimal_reliability_exponent
from .error_exponent import approx_error_exponent, error_exponent
from .fbc_rate import FadingSamples, ergodic_capacity
from .montecarlo import MonteCarloSpec
from .qos_region import RegionQuery, pareto_boundary


class _ChannelModel(BaseEstimator):
    def __init__(self, n_tx=1, n_rx=1, power=1.0, distance=1.0, path_exponent=0.0,
                 noise_power=0.1, large_scale=1.0, blocklength=200, samples=10_000, seed=0):
        self.n_tx = n_tx
        self.n_rx = n_rx
        self.power = power
        self.distance = distance
        self.path_exponent = path_exponent
        self.noise_power = noise_power
        self.large_scale = large_scale
        self.blocklength = blocklength
        self.samples = samples
        self.seed = seed

    def _fit_channel(self):
        self.config_ = ChannelConfig(self.n_tx, self.n_rx, self.power, self.distance,
                                     self.path_exponent, self.noise_power, self.large_scale)
        self.mc_ = MonteCarloSpec(self.samples, self.seed)
        self.fading_ = FadingSamples.from_config(self.config_, self.mc_)
        self.capacity_ = ergodic_capacity(self.config_, self.mc_)

    def fit(self, X=None, y=None):
        self._fit_channel()
        return self


def _pairs(X):
    X = check_array(X, ensure_2d=True, dtype=float)
    if X.shape[1] != 2:
        raise ValueError(f"expected columns (theta_delay, theta_err), got {X.shape[1]} columns")
    return X


class EffectiveCapacityEstimator(TransformerMixin, _ChannelModel):
    """Maps rows ``(theta_delay, theta_err)`` to ``(log_mgf, ec_bits)``."""

    def transform(self, X):
        check_is_fitted(self, "fading_")
        X = _pairs(X)
        out = np.empty((X.shape[0], 2))
        for i, (theta, t_err) in enumerate(X):
            p = epsilon_effective_capacity(self.fading_, QosPair(theta, t_err), self.blocklength)
            out[i] = (p.log_mgf, p.ec)
        return out

    def predict(self, X):
        return self.transform(X)[:, 1]

    def optimal_reliability(self, theta_delay, **kwargs):
        check_is_fitted(self, "fading_")
        return optimal_reliability_exponent(self.fading_, theta_delay, self.blocklength, **kwargs)


class ErrorExponentEstimator(TransformerMixin, _ChannelModel):
    """Maps a column of rates (bits/use) to ``(theta_err, rho_star, theta_err_approx)``.

    The approximate exponent is NaN for rates above the capacity estimate.
    """

    def transform(self, X):
        check_is_fitted(self, "fading_")
        rates = check_array(X, ensure_2d=True, dtype=float)
        if rates.shape[1] != 1:
            raise ValueError("expected a single column of rates")
        out = np.empty((rates.shape[0], 3))
        c = self.capacity_.mean
        for i, r in enumerate(rates[:, 0]):
            res = error_exponent(self.config_, r, self.blocklength, self.mc_)
            approx = (approx_error_exponent(self.config_, r, self.blocklength, self.mc_, capacity=c)
                      if r <= c else np.nan)
            out[i] = (res.theta_err, res.rho_star, approx)
        return out


class QosRegionClassifier(ClassifierMixin, _ChannelModel):
    """Classifies ``(theta_delay, theta_err)`` rows as inside/outside the region at ``level``."""

    def __init__(self, n_tx=1, n_rx=1, power=1.0, distance=1.0, path_exponent=0.0,
                 noise_power=0.1, large_scale=1.0, blocklength=200, samples=10_000, seed=0,
                 level=-1.0):
        super().__init__(n_tx, n_rx, power, distance, path_exponent, noise_power,
                         large_scale, blocklength, samples, seed)
        self.level = level

    def fit(self, X=None, y=None):
        self.query_ = RegionQuery(self.level, self.blocklength)
        self._fit_channel()
        self.classes_ = np.array([False, True])
        return self

    def decision_function(self, X):
        """``u - log_mgf``: nonnegative inside the region."""
        check_is_fitted(self, "fading_")
        X = _pairs(X)
        lam = np.array([
            epsilon_effective_capacity(self.fading_, QosPair(t, e), self.blocklength).log_mgf
            for t, e in X
        ])
        return self.level - lam

    def predict(self, X):
        return self.decision_function(X) >= 0

    def boundary(self, theta_grid, **kwargs):
        check_is_fitted(self, "fading_")
        return pareto_boundary(self.fading_, self.query_, theta_grid, **kwargs)
