"""Gallager-type error-rate exponent for the block-fading MIMO channel.

Exponents are in nats per channel use. Rates passed in are bits per channel
use and are converted before they meet an exponent. Every expectation of
``det(...)**(-n*rho)`` is accumulated in the log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelConfig, average_snr, eigen_snrs
from .errors import DomainError
from .fbc_rate import LN2, ergodic_capacity
from .montecarlo import (
    MonteCarloEstimate,
    MonteCarloSpec,
    eigenvalue_samples,
    log_mean_estimate,
    variance_of_log_eigen_product,
)
from .numerics import golden_section_max


@dataclass(frozen=True)
class ExponentResult:
    theta_err: float
    rho_star: float
    e0_at_rho_star: float
    rate: float = 0.0
    stderr: float = 0.0


def _check_rho(rho):
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"rho must lie in [0, 1], got {rho!r}")


def _e0_from_snrs(g, rho, n, spec) -> MonteCarloEstimate:
    # log det(I + g/(1+rho)) per realization, then log-mean of exp(-n*rho*logdet)
    logdet = np.log1p(g / (1.0 + rho)).sum(axis=-1)
    est = log_mean_estimate(-n * rho * logdet, spec)
    return MonteCarloEstimate(-est.mean / n, est.stderr / n, est.samples, est.seed)


def gallager_e0_estimate(config: ChannelConfig, rho: float, n: int,
                         mc: MonteCarloSpec) -> MonteCarloEstimate:
    _check_rho(rho)
    g = eigen_snrs(config, eigenvalue_samples(config, mc))
    return _e0_from_snrs(g, rho, n, mc)


def gallager_e0(config: ChannelConfig, rho: float, n: int, mc: MonteCarloSpec) -> float:
    """``-(1/n) log E[det(I + SNR/(n_tx (1+rho)) H H^H)**(-n rho)]``."""
    return gallager_e0_estimate(config, rho, n, mc).mean


def error_exponent(config: ChannelConfig, rate: float, n: int, mc: MonteCarloSpec,
                   rho_tol: float = 1e-4) -> ExponentResult:
    """Supremum over ``rho in [0, 1]`` of ``E0(rho) - rho * rate``.

    The realization stream is shared by every ``rho``, so the objective is a
    deterministic (and concave) function and golden-section search applies.
    """
    if not rate >= 0:
        raise DomainError(f"rate must be nonnegative, got {rate!r}")
    g = eigen_snrs(config, eigenvalue_samples(config, mc))
    rate_nats = rate * LN2

    def objective(rho):
        return _e0_from_snrs(g, rho, n, mc).mean - rho * rate_nats

    rho, value = golden_section_max(objective, 0.0, 1.0, tol=rho_tol)
    if value <= 0.0:
        rho, value = 0.0, 0.0
    e0 = _e0_from_snrs(g, rho, n, mc)
    return ExponentResult(float(value), float(rho), e0.mean, float(rate), e0.stderr)


def high_snr_e0(config: ChannelConfig, rho: float, n: int, mc: MonteCarloSpec,
                min_snr: float = 100.0) -> MonteCarloEstimate:
    """High-SNR form of :func:`gallager_e0` (identity term dropped from the det).

    ``-rho m log(1 + rho) - (1/n) log E[(prod_i lambda_i SNR / n_tx)**(-n rho)]``
    with ``m = min(n_tx, n_rx)``. Samples with a zero eigenvalue make the
    integrand infinite; they are counted in ``diagnostics``.
    """
    _check_rho(rho)
    snr = average_snr(config)
    if snr < min_snr:
        raise DomainError(f"high-SNR form needs SNR >= {min_snr}, got {snr:.4g}")
    eig = eigenvalue_samples(config, mc)
    zero = int(np.count_nonzero((eig == 0).any(axis=1)))
    if rho == 0.0:
        return MonteCarloEstimate(0.0, 0.0, eig.shape[0], mc.seed, {"zero_eigenvalue": zero})
    with np.errstate(divide="ignore"):
        log_prod = np.log(eig * (snr / config.n_tx)).sum(axis=1)
    est = log_mean_estimate(-n * rho * log_prod, mc)
    value = -rho * config.n_modes * math.log1p(rho) - est.mean / n
    return MonteCarloEstimate(value, est.stderr / n, est.samples, mc.seed, {"zero_eigenvalue": zero})


def approx_error_exponent(config: ChannelConfig, rate: float, n: int, mc: MonteCarloSpec,
                          capacity: float | None = None) -> float:
    """Closed-form high-SNR approximation of the exponent.

    ``(C - R)**2 / (2 * (2 n_rx + n * Var[log prod_i lambda_i SNR]))`` with the
    gap ``C - R`` taken in nats and ``C`` the ergodic capacity estimate.
    """
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    c = ergodic_capacity(config, mc).mean if capacity is None else capacity
    if rate > c:
        raise DomainError(f"rate {rate:.6g} exceeds capacity {c:.6g}")
    var = variance_of_log_eigen_product(config, mc).mean
    gap = (c - rate) * LN2
    return gap * gap / (2.0 * (2.0 * config.n_rx + n * var))


def error_prob_bound(theta_err, n: int):
    """``exp(-n * theta_err)``."""
    if np.any(np.asarray(theta_err) < 0):
        raise DomainError("theta_err must be nonnegative")
    out = np.exp(-n * np.asarray(theta_err, dtype=float))
    return float(out) if np.ndim(out) == 0 else out
