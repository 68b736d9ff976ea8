"""Capacity, dispersion and the normal approximation of the coding rate.

Rates are in bits per channel use. The conditional dispersion treats the MIMO
channel, given its eigenvalues, as parallel Gaussian sub-channels with
Gaussian inputs: ``V = sum_i (1 - (1 + g_i)**-2) * log2(e)**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, erfc, ndtri, ndtri_exp

from .channel import ChannelConfig, EigenSample, average_snr, eigen_snrs
from .errors import DomainError, InfeasibleTargetError
from .montecarlo import MonteCarloEstimate, MonteCarloSpec, eigenvalue_samples, summarize
from .numerics import bisect_increasing

LOG2E = math.log2(math.e)
LN2 = math.log(2.0)


def q_function(x):
    """Gaussian upper tail probability."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def q_inverse(p):
    """Inverse of :func:`q_function` on ``(0, 1)``."""
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr > 0) & (arr < 1))):
        raise DomainError(f"q_inverse needs p in (0, 1), got {p!r}")
    out = -ndtri(arr)
    return float(out) if np.ndim(out) == 0 else out


def q_inverse_log(log_p):
    """``q_inverse(exp(log_p))`` without underflow for very small ``p``."""
    arr = np.asarray(log_p, dtype=float)
    if np.any(~(arr < 0)):
        raise DomainError(f"q_inverse_log needs log_p < 0, got {log_p!r}")
    out = -ndtri_exp(arr)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class RatePoint:
    blocklength: int
    error_prob: float
    rate: float
    residual: float = 0.0
    stderr: float = 0.0


@dataclass(frozen=True)
class FadingSamples:
    """Per-realization conditional capacity (bits) and dispersion (bits^2).

    This is the common-random-number view every expectation over the fading
    state is taken from. ``deterministic`` builds a one-point stub channel.
    """

    capacity: np.ndarray
    dispersion: np.ndarray
    seed: int | None = None

    @classmethod
    def from_config(cls, config: ChannelConfig, mc: MonteCarloSpec) -> "FadingSamples":
        g = eigen_snrs(config, eigenvalue_samples(config, mc))
        return cls(_capacity(g), _dispersion(g), mc.seed)

    @classmethod
    def deterministic(cls, capacity: float, dispersion: float = 0.0) -> "FadingSamples":
        return cls(np.array([float(capacity)]), np.array([float(dispersion)]))

    @property
    def size(self) -> int:
        return int(self.capacity.size)

    @property
    def is_degenerate(self) -> bool:
        return bool(np.ptp(self.capacity) == 0 and np.ptp(self.dispersion) == 0)


def resolve_samples(channel, mc: MonteCarloSpec | None = None) -> FadingSamples:
    """Accept either a :class:`FadingSamples` or a config plus Monte Carlo spec."""
    if isinstance(channel, FadingSamples):
        return channel
    if mc is None:
        raise DomainError("a MonteCarloSpec is required when passing a ChannelConfig")
    return FadingSamples.from_config(channel, mc)


def _capacity(g):
    return np.log2(1.0 + g).sum(axis=-1)


def _dispersion(g):
    return (1.0 - (1.0 + g) ** -2).sum(axis=-1) * LOG2E ** 2


def conditional_capacity(config: ChannelConfig, e) -> float:
    """``log2 det(I + SNR/n_tx * H H^H)`` written over the eigenmodes."""
    g = eigen_snrs(config, e)
    return float(_capacity(g)) if g.ndim == 1 else _capacity(g)


def conditional_dispersion(config: ChannelConfig, e) -> float:
    g = eigen_snrs(config, e)
    return float(_dispersion(g)) if g.ndim == 1 else _dispersion(g)


def ergodic_capacity(config: ChannelConfig, mc: MonteCarloSpec) -> MonteCarloEstimate:
    return summarize(FadingSamples.from_config(config, mc).capacity, mc)


def expected_log2_chi2(dof: int) -> float:
    """``E[log2 X]`` for a standard chi-square variable with ``dof`` degrees."""
    return (digamma(dof / 2.0) + LN2) / LN2


def high_snr_capacity(config: ChannelConfig) -> float:
    """High-SNR ergodic capacity with the O(1) remainder dropped.

    ``det(H H^H)`` for unit-variance complex entries is a product of
    ``chi2_{2i} / 2`` variables, hence the ``- 1`` per mode.
    """
    snr = average_snr(config)
    if not snr > 0:
        raise DomainError("high-SNR capacity needs a positive average SNR")
    lo = abs(config.n_tx - config.n_rx) + 1
    hi = max(config.n_tx, config.n_rx)
    chi_terms = sum(expected_log2_chi2(2 * i) - 1.0 for i in range(lo, hi + 1))
    return config.n_modes * math.log2(snr / config.n_tx) + chi_terms


def error_prob_residual(samples: FadingSamples, rate, n: int):
    """Per-realization ``Q((C - R) / sqrt(V / n))``; zero dispersion is a step."""
    c, v = samples.capacity, samples.dispersion
    gap = c - rate
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(v > 0, gap * np.sqrt(n / np.where(v > 0, v, 1.0)), np.sign(gap) * np.inf)
    return 0.5 * erfc(z / math.sqrt(2.0))


def solve_normal_approx_rate(channel, n: int, eps: float, mc: MonteCarloSpec | None = None,
                             rate_tol: float = 1e-10, min_blocklength: int = 50) -> RatePoint:
    """Rate ``R`` solving ``E[Q((C - R) / sqrt(V / n))] = eps`` by bisection.

    Uses common random numbers, so the residual is a deterministic
    nondecreasing function of ``R``. A degenerate (one-point) channel is solved
    in closed form.
    """
    if n < min_blocklength:
        raise DomainError(f"normal approximation needs n >= {min_blocklength}, got {n}")
    if not 0 < eps < 1:
        raise DomainError(f"eps must lie in (0, 1), got {eps!r}")
    samples = resolve_samples(channel, mc)

    if samples.is_degenerate:
        c, v = float(samples.capacity[0]), float(samples.dispersion[0])
        rate = c - math.sqrt(v / n) * q_inverse(eps) if v > 0 else c
        if rate < 0:
            raise InfeasibleTargetError(f"eps={eps} needs a negative rate ({rate:.4g})")
        resid = float(error_prob_residual(samples, rate, n)[0]) - eps
        return RatePoint(n, eps, rate, resid, 0.0)

    def residual(r):
        return float(error_prob_residual(samples, r, n).mean()) - eps

    c = samples.capacity
    upper = float(c.mean() + 10.0 * c.std(ddof=1))
    if residual(upper) < 0:
        upper = float(c.max() + 10.0 * math.sqrt(samples.dispersion.max() / n))
    rate = bisect_increasing(residual, 0.0, upper, xtol=rate_tol)
    terms = error_prob_residual(samples, rate, n)
    return RatePoint(n, eps, rate, float(terms.mean()) - eps,
                     float(terms.std(ddof=1) / math.sqrt(terms.size)))


def rate_from_reliability(capacity, dispersion, theta_err, n: int):
    """``C - sqrt(V / n) * Qinv(exp(-n * theta_err))``.

    Requires ``exp(-n * theta_err) < 1/2``. Not clipped at zero; callers that
    need a physical service rate clip it themselves.
    """
    theta_err = np.asarray(theta_err, dtype=float)
    if np.any(~(n * theta_err > LN2)):
        raise DomainError(
            f"exp(-n*theta_err) must be below 1/2 (n*theta_err > ln 2), got n*theta_err={n * theta_err}"
        )
    dispersion = np.asarray(dispersion, dtype=float)
    if np.any(dispersion < 0):
        raise DomainError("dispersion must be nonnegative")
    q = -ndtri_exp(-n * theta_err)
    out = np.asarray(capacity, dtype=float) - np.sqrt(dispersion / n) * q
    return float(out) if np.ndim(out) == 0 else out
